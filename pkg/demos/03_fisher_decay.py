"""Shape of the Fisher information decay on a sharp initial datum.

i(t) <= C0 (1 + 1/t) says that g(t) = t i(t) / (1 + t) stays bounded by
its early maximum. A narrow cold bump on a broad background starts with
about twice the final Fisher information; g rises quickly and then levels off.
"""

# %%
import numpy as np

from landau_fisher import evolution
from landau_fisher.evolution import InitialData, RunControls
from landau_fisher.grid import make_grid
from landau_fisher.kernels import KernelSpec

data = InitialData("bimaxwellian", mass=0.1, means=((0.0, 0.0, 0.0), (0.8, 0.0, 0.0)),
                   temperatures=(1.0, 0.15), masses=(0.5, 0.5))
rec = evolution.run(data, KernelSpec(-3.0), 60.0, RunControls(stride=0), make_grid(16, 3.0))
t, i = rec.series("t"), rec.series("fisher")

# %% g(t) at a few times
g = t[1:] * i[1:] / (1 + t[1:])
for k in np.unique(np.geomspace(1, len(g), 12).astype(int)) - 1:
    print(f"t={t[k + 1]:8.3f}  i={i[k + 1]:.5f}  t i/(1+t)={g[k]:.5f}")

# %% the check and its falsifier
d = evolution.fisher_decay_check(t, i)
print(f"late/early = {d.late_max / d.early_max:.4f}  C0 fit {d.c0_fit:.4f}  passed {d.passed}")
grow = evolution.fisher_decay_check(np.linspace(0, 10, 101), 1 + 0.5 * np.linspace(0, 10, 101))
print(f"increasing series passes? {grow.passed}")
