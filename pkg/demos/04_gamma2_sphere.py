"""Curvature ratio on the sphere.

For f = 1 + eps Y_l the ratio tends to the eigenvalue l(l+1). A projected
gradient descent over log f in even harmonics looks for the smallest ratio;
the degree-2 directions sit at 6, and mixing in higher degrees pulls the
minimum a little lower.
"""

# %%
from landau_fisher.gamma2 import SphereField, gamma2_ratio, linearized_ratio, probe_minimum

for l in (1, 2, 3, 4):
    print(f"l={l}: ratio {linearized_ratio(l):.5f}  eigenvalue {l * (l + 1)}")

# %% one explicit field, with both forms of the numerator
f = SphereField.from_log_coefficients((2, 4), [0.4, 0, -0.3, 0.2, 0.1, 0, 0.05, 0, 0, 0, -0.1, 0, 0, 0], 16, 32)
res = gamma2_ratio(f)
print(f"ratio {res.ratio:.5f}, numerator forms differ by {res.identity_gap():.1e}")

# %% a short probe (the acceptance run uses 20 seeds up to degree 6)
probe = probe_minimum(seed_count=4, max_harmonic_degree=4, steps=20)
print(f"min ratio {probe.min_ratio:.4f} per seed {[round(x, 4) for x in probe.per_seed]}")
print(probe.describe())
