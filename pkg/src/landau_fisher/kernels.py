"""Interaction kernels: a(z), b_k(z), alpha, the cutoff alpha_tilde and its
blend function eta, plus the cell-average quadrature used for the
singular origin cell of convolution kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as spi

RAW = "raw"
CUTOFF = "cutoff"

# Skew matrices E_k with E_k z = e_k x z.
SKEW = np.zeros((3, 3, 3))
for _k in range(3):
    _e = np.eye(3)[_k]
    for _j in range(3):
        SKEW[_k][:, _j] = np.cross(_e, np.eye(3)[_j])
del _k, _e, _j


def _blend_coefficients() -> np.ndarray:
    """Quintic on [1/2, 1] matching (value, slope, curvature) of r^5 at 1/2 and of 1 at 1."""
    rows, rhs = [], []
    for r0, vals in ((0.5, (0.5**5, 5 * 0.5**4, 20 * 0.5**3)), (1.0, (1.0, 0.0, 0.0))):
        for d, target in enumerate(vals):
            row = np.zeros(6)
            for p in range(d, 6):
                row[p] = np.prod(np.arange(p - d + 1, p + 1)) * r0 ** (p - d)
            rows.append(row)
            rhs.append(target)
    return np.linalg.solve(np.array(rows), np.array(rhs))


# Power-basis coefficients c_p of the blend sum_p c_p r^p on [1/2, 1].
ETA_BLEND = _blend_coefficients()


def eta(r, deriv: int = 0, table: np.ndarray | None = None) -> np.ndarray:
    """Cutoff profile: r^5 on [0, 1/2], quintic blend on [1/2, 1], 1 beyond."""
    c = ETA_BLEND if table is None else table
    r = np.asarray(r, dtype=float)
    inner = {0: r**5, 1: 5 * r**4, 2: 20 * r**3}[deriv]
    poly = np.polynomial.polynomial.Polynomial(c).deriv(deriv)(r)
    outer = 1.0 if deriv == 0 else 0.0
    return np.where(r <= 0.5, inner, np.where(r < 1.0, poly, outer))


def eta_self_test(table: np.ndarray | None = None, samples: int = 20001) -> dict:
    """Measure the properties of eta used downstream; sup eta'' is reported, not assumed."""
    r = np.linspace(0.0, 1.5, samples)
    e0, e1, e2 = (eta(r, d, table) for d in range(3))
    tol = 1e-12
    knots = {}
    for d in range(3):
        for r0 in (0.5, 1.0):
            left = eta(r0 - 1e-9, d, table)
            right = eta(r0 + 1e-9, d, table)
            knots[(d, r0)] = abs(float(left - right))
    checks = {
        "eta(1/2)=1/32": abs(float(eta(0.5, 0, table)) - 1 / 32) < tol,
        "eta(1)=1": abs(float(eta(1.0, 0, table)) - 1.0) < tol,
        "increasing": bool(np.all(e1 >= -tol) and np.all(np.diff(e0) >= -tol)),
        "C2 at knots": all(v < 1e-6 for v in knots.values()),
    }
    return {
        "checks": checks,
        "passed": all(checks.values()),
        "sup_eta_dd": float(e2.max()),
        "sup_eta_d": float(e1.max()),
    }


@dataclass(frozen=True)
class KernelSpec:
    """Interaction potential alpha(r) = r^gamma, optionally cut off near 0.

    ``epsilon`` regularises the raw kernel as (r^2 + eps^2)^(gamma/2) in
    pair functionals only; convolution coefficients never need it.
    """

    gamma: float = -3.0
    epsilon: float = 0.0
    cutoff_mode: str = RAW
    eta_sup_dd: float = field(init=False)

    def __post_init__(self):
        if not (-3.0 <= self.gamma < -2.0):
            raise ValueError(f"gamma must lie in [-3, -2), got {self.gamma}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.cutoff_mode not in (RAW, CUTOFF):
            raise ValueError(f"cutoff_mode must be {RAW!r} or {CUTOFF!r}")
        object.__setattr__(self, "eta_sup_dd", eta_self_test()["sup_eta_dd"])

    def with_mode(self, mode: str) -> "KernelSpec":
        return KernelSpec(self.gamma, self.epsilon, mode)


def a_matrix(z) -> np.ndarray:
    """a(z) = |z|^2 I - z z^T for z of shape (..., 3); returns (..., 3, 3)."""
    z = np.asarray(z, dtype=float)
    zz = np.einsum("...i,...j->...ij", z, z)
    return np.einsum("...,ij->...ij", np.sum(z * z, axis=-1), np.eye(3)) - zz


def b_field(k: int, z) -> np.ndarray:
    """b_k(z) = e_k x z (0-based axis index k)."""
    if k not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2, got {k}")
    return np.cross(np.eye(3)[k], np.asarray(z, dtype=float))


def alpha(r, spec: KernelSpec) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if spec.cutoff_mode == CUTOFF:
        return alpha_tilde(r, spec)
    with np.errstate(divide="ignore"):
        return (r * r + spec.epsilon**2) ** (0.5 * spec.gamma)


def alpha_tilde(r, spec: KernelSpec) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = r ** (5.0 + spec.gamma)
        val = eta(r) * r**spec.gamma
    return np.where(r <= 0.5, inner, val)


def sqrt_alpha_and_slope(r, spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """sqrt(alpha(r)) and its r-derivative, for r > 0."""
    r = np.asarray(r, dtype=float)
    g = spec.gamma
    if spec.cutoff_mode == RAW:
        s = r * r + spec.epsilon**2
        return s ** (0.25 * g), 0.5 * g * r * s ** (0.25 * g - 1.0)
    e0, e1 = eta(r), eta(r, 1)
    root = np.sqrt(e0) * r ** (0.5 * g)
    slope = np.where(
        r <= 0.5,
        0.5 * (5 + g) * r ** (0.5 * (3 + g)),
        0.5 * e1 / np.sqrt(np.maximum(e0, 1e-300)) * r ** (0.5 * g) + np.sqrt(e0) * 0.5 * g * r ** (0.5 * g - 1),
    )
    return root, slope


def alpha_log_slope_weight(r, spec: KernelSpec) -> np.ndarray:
    """alpha'(r)^2 / (2 alpha(r)); equals (gamma^2/2) r^(gamma-2) for the pure power."""
    root, slope = sqrt_alpha_and_slope(r, spec)
    # alpha' = 2 sqrt(alpha) (sqrt alpha)'  =>  alpha'^2 / (2 alpha) = 2 (sqrt alpha)'^2
    return 2.0 * slope**2


def laplacian_alpha_tilde(r, gamma: float, table: np.ndarray | None = None) -> np.ndarray:
    """Laplacian in R^3 of z -> alpha_tilde(|z|)."""
    r = np.asarray(r, dtype=float)
    e0, e1, e2 = (eta(r, d, table) for d in range(3))
    return e2 * r**gamma + 2 * (gamma + 1) * e1 * r ** (gamma - 1) + gamma * (gamma + 1) * e0 * r ** (gamma - 2)


def j2_eta_constant(gamma: float, table: np.ndarray | None = None, samples: int = 200001) -> float:
    """sup_r 2^gamma (6 eta r^(gamma-2) + eta'' r^gamma) with our eta (26 for the idealised profile bound)."""
    r = np.linspace(1e-4, 4.0, samples)
    e0, e2 = eta(r, 0, table), eta(r, 2, table)
    bound = 6 * e0 * r ** (gamma - 2) + np.maximum(e2, 0.0) * r**gamma
    return float(2.0**gamma * bound.max())


# -- cell averages of radial kernels ------------------------------------------


def _radial_moment(profile, R: float) -> float:
    return spi.quad(lambda r: profile(r) * r * r, 0.0, R, limit=200, epsabs=0.0, epsrel=1e-13)[0]


def cube_average(profile, half_width: float, power: float | None = None, radial=None) -> float:
    """Average of profile(|w|) over the cube [-a, a]^3 by adaptive quadrature.

    The cube is split into the six pyramids over its faces; by symmetry one
    half-sector of one pyramid suffices. When ``profile`` is the pure power
    r^power the radial integral is taken in closed form; ``radial`` may
    supply any other closed form R -> int_0^R profile(r) r^2 dr.
    """
    a = half_width

    if radial is None:
        def radial(R):
            if power is not None:
                return R ** (power + 3) / (power + 3)
            return _radial_moment(profile, R)

    def inner(theta, phi):
        return np.sin(theta) * radial(a / np.cos(theta))

    val, _ = spi.dblquad(
        inner, 0.0, np.pi / 4, lambda phi: 0.0, lambda phi: np.arctan(1.0 / np.cos(phi)),
        epsabs=0.0, epsrel=1e-12,
    )
    octant = 6.0 * val
    return 8.0 * octant / (2 * a) ** 3


def _power_integral(lo: float, hi: float, k: float) -> float:
    """int_lo^hi r^k dr."""
    if abs(k + 1) < 1e-14:
        return float(np.log(hi / lo))
    return (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)


def eta_power_moment(R: float, q: float, table: np.ndarray | None = None) -> float:
    """int_0^R eta(r) r^q dr in closed form (eta is piecewise polynomial), q > -6."""
    c = ETA_BLEND if table is None else table
    out = min(R, 0.5) ** (6 + q) / (6 + q)
    if R > 0.5:
        top = min(R, 1.0)
        out += sum(cp * _power_integral(0.5, top, p + q) for p, cp in enumerate(c))
    if R > 1.0:
        out += _power_integral(1.0, R, q)
    return float(out)


@lru_cache(maxsize=64)
def origin_cell_average(power: float, h: float, mode: str = RAW, gamma: float | None = None) -> float:
    """Average over the origin cell of |w|^power (raw) or alpha_tilde(|w|) |w|^(power - gamma) (cutoff)."""
    if mode == RAW:
        return cube_average(None, 0.5 * h, power=power)
    # alpha_tilde(r) r^(power - gamma) = eta(r) r^power
    return cube_average(None, 0.5 * h, radial=lambda R: eta_power_moment(R, power + 2.0))
