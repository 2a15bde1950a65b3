"""Scalar functionals of a density: moments, entropy, L log L, Fisher
information and the weighted Hessian functional.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as spi

from landau_fisher.grid import Density, gradient, integrate, log_derivatives


@dataclass(frozen=True)
class HydrodynamicState:
    mass: float
    momentum: np.ndarray
    energy: float  # second moment int f |v|^2
    entropy: float
    l_log_l: float  # int f |log f|


@dataclass(frozen=True)
class FisherReport:
    i_grad_form: float  # int f |grad log f|^2
    i_ratio_form: float  # int |grad f|^2 / f
    i_sqrt_form: float  # 4 int |grad sqrt f|^2
    floored_mass_fraction: float

    @property
    def chosen(self) -> float:
        return self.i_sqrt_form

    def spread(self) -> float:
        """Largest pairwise relative difference of the three forms."""
        vals = np.array([self.i_grad_form, self.i_ratio_form, self.i_sqrt_form])
        scale = np.max(np.abs(vals))
        return 0.0 if scale == 0 else float((vals.max() - vals.min()) / scale)


def _region(f: Density, interior: bool | int) -> np.ndarray | None:
    if interior is False:
        return None
    margin = 2 if interior is True else int(interior)
    return f.grid.interior_mask(margin)


def _masked(values: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return values if mask is None else np.where(mask, values, 0.0)


def _f_log_f(f: Density) -> np.ndarray:
    logf = log_derivatives(f).log
    # cells with f == 0 contribute 0 (x log x -> 0)
    return np.where(f.values > 0, f.values * logf, 0.0)


def hydrodynamics(f: Density) -> HydrodynamicState:
    g = f.grid
    flogf = _f_log_f(f)
    return HydrodynamicState(
        mass=integrate(g, f.values),
        momentum=np.array([integrate(g, g.mesh[i] * f.values) for i in range(3)]),
        energy=integrate(g, g.speed_sq * f.values),
        entropy=integrate(g, flogf),
        l_log_l=integrate(g, np.abs(flogf)),
    )


@lru_cache(maxsize=1)
def gaussian_tail_constant() -> float:
    """2 int_R3 exp(-1 - |v|^2)(1 + |v|^2) dv by radial quadrature (closed form 5 pi^1.5 / e)."""
    val, _ = spi.quad(lambda r: np.exp(-1.0 - r * r) * (1.0 + r * r) * 4 * np.pi * r * r, 0.0, np.inf,
                      epsabs=0.0, epsrel=1e-13)
    return 2.0 * val


def l_log_l_bound(state: HydrodynamicState) -> float:
    """Upper bound on int f |log f| from mass, second moment and entropy."""
    return gaussian_tail_constant() + 2.0 * state.mass + 2.0 * state.energy + state.entropy


def l_log_l_bound_check(state: HydrodynamicState, tol: float = 1e-10) -> tuple[float, bool]:
    """Margin bound - int f|log f| and whether it is >= -tol."""
    margin = l_log_l_bound(state) - state.l_log_l
    return margin, bool(margin >= -tol)


def fisher(f: Density, interior: bool | int = False) -> FisherReport:
    """Fisher information in three algebraically equal forms.

    The square-root form is canonical: its integrand stays bounded where f
    is small and it never divides by f.
    """
    g = f.grid
    mask = _region(f, interior)
    logd = log_derivatives(f)
    vals = f.values
    grad_log_sq = np.sum(logd.grad**2, axis=0)
    grad_f = gradient(g, vals)
    delta = f.floor_delta
    ratio = np.sum(grad_f**2, axis=0) / np.maximum(vals, delta)
    grad_root = gradient(g, np.sqrt(vals))
    return FisherReport(
        i_grad_form=integrate(g, _masked(vals * grad_log_sq, mask)),
        i_ratio_form=integrate(g, _masked(ratio, mask)),
        i_sqrt_form=4.0 * integrate(g, _masked(np.sum(grad_root**2, axis=0), mask)),
        floored_mass_fraction=logd.floored_mass_fraction,
    )


def fisher_information(f: Density) -> float:
    return fisher(f).chosen


def weighted_hessian_functional(f: Density, gamma: float, interior: bool | int = False) -> float:
    """int <v>^(gamma-2) f ||Hess log f||_F^2."""
    if not (-3.0 <= gamma < -2.0):
        raise ValueError(f"gamma must lie in [-3, -2), got {gamma}")
    hess = log_derivatives(f).hess
    frob = np.sum(hess**2, axis=(0, 1))
    integrand = f.grid.bracket(gamma - 2.0) * f.values * frob
    return integrate(f.grid, _masked(integrand, _region(f, interior)))


@dataclass(frozen=True)
class CauchySchwarzChain:
    fisher: float
    hessian_weighted: float  # int <v>^(g-2) f ||Hess log f||^2
    laplacian_weighted: float  # int <v>^(g-2) f (Lap log f)^2
    moment: float  # int <v>^(2-g) f
    trace_gap: float  # hessian_weighted - laplacian_weighted / 3, >= 0
    product_gap: float  # laplacian_weighted * moment - fisher^2

    def holds(self, rel_tol: float = 1e-2) -> bool:
        scale = max(self.fisher**2, 1e-300)
        return self.trace_gap >= -1e-12 * max(self.hessian_weighted, 1e-300) and self.product_gap >= -rel_tol * scale


def cauchy_schwarz_chain(f: Density, gamma: float, interior: bool | int = True) -> CauchySchwarzChain:
    """Terms of the chain i(f)^2 <= int <v>^(g-2) f (Lap log f)^2 * int <v>^(2-g) f.

    The first link uses i(f) = -int f Lap log f, so it holds only up to the
    boundary and discretisation error of that integration by parts.
    """
    g = f.grid
    mask = _region(f, interior)
    hess = log_derivatives(f).hess
    lap = np.trace(hess, axis1=0, axis2=1)
    w = g.bracket(gamma - 2.0) * f.values
    hw = integrate(g, _masked(w * np.sum(hess**2, axis=(0, 1)), mask))
    lw = integrate(g, _masked(w * lap**2, mask))
    mom = integrate(g, _masked(g.bracket(2.0 - gamma) * f.values, mask))
    i = fisher(f, interior).chosen
    return CauchySchwarzChain(
        fisher=i,
        hessian_weighted=hw,
        laplacian_weighted=lw,
        moment=mom,
        trace_gap=hw - lw / 3.0,
        product_gap=lw * mom - i * i,
    )
