"""Discrete velocity space.

Uniform cell-centred grid on [-L, L]^3, midpoint quadrature, finite
difference calculus and weighted Lebesgue norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class VelocityGrid:
    """Cell-centred grid with ``n`` cells per axis covering [-L, L]^3."""

    n: int
    L: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 4:
            raise GridError(f"need n >= 4 cells per axis, got {self.n!r}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise GridError(f"need finite L > 0, got {self.L!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis."""
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def mesh(self) -> np.ndarray:
        """Cell centres as an array of shape (3, n, n, n)."""
        return np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

    @cached_property
    def speed_sq(self) -> np.ndarray:
        return np.sum(self.mesh**2, axis=0)

    def bracket(self, power: float = 1.0) -> np.ndarray:
        """Japanese bracket <v>^power = (1 + |v|^2)^(power/2) at cell centres."""
        return (1.0 + self.speed_sq) ** (0.5 * power)

    def interior_mask(self, margin: int = 2) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        if 2 * margin < self.n:
            m[margin:-margin or None, margin:-margin or None, margin:-margin or None] = True
        return m

    def offsets(self) -> np.ndarray:
        """Pair separations v - w on the (2n-1)^3 difference lattice, shape (3, 2n-1, 2n-1, 2n-1)."""
        k = (np.arange(2 * self.n - 1) - (self.n - 1)) * self.h
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))


def make_grid(n: int, L: float) -> VelocityGrid:
    return VelocityGrid(int(n), float(L))


def integrate(grid: VelocityGrid, values: np.ndarray) -> float:
    """Midpoint rule h^3 * sum(values).

    numpy reduces contiguous arrays with a fixed pairwise tree, so the
    result is reproducible bit for bit.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[-3:] != grid.shape:
        raise GridError(f"field shape {values.shape} does not match grid {grid.shape}")
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise GridError(f"non-finite value at cell {idx}")
    return float(grid.cell_volume * np.sum(np.ascontiguousarray(values).ravel()))


# -- finite differences ------------------------------------------------------

DEFAULT_ORDER = 6


_D1 = {4: (np.array([1, -8, 0, 8, -1]), 12), 6: (np.array([-1, 9, -45, 0, 45, -9, 1]), 60)}
_D2 = {4: (np.array([-1, 16, -30, 16, -1]), 12), 6: (np.array([2, -27, 270, -490, 270, -27, 2]), 180)}


def _apply_wide(out, u, table, order, scale):
    # central stencils of increasing width overwrite the cells they can reach
    for o in (4, 6):
        if o > order:
            break
        coef, den = table[o]
        half = o // 2
        if u.shape[0] <= 2 * half:
            break
        acc = np.zeros_like(out[half:-half])
        for k, c in enumerate(coef):
            if c:
                acc += c * u[k : u.shape[0] - 2 * half + k]
        out[half:-half] = acc / (den * scale)


def _d1(u: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    u = np.moveaxis(u, axis, 0)
    out = np.empty_like(u)
    out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    out[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    _apply_wide(out, u, _D1, order, h)
    return np.moveaxis(out, 0, axis)


def _d2(u: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    u = np.moveaxis(u, axis, 0)
    out = np.empty_like(u)
    out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
    out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    _apply_wide(out, u, _D2, order, h * h)
    return np.moveaxis(out, 0, axis)


def _check_order(order: int):
    if order not in (2, 4, 6):
        raise GridError(f"stencil order must be 2, 4 or 6, got {order}")


def gradient(grid: VelocityGrid, values: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Gradient of a cell field, shape (3, n, n, n).

    Central differences of the given order in the interior, dropping to
    narrower central stencils near the ends and second-order one-sided
    differences on boundary cells.
    """
    _check_order(order)
    values = np.asarray(values, dtype=float)
    return np.stack([_d1(values, grid.h, ax, order) for ax in range(3)])


def hessian(grid: VelocityGrid, values: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Hessian of a cell field, shape (3, 3, n, n, n), symmetric by construction."""
    _check_order(order)
    values = np.asarray(values, dtype=float)
    h = grid.h
    out = np.empty((3, 3) + values.shape)
    first = [_d1(values, h, ax, order) for ax in range(3)]
    for i in range(3):
        out[i, i] = _d2(values, h, i, order)
        for j in range(i + 1, 3):
            mixed = 0.5 * (_d1(first[j], h, i, order) + _d1(first[i], h, j, order))
            out[i, j] = mixed
            out[j, i] = mixed
    return out


# -- densities ---------------------------------------------------------------


@dataclass(frozen=True)
class LogDerivatives:
    log: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    floored: np.ndarray
    floored_mass_fraction: float


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative cell values of f on a grid.

    ``floor`` is the absolute value substituted for f inside logarithms;
    when omitted it is ``floor_rel * max(f)``.
    """

    grid: VelocityGrid
    values: np.ndarray
    floor: float | None = None
    floor_rel: float = 1e-14
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != self.grid.shape:
            raise GridError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            idx = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
            raise GridError(f"non-finite density at cell {idx}")
        if np.any(vals < 0):
            idx = tuple(int(i) for i in np.argwhere(vals < 0)[0])
            raise GridError(f"negative density at cell {idx}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.floor is not None and not self.floor > 0:
            raise GridError("floor must be positive")

    @property
    def floor_delta(self) -> float:
        if self.floor is not None:
            return float(self.floor)
        return max(self.floor_rel * float(self.values.max()), 1e-300)

    def mass(self) -> float:
        return integrate(self.grid, self.values)

    def scaled(self, c: float) -> "Density":
        floor = None if self.floor is None else self.floor * c
        return Density(self.grid, c * self.values, floor=floor, floor_rel=self.floor_rel)

    def with_values(self, values: np.ndarray) -> "Density":
        return Density(self.grid, values, floor=self.floor, floor_rel=self.floor_rel)

    def fingerprint(self) -> int:
        return hash(self.values.tobytes())


def log_derivatives(f: Density, order: int = DEFAULT_ORDER) -> LogDerivatives:
    """log f, grad log f and Hessian of log f, computed from max(f, floor)."""
    key = ("logd", order)
    if key in f._cache:
        return f._cache[key]
    delta = f.floor_delta
    floored = f.values < delta
    logf = np.log(np.maximum(f.values, delta))
    total = float(np.sum(f.values))
    frac = float(np.sum(f.values[floored]) / total) if total > 0 else 0.0
    out = LogDerivatives(
        log=logf,
        grad=gradient(f.grid, logf, order),
        hess=hessian(f.grid, logf, order),
        floored=floored,
        floored_mass_fraction=frac,
    )
    f._cache[key] = out
    return out


@dataclass(frozen=True)
class WeightedNorm:
    """L^p_m norm: the L^p norm of <v>^m f."""

    p: float
    m: float = 0.0

    def __post_init__(self):
        if not self.p >= 1:
            raise GridError(f"need p >= 1, got {self.p}")


def weighted_lp_norm(f: Density, norm: WeightedNorm) -> float:
    g = f.grid.bracket(norm.m) * f.values
    if np.isinf(norm.p):
        return float(np.max(np.abs(g)))
    return integrate(f.grid, np.abs(g) ** norm.p) ** (1.0 / norm.p)
