"""Landau coefficients A[f], b[f], the collision operator in divergence form
and sup-norm probes of singular convolutions.

    q(f) = div(A[f] grad f - b[f] f)
    A[f] = f * (|z|^gamma a(z)),   b[f] = -2 f * (|z|^gamma z)
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from landau_fisher.convolution import Convolver
from landau_fisher.grid import Density, GridError, VelocityGrid, gradient, integrate, weighted_lp_norm, WeightedNorm
from landau_fisher.kernels import CUTOFF, RAW, KernelSpec, alpha_tilde, origin_cell_average

SYM_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class CoefficientFields:
    A: np.ndarray  # (3, 3, n, n, n)
    b: np.ndarray  # (3, n, n, n)

    def min_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(np.moveaxis(self.A, (0, 1), (-2, -1)))[..., 0]

    def max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(np.moveaxis(self.A, (0, 1), (-2, -1)))[..., -1].max())


def _radial_profile(r: np.ndarray, power: float, spec: KernelSpec | None) -> np.ndarray:
    """|z|^power, or alpha_tilde(|z|) |z|^(power - gamma) in cutoff mode."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec is None or spec.cutoff_mode == RAW:
            return r**power
        return alpha_tilde(r, spec) * r ** (power - spec.gamma)


def _origin_average(grid: VelocityGrid, power: float, spec: KernelSpec | None) -> float:
    if spec is None or spec.cutoff_mode == RAW:
        return origin_cell_average(float(power), grid.h)
    return origin_cell_average(float(power), grid.h, CUTOFF, float(spec.gamma))


def _components(z: np.ndarray, power: float, spec: KernelSpec | None, kind: str) -> list[np.ndarray]:
    r = np.sqrt(np.sum(z * z, axis=0))
    base = _radial_profile(r, power, spec)
    if kind == "radial":
        return [base]
    out = [base * ((r * r) * (i == j) - z[i] * z[j]) for i, j in SYM_INDEX]
    return out + [-2.0 * base * z[i] for i in range(3)]


def _cell_averages(grid: VelocityGrid, power: float, spec: KernelSpec | None, kind: str,
                   far_nodes: int = 4, near_nodes: int = 6, near_split: int = 3, near_shells: int = 3) -> list[np.ndarray]:
    """Cell averages of the kernel components over every lattice cell except the origin.

    Tensor Gauss-Legendre on each cell; cells within ``near_shells`` of the
    origin (max-norm) are subdivided because the kernel varies fast there.
    """
    z0 = grid.offsets()
    h = grid.h
    x, w = np.polynomial.legendre.leggauss(far_nodes)
    acc = None
    for a in range(far_nodes):
        for b in range(far_nodes):
            for c in range(far_nodes):
                shift = 0.5 * h * np.array([x[a], x[b], x[c]])[:, None, None, None]
                vals = _components(z0 + shift, power, spec, kind)
                wt = w[a] * w[b] * w[c] / 8.0
                acc = [wt * v for v in vals] if acc is None else [s + wt * v for s, v in zip(acc, vals)]
    # refine near shells
    n = grid.n
    m = min(near_shells, n - 1)
    sl = (slice(n - 1 - m, n + m),) * 3
    zn = z0[(slice(None),) + sl]
    xs, ws = np.polynomial.legendre.leggauss(near_nodes)
    sub = (np.arange(near_split) + 0.5) / near_split - 0.5  # sub-cell centres in cell units
    nodes = (sub[:, None] + xs[None, :] / (2 * near_split)).ravel()
    weights = np.tile(ws / (2 * near_split), near_split)
    near = None
    for a in range(nodes.size):
        for b in range(nodes.size):
            shift_ab = h * np.array([nodes[a], nodes[b], 0.0])
            wab = weights[a] * weights[b]
            for c in range(nodes.size):
                shift = (shift_ab + h * np.array([0.0, 0.0, nodes[c]]))[:, None, None, None]
                vals = _components(zn + shift, power, spec, kind)
                wt = wab * weights[c]
                near = [wt * v for v in vals] if near is None else [s + wt * v for s, v in zip(near, vals)]
    for full, part in zip(acc, near):
        full[sl] = part
    return acc


@lru_cache(maxsize=16)
def _kernel_lattices(n: int, L: float, power: float, gamma: float | None, mode: str, kind: str) -> tuple:
    grid = VelocityGrid(n, L)
    spec = None if gamma is None else KernelSpec(gamma, 0.0, mode)
    comps = _cell_averages(grid, power, spec, kind)
    c = n - 1
    origin = _origin_average(grid, power if kind == "radial" else power + 2, spec)
    if kind == "radial":
        comps[0][c, c, c] = origin
    else:
        for idx, (i, j) in enumerate(SYM_INDEX):
            comps[idx][c, c, c] = (2.0 / 3.0) * origin if i == j else 0.0
        for idx in range(6, 9):
            comps[idx][c, c, c] = 0.0
    for arr in comps:
        arr.setflags(write=False)
    return tuple(comps)


def diffusion_kernels(grid: VelocityGrid, spec: KernelSpec) -> dict:
    """Cell-averaged kernel lattices for the six A components and three b components.

    The origin cell carries its exact average, (2/3) avg|w|^(gamma+2) I for
    A and 0 for b; every other cell is averaged by Gauss-Legendre quadrature.
    """
    comps = _kernel_lattices(grid.n, grid.L, float(spec.gamma), float(spec.gamma), spec.cutoff_mode, "diffusion")
    kernels = {("A", i, j): comps[idx] for idx, (i, j) in enumerate(SYM_INDEX)}
    for i in range(3):
        kernels[("b", i)] = comps[6 + i]
    return kernels


def coefficient_fields(f: Density, spec: KernelSpec, method: str = "auto") -> CoefficientFields:
    grid = f.grid
    conv = Convolver(grid, method)
    ft = conv.transform_field(f.values)
    A = np.empty((3, 3) + grid.shape)
    b = np.empty((3,) + grid.shape)
    for key, kern in diffusion_kernels(grid, spec).items():
        out = conv.apply(conv.transform(kern), ft)
        if key[0] == "A":
            A[key[1], key[2]] = out
            A[key[2], key[1]] = out
        else:
            b[key[1]] = out
    return CoefficientFields(A, b)


def radial_convolution(f: Density, power: float, method: str = "auto", spec: KernelSpec | None = None) -> np.ndarray:
    """f * |.|^power with the same cell-averaging rule as the diffusion kernels."""
    grid = f.grid
    gamma = None if spec is None else float(spec.gamma)
    mode = RAW if spec is None else spec.cutoff_mode
    (kern,) = _kernel_lattices(grid.n, grid.L, float(power), gamma, mode, "radial")
    return Convolver(grid, method)(kern, f.values)


def _bernoulli(x: np.ndarray) -> np.ndarray:
    """B(x) = x / (e^x - 1), with B(0) = 1."""
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x + x * x / 12.0, safe / np.expm1(safe))


def _shift(u: np.ndarray, axis: int, step: int) -> np.ndarray:
    """u at index i + step along axis, replicating the edge value outside the grid."""
    n = u.shape[axis]
    idx = np.clip(np.arange(n) + step, 0, n - 1)
    return np.take(u, idx, axis=axis)


SCHEMES = ("hybrid", "central", "monotone")
PECLET_SWITCH = 2.0


def radial_peclet(coeffs: CoefficientFields, h: float) -> np.ndarray:
    """Cell Peclet number along the drift, h |b|^3 / (b . A b)."""
    b = coeffs.b
    bab = np.einsum("i...,ij...,j...->...", b, coeffs.A, b)
    return h * np.sum(b * b, axis=0) ** 1.5 / np.maximum(bab, 1e-300)


def _face_slices(ax: int) -> tuple[tuple, tuple]:
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[ax] = slice(0, -1)
    hi[ax] = slice(1, None)
    return tuple(lo), tuple(hi)


def tail_faces(coeffs: CoefficientFields, h: float, switch: float = PECLET_SWITCH) -> list[np.ndarray]:
    """Faces next to a cell whose radial Peclet number exceeds ``switch``, one mask per axis."""
    pe = radial_peclet(coeffs, h)
    out = []
    for ax in range(3):
        lo, hi = _face_slices(ax)
        out.append(np.maximum(pe[lo], pe[hi]) > switch)
    return out


def face_fluxes(values: np.ndarray, coeffs: CoefficientFields, h: float, scheme: str = "hybrid",
                tails: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Fluxes A grad f - b f on interior faces, one array per axis.

    Face coefficients are arithmetic means of the two adjacent cells.

    ``central``: two-point normal flux with the averaged drift; tangential
    derivatives are averaged cell-centred differences. Second order, but not
    positive once the drift dominates the diffusion across a cell.

    ``monotone``: the normal part a f' - b f uses the Scharfetter-Gummel flux
    (a/h)[B(P) f_hi - B(-P) f_lo], P = b h / a; the tangential part a_xy d_y f
    takes one-sided differences along the diagonal matching the sign of a_xy,
    the positive seven-point mixed stencil when |a_xy| <= a_xx.

    ``hybrid``: ``monotone`` on the tail faces (radial Peclet number above 2,
    i.e. |v| h / T > 2 in a Gaussian tail), ``central`` elsewhere.

    Boundary faces carry no flux.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown flux scheme {scheme!r}; expected one of {SCHEMES}")
    grad = np.stack([np.gradient(values, h, axis=ax, edge_order=2) for ax in range(3)])
    if scheme != "central":
        fwd = [(_shift(values, j, 1) - values) / h for j in range(3)]
        bwd = [(values - _shift(values, j, -1)) / h for j in range(3)]
    if scheme == "hybrid" and tails is None:
        tails = tail_faces(coeffs, h)
    fluxes = []
    for ax in range(3):
        lo, hi = _face_slices(ax)
        if scheme == "central":
            tail = np.zeros(values[lo].shape, dtype=bool)
        elif scheme == "monotone":
            tail = np.ones(values[lo].shape, dtype=bool)
        else:
            tail = tails[ax]
        b_face = 0.5 * (coeffs.b[ax][lo] + coeffs.b[ax][hi])
        a_nn = 0.5 * (coeffs.A[ax, ax][lo] + coeffs.A[ax, ax][hi])
        flux = a_nn * (values[hi] - values[lo]) / h - b_face * 0.5 * (values[lo] + values[hi])
        if tail.any():
            P = b_face * h / np.maximum(a_nn, 1e-300)
            sg = (a_nn / h) * (_bernoulli(P) * values[hi] - _bernoulli(-P) * values[lo])
            flux = np.where(tail, sg, flux)
        for j in range(3):
            if j == ax:
                continue
            a_face = 0.5 * (coeffs.A[ax, j][lo] + coeffs.A[ax, j][hi])
            d = 0.5 * (grad[j][lo] + grad[j][hi])
            if tail.any():
                plus = 0.5 * (fwd[j][hi] + bwd[j][lo])
                minus = 0.5 * (bwd[j][hi] + fwd[j][lo])
                d = np.where(tail, np.where(a_face >= 0, plus, minus), d)
            flux = flux + a_face * d
        fluxes.append(flux)
    return fluxes


def flux_divergence(fluxes: list[np.ndarray], h: float, shape) -> np.ndarray:
    out = np.zeros(shape)
    for ax, flux in enumerate(fluxes):
        pad = [(0, 0)] * 3
        pad[ax] = (1, 1)
        full = np.pad(flux, pad)
        hi = [slice(None)] * 3
        lo = [slice(None)] * 3
        hi[ax] = slice(1, None)
        lo[ax] = slice(0, -1)
        out += (full[tuple(hi)] - full[tuple(lo)]) / h
    return out


def maxwellian_like(f: Density) -> Density:
    """Grid Maxwellian with the discrete mass, momentum and energy of f."""
    g = f.grid
    m = integrate(g, f.values)
    u = np.array([integrate(g, g.mesh[i] * f.values) for i in range(3)]) / m
    T = (integrate(g, g.speed_sq * f.values) / m - u @ u) / 3.0
    if not T > 0:
        raise GridError("density has no positive temperature")
    d = g.mesh - u[:, None, None, None]
    return f.with_values(m * (2 * np.pi * T) ** -1.5 * np.exp(-np.sum(d * d, axis=0) / (2 * T)))


def balance_source(f: Density, spec: KernelSpec, coeffs: CoefficientFields, scheme: str = "hybrid") -> np.ndarray:
    """Minus the scheme's residual at the matching grid Maxwellian.

    The Maxwellian fluxes are dropped on tail faces, where the correction is
    below the level of the tail itself and would only drive cells negative.
    Being a divergence of face fluxes, the source carries no mass.
    """
    h = f.grid.h
    m = maxwellian_like(f)
    tails = tail_faces(coeffs, h)
    fm = face_fluxes(m.values, coefficient_fields(m, spec), h, scheme, tails)
    fm = [np.where(t, 0.0, fl) for t, fl in zip(tails, fm)]
    return -flux_divergence(fm, h, f.grid.shape)


def collision_q(f: Density, spec: KernelSpec, coeffs: CoefficientFields | None = None,
                scheme: str = "hybrid", balanced: bool = False) -> np.ndarray:
    """Discrete q(f) = div(A[f] grad f - b[f] f) in conservative flux form.

    ``balanced`` adds balance_source, which makes the grid Maxwellian an exact
    fixed point; the added term is the O(h^2) residual of the scheme at
    equilibrium and conserves mass exactly.
    """
    if coeffs is None:
        coeffs = coefficient_fields(f, spec)
    h = f.grid.h
    q = flux_divergence(face_fluxes(f.values, coeffs, h, scheme), h, f.grid.shape)
    if balanced:
        q = q + balance_source(f, spec, coeffs, scheme)
    return q


def conservation_rates(f: Density, q: np.ndarray) -> dict:
    """d/dt of mass, momentum and energy implied by a right-hand side q."""
    g = f.grid
    return {
        "mass": integrate(g, q),
        "momentum": np.array([integrate(g, g.mesh[i] * q) for i in range(3)]),
        "energy": integrate(g, g.speed_sq * q),
        "abs": integrate(g, np.abs(q)),
    }


def lower_diffusion_constant(f: Density, coeffs: CoefficientFields, gamma: float) -> float:
    """Smallest c0 with lambda_min(A[f](v)) >= c0 <v>^gamma over all cells."""
    return float(np.min(coeffs.min_eigenvalues() / f.grid.bracket(gamma)))


@dataclass(frozen=True)
class ConvolutionProbe:
    sup_ratio: float  # sup_v <v>^(-mu) (f * |.|^mu)(v)
    norm: float  # ||f||_{L^p_k}
    sup_conv: float  # ||f * |.|^mu||_inf
    weighted_constant: float  # sup_ratio / norm
    interpolation_constant: float  # sup_conv / (||f||_1^(1+mu/3) ||f||_inf^(-mu/3))


def convolution_bound_probe(f: Density, mu: float, p: float, k: float) -> ConvolutionProbe:
    if not (-3.0 < mu < 0.0):
        raise GridError(f"mu must lie in (-3, 0), got {mu}")
    conv = radial_convolution(f, mu)
    sup_ratio = float(np.max(f.grid.bracket(-mu) * conv))
    norm = weighted_lp_norm(f, WeightedNorm(p, k))
    l1 = weighted_lp_norm(f, WeightedNorm(1, 0))
    linf = weighted_lp_norm(f, WeightedNorm(np.inf, 0))
    sup_conv = float(np.max(conv))
    return ConvolutionProbe(
        sup_ratio=sup_ratio,
        norm=norm,
        sup_conv=sup_conv,
        weighted_constant=sup_ratio / norm,
        interpolation_constant=sup_conv / (l1 ** (1 + mu / 3) * linf ** (-mu / 3)),
    )
