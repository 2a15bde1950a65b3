"""Bakry-Emery Gamma_2 ratio on the unit sphere and a descent probe for its minimum.

For a positive f on S^2 with g = log f the ratio is

    sum_ij int f (b_i . grad (b_j . grad g))^2  /  sum_k int f (b_k . grad g)^2

with b_k(x) = e_k x x the rotation fields. Derivatives act on the
zero-homogeneous extension g(x / |x|) and are taken by central differences
of step h_s along the fields; g off the grid comes from its real
spherical-harmonic expansion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

E = np.eye(3)
DEGENERATE = 1e-12


class DegenerateInputError(ValueError):
    """The denominator vanishes (f constant up to the threshold)."""


# -- grid -----------------------------------------------------------------------


@lru_cache(maxsize=8)
def _nodes(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors (N, 3) and weights (N,) of the Gauss-Legendre x uniform grid, theta-major."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x[::-1])  # increasing colatitude
    wt = w[::-1]
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    weights = np.repeat(wt * (2 * np.pi / n_phi), n_phi)
    pts.setflags(write=False)
    weights.setflags(write=False)
    return pts, weights


def antipodal_index(n_theta: int, n_phi: int) -> np.ndarray:
    """Flat index of -sigma for every node."""
    it, ip = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    return ((n_theta - 1 - it) * n_phi + (ip + n_phi // 2) % n_phi).ravel()


@dataclass(frozen=True)
class SphereField:
    n_theta: int
    n_phi: int
    values: np.ndarray  # (n_theta * n_phi,), theta-major
    symmetric: bool = False
    log_coefficients: tuple | None = field(default=None, compare=False)  # (degrees, coeffs) if exact

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 4 or self.n_phi % 2:
            raise ValueError("need n_theta >= 2 and an even n_phi >= 4")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n_theta * self.n_phi,):
            raise ValueError(f"values must have shape ({self.n_theta * self.n_phi},), got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("values must be finite and positive")
        if self.symmetric:
            anti = v[antipodal_index(self.n_theta, self.n_phi)]
            if np.max(np.abs(anti - v)) > 1e-14 * np.max(np.abs(v)):
                raise ValueError("field flagged symmetric is not antipodally symmetric")
        object.__setattr__(self, "values", v)

    @property
    def points(self) -> np.ndarray:
        return _nodes(self.n_theta, self.n_phi)[0]

    @property
    def weights(self) -> np.ndarray:
        return _nodes(self.n_theta, self.n_phi)[1]

    def integral(self, values: np.ndarray | None = None) -> float:
        return float(np.sum(self.weights * (self.values if values is None else values)))

    @classmethod
    def from_function(cls, func, n_theta: int = 24, n_phi: int = 48, symmetric: bool = False) -> "SphereField":
        """Sample func on the nodes; func maps unit vectors of shape (N, 3) to (N,)."""
        pts, _ = _nodes(n_theta, n_phi)
        vals = np.asarray(func(pts), dtype=float)
        if symmetric:
            vals = 0.5 * (vals + vals[antipodal_index(n_theta, n_phi)])
        return cls(n_theta, n_phi, vals, symmetric)

    @classmethod
    def from_log_coefficients(cls, degrees: tuple, coeffs, n_theta: int = 24, n_phi: int = 48) -> "SphereField":
        """f = exp(sum c_lm Y_lm) over the real harmonics of the listed degrees, kept exactly."""
        coeffs = np.asarray(coeffs, dtype=float)
        pts, _ = _nodes(n_theta, n_phi)
        g = real_harmonics(pts, tuple(degrees)) @ coeffs
        symmetric = all(l % 2 == 0 for l in degrees)
        vals = np.exp(g)
        if symmetric:
            vals = 0.5 * (vals + vals[antipodal_index(n_theta, n_phi)])
        return cls(n_theta, n_phi, vals, symmetric, (tuple(degrees), coeffs))

    def scaled(self, c: float) -> "SphereField":
        coeffs = None
        if self.log_coefficients is not None:
            degrees, cf = self.log_coefficients
            if 0 in degrees:
                cf = cf.copy()
                cf[0] += np.log(c) * np.sqrt(4 * np.pi)
                coeffs = (degrees, cf)
        return SphereField(self.n_theta, self.n_phi, c * self.values, self.symmetric, coeffs)


def symmetrize(f: SphereField) -> SphereField:
    """(f(sigma) + f(-sigma)) / 2."""
    vals = 0.5 * (f.values + f.values[antipodal_index(f.n_theta, f.n_phi)])
    return SphereField(f.n_theta, f.n_phi, vals, True)


# -- real spherical harmonics ----------------------------------------------------


def harmonic_count(degrees) -> int:
    return sum(2 * l + 1 for l in degrees)


def _legendre_table(z: np.ndarray, lmax: int) -> np.ndarray:
    """Orthonormal associated Legendre functions without the Condon-Shortley phase, P[l, m, :]."""
    sin = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    P = np.zeros((lmax + 1, lmax + 1, z.size))
    P[0, 0] = 1.0 / np.sqrt(4 * np.pi)
    for m in range(1, lmax + 1):
        P[m, m] = np.sqrt((2 * m + 1) / (2.0 * m)) * sin * P[m - 1, m - 1]
    for m in range(0, lmax):
        P[m + 1, m] = np.sqrt(2 * m + 3.0) * z * P[m, m]
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            a_prev = np.sqrt((4.0 * (l - 1) ** 2 - 1) / ((l - 1) ** 2 - m * m))
            P[l, m] = a * (z * P[l - 1, m] - P[l - 2, m] / a_prev)
    return P


def real_harmonics(points: np.ndarray, degrees: tuple) -> np.ndarray:
    """Orthonormal real harmonics of the listed degrees at unit vectors (N, 3); columns ordered l, then m = -l..l.

    Y_l0 = P_l0, Y_lm = sqrt2 P_lm cos(m phi), Y_l,-m = sqrt2 P_lm sin(m phi) for m > 0.
    """
    degrees = tuple(degrees)
    if not degrees:
        return np.zeros((points.shape[0], 0))
    z = np.clip(points[:, 2], -1.0, 1.0)
    phi = np.arctan2(points[:, 1], points[:, 0])
    lmax = max(degrees)
    P = _legendre_table(z, lmax)
    cos = np.cos(np.arange(1, lmax + 1)[:, None] * phi[None, :])
    sin = np.sin(np.arange(1, lmax + 1)[:, None] * phi[None, :])
    cols = []
    for l in degrees:
        pos = np.sqrt(2.0) * P[l, 1:l + 1] * cos[:l]
        neg = np.sqrt(2.0) * P[l, 1:l + 1] * sin[:l]
        cols.append(neg[::-1])
        cols.append(P[l, :1])
        cols.append(pos)
    return np.concatenate(cols, axis=0).T


def project_log(f: SphereField, lmax: int | None = None) -> tuple[tuple, np.ndarray]:
    """Quadrature projection of log f onto real harmonics of degree <= lmax (default: grid band limit)."""
    if lmax is None:
        lmax = min(f.n_theta - 1, f.n_phi // 2 - 1)
    degrees = tuple(range(lmax + 1))
    Y = real_harmonics(f.points, degrees)
    return degrees, Y.T @ (f.weights * np.log(f.values))


# -- stencils -------------------------------------------------------------------


def _stencil(points: np.ndarray, h: float) -> np.ndarray:
    """Evaluation points (N, 61, 3), projected to the sphere.

    0..35:  x + s1 h b_i(x), then + s2 h b_j(y)   (i, j, s1, s2), nested field differences
    36..41: x + s h b_k(x)                       (k, s), first field differences
    42:     x
    43..48: x + s h e_k                          (k, s), Cartesian
    49..60: x + s h e_i + t h e_j, i < j          (pair, s, t), Cartesian mixed
    """
    N = points.shape[0]
    out = np.empty((N, 61, 3))
    signs = (1.0, -1.0)
    col = 0
    for i in range(3):
        for j in range(3):
            for s1 in signs:
                y = points + s1 * h * np.cross(E[i], points)
                for s2 in signs:
                    out[:, col] = y + s2 * h * np.cross(E[j], y)
                    col += 1
    for k in range(3):
        for s in signs:
            out[:, col] = points + s * h * np.cross(E[k], points)
            col += 1
    out[:, col] = points
    col += 1
    for k in range(3):
        for s in signs:
            out[:, col] = points + s * h * E[k]
            col += 1
    for i, j in ((0, 1), (0, 2), (1, 2)):
        for s in signs:
            for t in signs:
                out[:, col] = points + s * h * E[i] + t * h * E[j]
                col += 1
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


@lru_cache(maxsize=8)
def _stencil_basis(n_theta: int, n_phi: int, degrees: tuple, h: float) -> np.ndarray:
    pts, _ = _nodes(n_theta, n_phi)
    st = _stencil(pts, h).reshape(-1, 3)
    B = real_harmonics(st, degrees)
    B.setflags(write=False)
    return B


def _synthesize(points: np.ndarray, degrees: tuple, coeffs: np.ndarray, chunk: int = 8192) -> np.ndarray:
    out = np.empty(points.shape[0])
    for s in range(0, points.shape[0], chunk):
        out[s:s + chunk] = real_harmonics(points[s:s + chunk], degrees) @ coeffs
    return out


@dataclass(frozen=True)
class Gamma2Result:
    ratio: float
    numerator: float  # b-field form
    denominator: float
    intrinsic_numerator: float  # int f (|Hess_sigma g|^2 + |grad_sigma g|^2)

    def __iter__(self):
        return iter((self.ratio, self.numerator, self.denominator))

    def identity_gap(self) -> float:
        return abs(self.numerator - self.intrinsic_numerator) / max(abs(self.intrinsic_numerator), 1e-300)


def _forms(G: np.ndarray, points: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise numerator, denominator and intrinsic integrands from stencil values G (N, 61)."""
    nested = G[:, :36].reshape(-1, 3, 3, 2, 2)
    # d_i d_j g = [G_j(x + h b_i) - G_j(x - h b_i)] / 2h, G_j(y) = [g(y + h b_j) - g(y - h b_j)] / 2h
    inner = (nested[..., 0] - nested[..., 1]) / (2 * h)  # (N, i, j, s1)
    dd = (inner[..., 0] - inner[..., 1]) / (2 * h)
    num = np.sum(dd * dd, axis=(1, 2))
    first = G[:, 36:42].reshape(-1, 3, 2)
    bk = (first[..., 0] - first[..., 1]) / (2 * h)
    den = np.sum(bk * bk, axis=1)
    c = G[:, 42]
    ax = G[:, 43:49].reshape(-1, 3, 2)
    grad = (ax[..., 0] - ax[..., 1]) / (2 * h)
    hess = np.empty((G.shape[0], 3, 3))
    for k in range(3):
        hess[:, k, k] = (ax[:, k, 0] - 2 * c + ax[:, k, 1]) / (h * h)
    mixed = G[:, 49:61].reshape(-1, 3, 2, 2)
    for p, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        m = mixed[:, p]
        val = (m[:, 0, 0] - m[:, 0, 1] - m[:, 1, 0] + m[:, 1, 1]) / (4 * h * h)
        hess[:, i, j] = hess[:, j, i] = val
    # zero-homogeneous extension: Hess_sigma g = P D^2 G P, grad_sigma g = D G on the sphere
    P = np.eye(3)[None] - points[:, :, None] * points[:, None, :]
    hs = P @ hess @ P
    intrinsic = np.sum(hs * hs, axis=(1, 2)) + np.sum(grad * grad, axis=1)
    return num, den, intrinsic


def _ratio_from(values: np.ndarray, weights: np.ndarray, G: np.ndarray, points: np.ndarray, h: float) -> Gamma2Result:
    num, den, intr = _forms(G, points, h)
    N = float(np.sum(weights * values * num))
    D = float(np.sum(weights * values * den))
    mass = float(np.sum(weights * values))
    if not D >= DEGENERATE * mass:
        raise DegenerateInputError(f"denominator {D:.3e} below {DEGENERATE:g} x int f; f is (numerically) constant")
    return Gamma2Result(N / D, N, D, float(np.sum(weights * values * intr)))


def gamma2_ratio(f: SphereField, h_s: float = 1e-3, lmax: int | None = None) -> Gamma2Result:
    """Gamma_2 ratio of f with both numerator forms; raises DegenerateInputError for constant f."""
    if not h_s > 0:
        raise ValueError("shell step must be positive")
    if f.log_coefficients is not None and lmax is None:
        degrees, coeffs = f.log_coefficients
    else:
        degrees, coeffs = project_log(f, lmax)
    if 0 in degrees:
        # every form differentiates log f, so the constant mode drops out; synthesising it
        # would only add round-off of size eps |log f| / h_s^2
        keep = [k for k, l in enumerate(l for l in degrees for _ in range(2 * l + 1)) if l]
        degrees, coeffs = tuple(l for l in degrees if l), np.asarray(coeffs)[keep]
    pts = f.points
    st = _stencil(pts, h_s)
    G = _synthesize(st.reshape(-1, 3), degrees, coeffs).reshape(pts.shape[0], 61)
    return _ratio_from(f.values, f.weights, G, pts, h_s)


def linearized_ratio(l: int, m: int = 0, eps: float = 1e-3, n_theta: int = 24, n_phi: int = 48) -> float:
    """Ratio of f = 1 + eps Y_lm; tends to l(l+1) as eps -> 0."""
    def func(pts):
        return 1.0 + eps * real_harmonics(pts, (l,))[:, l + m]

    return gamma2_ratio(SphereField.from_function(func, n_theta, n_phi, symmetric=(l % 2 == 0))).ratio


# -- descent probe ---------------------------------------------------------------


def even_degrees(max_degree: int) -> tuple:
    if max_degree < 0 or max_degree % 2:
        raise ValueError("max_harmonic_degree must be even and nonnegative")
    return tuple(range(2, max_degree + 1, 2))


class _CoefficientRatio:
    """Ratio as a function of the coefficients of log f over fixed even degrees."""

    def __init__(self, degrees: tuple, n_theta: int, n_phi: int, h_s: float):
        self.degrees, self.h = degrees, h_s
        self.points, self.weights = _nodes(n_theta, n_phi)
        self.B = _stencil_basis(n_theta, n_phi, degrees, h_s)
        self.center = self.B.reshape(self.points.shape[0], 61, -1)[:, 42]

    def __call__(self, c: np.ndarray) -> float:
        G = (self.B @ c).reshape(self.points.shape[0], 61)
        vals = np.exp(self.center @ c)
        return _ratio_from(vals, self.weights, G, self.points, self.h).ratio


@dataclass(frozen=True)
class ProbeResult:
    min_ratio: float
    coefficients: np.ndarray
    degrees: tuple
    seed: int  # the seed index that reached the minimum
    per_seed: tuple  # final ratio of each seed

    def describe(self) -> str:
        return (f"degrees={list(self.degrees)} seed={self.seed} |c|={np.linalg.norm(self.coefficients):.4f} "
                f"coefficients=[{', '.join(f'{x:.6f}' for x in self.coefficients)}]")


def probe_minimum(seed_count: int = 20, max_harmonic_degree: int = 6, steps: int = 60, seed: int = 0,
                  amplitude: float = 1.0, radius: float = 2.0, n_theta: int = 16, n_phi: int = 32,
                  h_s: float = 1e-3, fd_step: float = 1e-5) -> ProbeResult:
    """Projected gradient descent on the ratio over log f = sum c_lm Y_lm, l even in [2, degree].

    Each seed starts from a Gaussian coefficient vector, degree l damped by
    1/(l(l+1)), rescaled to norm ``amplitude``; iterates are projected onto the ball |c| <= ``radius``.
    Gradients are central differences in the coefficients; the step is
    found by backtracking on the ratio. Deterministic for a given seed.
    """
    degrees = even_degrees(max_harmonic_degree)
    if not degrees:
        raise DegenerateInputError("degree 0 leaves only constants: the ratio is 0/0")
    if seed_count < 1 or steps < 0:
        raise ValueError("seed_count must be >= 1 and steps >= 0")
    F = _CoefficientRatio(degrees, n_theta, n_phi, h_s)
    dim = harmonic_count(degrees)
    rng = np.random.default_rng(seed)
    # weight degree l by 1/(l(l+1)) so seeds start near the low-ratio end of the spectrum
    scale = np.concatenate([np.full(2 * l + 1, 1.0 / (l * (l + 1))) for l in degrees])
    starts = [rng.standard_normal(dim) * scale for _ in range(seed_count)]

    def project(c):
        norm = np.linalg.norm(c)
        return c if norm <= radius else c * (radius / norm)

    best = (np.inf, None, -1)
    finals = []
    for s, c in enumerate(starts):
        c = project(c * (amplitude / np.linalg.norm(c)))
        val = F(c)
        lr = 0.1
        for _ in range(steps):
            grad = np.empty(dim)
            for k in range(dim):
                e = np.zeros(dim)
                e[k] = fd_step
                grad[k] = (F(c + e) - F(c - e)) / (2 * fd_step)
            gn = np.linalg.norm(grad)
            if gn == 0:
                break
            lr = min(lr * 2.0, 1.0)
            while lr > 1e-8:
                trial = project(c - lr * grad)
                tv = F(trial)
                if tv < val - 1e-4 * lr * gn * gn:
                    c, val = trial, tv
                    break
                lr *= 0.5
            else:
                break
        finals.append(val)
        if val < best[0]:
            best = (val, c.copy(), s)
    return ProbeResult(float(best[0]), best[1], degrees, best[2], tuple(finals))
