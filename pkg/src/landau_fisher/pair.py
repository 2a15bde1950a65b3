"""Pairwise functionals of the product state F(v, w) = f(v) f(w).

F is never stored. Every integrand below is a radial kernel K(|z|), z = v - w,
times a polynomial in z whose coefficients split into a factor at v and a
factor at w. A term

    sum_v sum_w X(v) K(|z|) z^mu Y(w) h^6

is therefore sum_v X(v) (K z^mu * Y)(v) h^3, one discrete convolution. The
pair v = w is omitted (every kernel lattice is zero at the origin).

With xi = grad log f(v) - grad log f(w), S = Hess log f(v) + Hess log f(w)
and a = a(z), the quantities reduce to

    sum_k (b~_k . grad log F)^2               = xi^T a xi
    sum_ij |(d_vi + d_wi) b~_j . grad log F|^2 = tr(a (H_v - H_w)^2)
    sum_ij (b~_i . grad(b~_j . grad log F))^2  = 4(|z|^2|xi|^2 + (z.xi)^2)
                                                 - 4 (z.xi) tr(S a) + tr(S a S a)
    sum_ij ((b_i . grad_v b_j) . xi)^2         = |z|^2 |xi|^2 + (z.xi)^2

using sum_ij (e_j x (e_i x z))(...)^T = |z|^2 I + z z^T and sum_j z_j b_j = 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from landau_fisher.convolution import Convolver
from landau_fisher.grid import Density, integrate, log_derivatives
from landau_fisher.kernels import CUTOFF, RAW, KernelSpec, alpha, b_field, alpha_log_slope_weight, alpha_tilde, sqrt_alpha_and_slope

# Lower bound on the symmetric Gamma-2 constant used by the margin checks.
LAMBDA3 = 5.5


def dissipation_factor(gamma: float, lambda3: float = LAMBDA3) -> float:
    """1 - gamma^2 / (4 Lambda3); 13/22 for gamma = -3."""
    return 1.0 - gamma * gamma / (4.0 * lambda3)


def decomposition_identity_check(g, v, w) -> np.ndarray:
    """|g|^2 minus its split into parallel, normal and spherical parts on R^6.

    With g = (g_v, g_w), z = v - w, n = (z, -z) / (sqrt 2 |z|) and b~_k = (b_k(z), -b_k(z)):

        |g|^2 = 1/2 |g_v + g_w|^2 + (n . g)^2 + sum_k (b~_k . g)^2 / (2 |z|^2).

    Broadcasts over leading axes; returns the residual, zero up to rounding.
    """
    g = np.asarray(g, dtype=float)
    z = np.asarray(v, dtype=float) - np.asarray(w, dtype=float)
    r2 = np.sum(z * z, axis=-1)
    if np.any(r2 == 0):
        raise ValueError("v and w must differ")
    gv, gw = g[..., :3], g[..., 3:]
    d = gv - gw
    par = 0.5 * np.sum((gv + gw) ** 2, axis=-1)
    normal = 0.5 * np.sum(z * d, axis=-1) ** 2 / r2
    sph = sum(np.sum(b_field(k, z) * d, axis=-1) ** 2 for k in range(3)) / (2 * r2)
    return np.sum(g * g, axis=-1) - (par + normal + sph)


def _radial(name: str, r: np.ndarray, spec: KernelSpec, mode: str) -> np.ndarray:
    s = KernelSpec(spec.gamma, spec.epsilon, mode)
    if name == "alpha":
        return alpha(r, s)
    if name == "alpha/r2":
        return alpha(r, s) / r**2
    if name == "alpha/2r2":
        return 0.5 * alpha(r, s) / r**2
    if name == "alpha/2":
        return 0.5 * alpha(r, s)
    if name == "2alpha/r2":
        return 2.0 * alpha(r, s) / r**2
    if name == "slope":
        return alpha_log_slope_weight(r, s)
    root, slope = sqrt_alpha_and_slope(r, s)
    c1 = np.sqrt(2.0) * (slope + root / r)
    c2 = root / np.sqrt(2.0)
    if name == "rad11":
        return c1 * c1
    if name == "rad12":
        return 2.0 * c1 * c2 / r
    if name == "rad22":
        return c2 * c2 / r**2
    raise KeyError(name)


def _symmetric_fill(out: np.ndarray, lead: int, t: tuple, value: np.ndarray):
    for perm in set(itertools.permutations(t)):
        out[(slice(None),) * lead + perm] = value


@dataclass(frozen=True, eq=False)
class PairContext:
    """A density with its cached log-derivatives and the kernel settings.

    ``pair_cutoff_radius`` drops pairs with |v - w| above the radius; None
    keeps every pair.
    """

    f: Density
    spec: KernelSpec = field(default_factory=KernelSpec)
    pair_cutoff_radius: float | None = None
    method: str = "fft"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        logd = log_derivatives(self.f)
        object.__setattr__(self, "grad", logd.grad)
        object.__setattr__(self, "hess", logd.hess)
        object.__setattr__(self, "fingerprint", self.f.fingerprint())
        object.__setattr__(self, "conv", Convolver(self.f.grid, self.method))
        z = self.f.grid.offsets()
        object.__setattr__(self, "_z", z)
        object.__setattr__(self, "_r", np.sqrt(np.sum(z * z, axis=0)))

    def check_consistent(self):
        if self.f.fingerprint() != self.fingerprint:
            raise ValueError("density changed after the pair context was built")

    # -- convolution engine --------------------------------------------------

    def radial_lattice(self, name: str, mode: str, r2pow: int = 0) -> np.ndarray:
        key = ("radial", name, mode, r2pow)
        if key not in self._cache:
            r = self._r
            mask = r > 0
            if self.pair_cutoff_radius is not None:
                mask &= r <= self.pair_cutoff_radius
            out = np.zeros_like(r)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[mask] = _radial(name, r[mask], self.spec, mode) * r[mask] ** (2 * r2pow)
            out.setflags(write=False)
            self._cache[key] = out
        return self._cache[key]

    def moment(self, kernel: tuple, Y: np.ndarray, kv: int = 0, kw: int = 0) -> np.ndarray:
        """sum_w K(|z|) z^(x)kv (z^(x)kw . Y(w)) h^3 at every v.

        ``Y`` has shape extra + (3,)*kw + grid; the result has shape
        extra + (3,)*kv + grid.
        """
        rad = self.radial_lattice(*kernel)
        grid_shape = self.f.grid.shape
        extra = Y.shape[: Y.ndim - 3 - kw]
        flat_extra = int(np.prod(extra)) if extra else 1
        Yr = Y.reshape((flat_extra,) + (3,) * kw + grid_shape)
        groups: dict[tuple, np.ndarray] = {}
        for idx in itertools.product(range(3), repeat=kw):
            mu = tuple(sorted(idx))
            part = Yr[(slice(None),) + idx]
            groups[mu] = part.copy() if mu not in groups else groups[mu] + part
        conv = self.conv
        ft = {mu: [conv.transform_field(y[e]) for e in range(flat_extra)] for mu, y in groups.items()}
        out = np.zeros((flat_extra,) + (3,) * kv + grid_shape)
        z = self._z
        for t in itertools.combinations_with_replacement(range(3), kv):
            acc = np.zeros((flat_extra,) + grid_shape)
            for mu, fts in ft.items():
                kern = rad.copy()
                for i in t + mu:
                    kern = kern * z[i]
                kt = conv.transform(kern)
                for e in range(flat_extra):
                    acc[e] += conv.apply(kt, fts[e])
            _symmetric_fill(out, 1, t, acc)
        return out.reshape(extra + (3,) * kv + grid_shape)

    def pair_sum(self, X: np.ndarray) -> float:
        """h^3 sum_v f(v) X(v)."""
        return integrate(self.f.grid, self.f.values * X)


# -- building blocks: sum_v sum_w f(v) f(w) K(|z|) P h^6 --------------------------


class _Blocks:
    def __init__(self, ctx: PairContext):
        self.c = ctx
        f = ctx.f.values
        G, H = ctx.grad, ctx.hess
        self.f, self.G, self.H = f, G, H
        self.fG = f * G
        self.fH = f * H
        self.gsq = np.sum(G * G, axis=0)
        self.H2 = np.einsum("ab...,bc...->ac...", H, H)
        self.trH = np.trace(H)
        self.trH2 = np.trace(self.H2)
        self.terms: dict[str, float] = {}

    def _S(self, X):
        return self.c.pair_sum(X)

    def iso(self, name, mode):
        """|z|^2 |xi|^2."""
        c, f, G = self.c, self.f, self.G
        k = (name, mode, 1)
        p0 = c.moment(k, f)
        p0g = c.moment(k, self.fG)
        p0gg = c.moment(k, f * self.gsq)
        return self._S(self.gsq * p0 - 2 * np.sum(G * p0g, axis=0) + p0gg)

    def zz(self, name, mode):
        """(z . xi)^2."""
        c, f, G = self.c, self.f, self.G
        k = (name, mode, 0)
        p2 = c.moment(k, f, kv=2)
        p1 = c.moment(k, self.fG, kv=1, kw=1)
        p0 = c.moment(k, f * np.einsum("a...,b...->ab...", G, G), kw=2)
        return self._S(np.einsum("a...,b...,ab...->...", G, G, p2) - 2 * np.sum(G * p1, axis=0) + p0)

    def z_xi_trS(self, name, mode, r2pow):
        """(z . xi) tr S."""
        c, f, G = self.c, self.f, self.G
        k = (name, mode, r2pow)
        p1 = c.moment(k, f, kv=1)
        q0 = c.moment(k, self.fG, kw=1)
        p1t = c.moment(k, f * self.trH, kv=1)
        q0t = c.moment(k, self.fG * self.trH, kw=1)
        X = self.trH * np.sum(G * p1, axis=0) - self.trH * q0 + np.sum(G * p1t, axis=0) - q0t
        return self._S(X)

    def z_xi_zSz(self, name, mode, r2pow):
        """(z . xi)(z^T S z)."""
        c, f, G, H = self.c, self.f, self.G, self.H
        k = (name, mode, r2pow)
        p3 = c.moment(k, f, kv=3)
        q2 = c.moment(k, self.fG, kv=2, kw=1)
        p1 = c.moment(k, self.fH, kv=1, kw=2)
        q0 = c.moment(k, np.einsum("a...,bc...->abc...", self.fG, H), kw=3)
        X = (np.einsum("a...,bc...,abc...->...", G, H, p3) - np.einsum("bc...,bc...->...", H, q2)
             + np.sum(G * p1, axis=0) - q0)
        return self._S(X)

    def trS2(self, name, mode, r2pow, sign=1.0):
        """tr S^2 with S = H_v + sign H_w."""
        c, f = self.c, self.f
        k = (name, mode, r2pow)
        p0 = c.moment(k, f)
        pH = c.moment(k, self.fH)
        pHH = c.moment(k, f * self.trH2)
        return self._S(self.trH2 * p0 + 2 * sign * np.einsum("ab...,ab...->...", self.H, pH) + pHH)

    def zS2z(self, name, mode, r2pow, sign=1.0):
        """z^T S^2 z with S = H_v + sign H_w."""
        c, f, H = self.c, self.f, self.H
        k = (name, mode, r2pow)
        p2 = c.moment(k, f, kv=2)
        # out[b, a] = sum_w K z_a z_c f H_w[b, c]
        pc = c.moment(k, self.fH, kv=1, kw=1)
        pw = c.moment(k, f * self.H2, kw=2)
        X = np.einsum("ab...,ab...->...", self.H2, p2) + 2 * sign * np.einsum("ab...,ba...->...", H, pc) + pw
        return self._S(X)

    def zSz2(self, name, mode, r2pow):
        """(z^T S z)^2."""
        c, f, H = self.c, self.f, self.H
        k = (name, mode, r2pow)
        p4 = c.moment(k, f, kv=4)
        p22 = c.moment(k, self.fH, kv=2, kw=2)
        p04 = c.moment(k, f * np.einsum("ab...,cd...->abcd...", H, H), kw=4)
        X = np.einsum("ab...,cd...,abcd...->...", H, H, p4) + 2 * np.einsum("ab...,ab...->...", H, p22) + p04
        return self._S(X)

    def zSxi(self, name, mode, r2pow):
        """z^T S xi."""
        c, f, G, H = self.c, self.f, self.G, self.H
        k = (name, mode, r2pow)
        p1 = c.moment(k, f, kv=1)
        # out[b, a] = sum_w K z_a f g_w[b]
        pg = c.moment(k, self.fG, kv=1)
        # out[b] = sum_w K z_a f H_w[b, a]
        pH = c.moment(k, self.fH, kw=1)
        q0 = c.moment(k, np.einsum("ab...,b...->a...", self.fH, G), kw=1)
        HG = np.einsum("ab...,b...->a...", H, G)
        X = np.sum(HG * p1, axis=0) - np.einsum("ab...,ba...->...", H, pg) + np.sum(G * pH, axis=0) - q0
        return self._S(X)

    def j1_form(self, name, mode):
        """tr(H_v a H_v a) = |z|^4 tr H^2 - 2|z|^2 z^T H^2 z + (z^T H z)^2, H at v only."""
        c, f, H = self.c, self.f, self.H
        p0 = c.moment((name, mode, 2), f)
        p2 = c.moment((name, mode, 1), f, kv=2)
        p4 = c.moment((name, mode, 0), f, kv=4)
        X = (self.trH2 * p0 - 2 * np.einsum("ab...,ab...->...", self.H2, p2)
             + np.einsum("ab...,cd...,abcd...->...", H, H, p4))
        return self._S(X)


def _record(parts: dict, key: str, value: float) -> float:
    parts[key] = value
    return value


def xi_a_xi(ctx: PairContext, name: str, mode: str, blocks: _Blocks | None = None) -> tuple[float, float]:
    """sum sum f f K xi^T a xi and the absolute scale |iso| + |zz|."""
    b = blocks or _Blocks(ctx)
    iso, zz = b.iso(name, mode), b.zz(name, mode)
    return iso - zz, abs(iso) + abs(zz)


def entropy_dissipation(ctx: PairContext) -> float:
    """1/2 sum_{v != w} f f alpha xi^T a xi h^6 with the raw potential."""
    val, _ = xi_a_xi(ctx, "alpha", RAW)
    return 0.5 * val


def r_sph(ctx: PairContext, mode: str | None = None) -> float:
    mode = mode or ctx.spec.cutoff_mode
    return xi_a_xi(ctx, "alpha/r2", mode)[0]


def d_par(ctx: PairContext, mode: str | None = None, blocks: _Blocks | None = None) -> tuple[float, float]:
    mode = mode or ctx.spec.cutoff_mode
    b = blocks or _Blocks(ctx)
    t1 = b.trS2("alpha/2", mode, 1, sign=-1.0)
    t2 = b.zS2z("alpha/2", mode, 0, sign=-1.0)
    return t1 - t2, abs(t1) + abs(t2)


def d_sph(ctx: PairContext, mode: str | None = None, blocks: _Blocks | None = None) -> tuple[float, float]:
    mode = mode or ctx.spec.cutoff_mode
    b = blocks or _Blocks(ctx)
    k = "alpha/2r2"
    pieces = [
        4 * b.iso(k, mode),
        4 * b.zz(k, mode),
        -4 * b.z_xi_trS(k, mode, 1),
        4 * b.z_xi_zSz(k, mode, 0),
        b.trS2(k, mode, 2),
        -2 * b.zS2z(k, mode, 1),
        b.zSz2(k, mode, 0),
    ]
    return float(sum(pieces)), float(sum(abs(p) for p in pieces))


def d_rad(ctx: PairContext, mode: str | None = None, blocks: _Blocks | None = None) -> tuple[float, float]:
    mode = mode or ctx.spec.cutoff_mode
    b = blocks or _Blocks(ctx)
    pieces = [
        b.iso("rad11", mode),
        -b.zz("rad11", mode),
        b.zSxi("rad12", mode, 1),
        -b.z_xi_zSz("rad12", mode, 0),
        b.zS2z("rad22", mode, 1),
        -b.zSz2("rad22", mode, 0),
    ]
    return float(sum(pieces)), float(sum(abs(p) for p in pieces))


def j_terms(ctx: PairContext, blocks: _Blocks | None = None) -> tuple[float, float]:
    """J1 and J2, always with the cut-off potential alpha_tilde."""
    b = blocks or _Blocks(ctx)
    j1 = b.j1_form("alpha/r2", CUTOFF)
    j2 = b.iso("2alpha/r2", CUTOFF) + b.zz("2alpha/r2", CUTOFF)
    return j1, j2


def j2_bound(gamma: float, mass: float, fisher: float, eta_constant: float) -> float:
    """2^(3-gamma) M0 i + 2^(3-gamma) C_eta M0^2 with C_eta the measured Laplacian bound."""
    w = 2.0 ** (3.0 - gamma)
    return w * mass * fisher + w * eta_constant * mass * mass


@dataclass(frozen=True)
class DissipationReport:
    d_par: float
    d_rad: float
    d_sph: float
    r_sph: float
    slope_term: float  # sum f f alpha'^2/(2 alpha) xi^T a xi; (gamma^2/2) r_sph for a pure power
    j1: float
    j2: float
    entropy_dissipation: float
    fisher_dissipation_total: float  # = -d/dt i(f)
    mode: str
    scales: dict
    margins: dict

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("d_par", "d_rad", "d_sph", "r_sph", "slope_term", "j1", "j2",
                                             "entropy_dissipation", "fisher_dissipation_total")}
        out.update({f"margin_{k}": v for k, v in self.margins.items()})
        return out


def fisher_dissipation_terms(ctx: PairContext, mode: str | None = None, with_j: bool = True) -> DissipationReport:
    """Decomposition of -d/dt i(f) = D_par + D_rad + D_sph - slope term."""
    from landau_fisher.functionals import fisher
    from landau_fisher.kernels import j2_eta_constant

    ctx.check_consistent()
    mode = mode or ctx.spec.cutoff_mode
    b = _Blocks(ctx)
    dp, sp = d_par(ctx, mode, b)
    dr, sr = d_rad(ctx, mode, b)
    ds, ss = d_sph(ctx, mode, b)
    rs, srs = xi_a_xi(ctx, "alpha/r2", mode, b)
    sl, _ = xi_a_xi(ctx, "slope", mode, b)
    ed, se = xi_a_xi(ctx, "alpha", RAW, b)
    ed *= 0.5
    j1, j2 = j_terms(ctx, b) if with_j else (float("nan"), float("nan"))
    total = dp + dr + ds - sl
    mass = ctx.f.mass()
    i = fisher(ctx.f).chosen
    factor = dissipation_factor(ctx.spec.gamma)
    margins = {
        "sph": ds - 2 * LAMBDA3 * rs,
        "total_vs_factor": total - factor * (dp + ds),
    }
    if with_j:
        margins["par_sph_vs_j"] = dp + ds - (j1 - j2)
        margins["j2_bound"] = j2_bound(ctx.spec.gamma, mass, i, j2_eta_constant(ctx.spec.gamma)) - abs(j2)
    return DissipationReport(
        d_par=dp, d_rad=dr, d_sph=ds, r_sph=rs, slope_term=sl, j1=j1, j2=j2,
        entropy_dissipation=ed, fisher_dissipation_total=total, mode=mode,
        scales={"d_par": sp, "d_rad": sr, "d_sph": ss, "r_sph": srs, "entropy_dissipation": 0.5 * se},
        margins=margins,
    )


# -- coercivity of the J1 kernel ----------------------------------------------------

_SYM_BASIS = None


def _sym_basis() -> np.ndarray:
    """Orthonormal basis (Frobenius) of symmetric 3x3 matrices, shape (6, 3, 3)."""
    global _SYM_BASIS
    if _SYM_BASIS is None:
        basis = []
        for i in range(3):
            m = np.zeros((3, 3))
            m[i, i] = 1.0
            basis.append(m)
        for i, j in ((0, 1), (0, 2), (1, 2)):
            m = np.zeros((3, 3))
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(m)
        _SYM_BASIS = np.array(basis)
    return _SYM_BASIS


def coercivity_tensor(ctx: PairContext) -> np.ndarray:
    """T_abcd(v) = sum_w alpha_tilde/|z|^2 f(w) a_ab a_cd h^3, so that the J1 kernel is H_ab H_cd T_bcda."""
    key = ("coercivity",)
    if key in ctx._cache:
        return ctx._cache[key]
    f = ctx.f.values
    p0 = ctx.moment(("alpha/r2", CUTOFF, 2), f)
    p2 = ctx.moment(("alpha/r2", CUTOFF, 1), f, kv=2)
    p4 = ctx.moment(("alpha/r2", CUTOFF, 0), f, kv=4)
    d = np.eye(3)
    # a_ab a_cd = r^4 d_ab d_cd - r^2 (d_ab z_c z_d + z_a z_b d_cd) + z_a z_b z_c z_d
    T = (np.einsum("ab,cd,...->abcd...", d, d, p0)
         - np.einsum("ab,cd...->abcd...", d, p2) - np.einsum("ab...,cd->abcd...", p2, d) + p4)
    ctx._cache[key] = T
    return T


def coercivity_probe(ctx: PairContext, v_cell: tuple, H: np.ndarray) -> float:
    """[sum_w alpha_tilde/|z|^2 f(w) tr(a H a H) h^3] / <v>^(gamma-2) at one cell, ||H||_F = 1."""
    H = np.asarray(H, dtype=float)
    if H.shape != (3, 3) or not np.allclose(H, H.T):
        raise ValueError("H must be a symmetric 3x3 matrix")
    norm = np.linalg.norm(H)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"H must have unit Frobenius norm, got {norm}")
    T = coercivity_tensor(ctx)[(slice(None),) * 4 + tuple(v_cell)]
    # tr(a H a H) = a_ab H_bc a_cd H_da = sum T_abcd H_bc H_da
    val = float(np.einsum("abcd,bc,da->", T, H, H))
    return val / float(ctx.f.grid.bracket(ctx.spec.gamma - 2.0)[tuple(v_cell)])


def coercivity_constant(ctx: PairContext, mask: np.ndarray | None = None) -> tuple[float, tuple]:
    """Infimum over cells and unit symmetric H of the coercivity ratio.

    At each cell the ratio is a quadratic form on the 6-dimensional space of
    symmetric matrices, so its minimum is the smallest eigenvalue of a 6x6
    Gram matrix; no sampling of H is needed.
    """
    T = coercivity_tensor(ctx)
    B = _sym_basis()
    Q = np.einsum("pbc,qda,abcd...->...pq", B, B, T)
    Q = 0.5 * (Q + np.swapaxes(Q, -1, -2))
    lam = np.linalg.eigvalsh(Q)[..., 0] / ctx.f.grid.bracket(ctx.spec.gamma - 2.0)
    if mask is not None:
        lam = np.where(mask, lam, np.inf)
    idx = np.unravel_index(int(np.argmin(lam)), lam.shape)
    return float(lam[idx]), tuple(int(i) for i in idx)


# -- theorem-level margins --------------------------------------------------------


@dataclass(frozen=True)
class InequalityMargins:
    factor: float
    c1: float
    C1: float
    C2: float
    lower_bound: float  # c1 whf - C1 M0 i - C2 M0^2
    margin1: float  # factor (d_par + d_sph) - lower_bound
    margin2: float | None  # -di/dt - factor (d_par + d_sph)
    dominant: float

    def passed(self, rel_tol: float = 0.1) -> bool:
        tol = rel_tol * self.dominant
        ok = self.margin1 >= -tol
        if self.margin2 is not None:
            ok = ok and self.margin2 >= -tol
        return bool(ok)


def dissipation_inequality_check(ctx: PairContext, report: DissipationReport, fisher: float, whf: float,
                                 mass: float, dissipation_rate: float | None = None,
                                 coercivity: float | None = None) -> InequalityMargins:
    """Margins of -di/dt >= factor (D_par + D_sph) >= c1 whf - C1 M0 i - C2 M0^2.

    The constants are the measured ones: c1 is factor times the coercivity
    infimum, C1 = factor 2^(3-gamma) and C2 = factor C_eta 2^(3-gamma).
    ``dissipation_rate`` is -di/dt from a flow; when omitted the decomposition
    total stands in for it.
    """
    from landau_fisher.kernels import j2_eta_constant

    gamma = ctx.spec.gamma
    factor = dissipation_factor(gamma)
    c = coercivity if coercivity is not None else coercivity_constant(ctx)[0]
    w = 2.0 ** (3.0 - gamma)
    c1, C1, C2 = factor * c, factor * w, factor * j2_eta_constant(gamma) * w
    lower = c1 * whf - C1 * mass * fisher - C2 * mass * mass
    ps = report.d_par + report.d_sph
    rate = report.fisher_dissipation_total if dissipation_rate is None else dissipation_rate
    dominant = max(abs(factor * ps), abs(c1 * whf), abs(C1 * mass * fisher), abs(C2 * mass * mass), abs(rate))
    return InequalityMargins(
        factor=factor, c1=c1, C1=C1, C2=C2, lower_bound=lower,
        margin1=factor * ps - lower, margin2=rate - factor * ps, dominant=dominant,
    )
