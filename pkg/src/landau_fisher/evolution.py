"""Time integration of the Landau equation and trajectory-level checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import linalg as spla

from landau_fisher.functionals import cauchy_schwarz_chain, fisher, hydrodynamics, weighted_hessian_functional
from landau_fisher.grid import (Density, GridError, VelocityGrid, WeightedNorm, gradient, integrate, log_derivatives,
                                make_grid, weighted_lp_norm)
from landau_fisher.kernels import KernelSpec
from landau_fisher.operator import (CoefficientFields, balance_source, coefficient_fields, collision_q, face_fluxes,
                                   flux_divergence)

KINDS = ("maxwellian", "bimaxwellian", "bump", "perturbed_maxwellian")


class CFLError(GridError):
    """Explicit step larger than the stability bound."""


class NumericalAbort(RuntimeError):
    """Non-finite state produced by a step."""


@dataclass(frozen=True)
class InitialData:
    """Closed-form initial densities.

    maxwellian:           mass (2 pi T)^-1.5 exp(-|v - mean|^2 / 2T)
    bimaxwellian:         sum of maxwellians over (means, temperatures, masses)
    bump:                 amplitude exp(1 - 1/(1 - |v - mean|^2/R^2)) inside radius R, plus
                          ``background`` times a unit maxwellian
    perturbed_maxwellian: maxwellian times exp(amplitude * p(v) * exp(-|v|^2 / 8T)) with
                          p = (v1^2 - v2^2 + v1 v3 + 0.5 v2) / T, a mix of l = 2 and l = 1 modes
    """

    kind: str = "maxwellian"
    mass: float | None = 1.0  # rescale to this mass after sampling; None keeps the sampled mass
    temperature: float = 1.0
    mean: tuple = (0.0, 0.0, 0.0)
    means: tuple = ((2.0, 0.0, 0.0), (-2.0, 0.0, 0.0))
    temperatures: tuple = (0.5, 0.5)
    masses: tuple = (0.5, 0.5)
    amplitude: float = 0.3
    radius: float = 1.5
    background: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}; expected one of {KINDS}")
        temps = (self.temperature,) + tuple(self.temperatures)
        if any(not (t > 0) for t in temps):
            raise ValueError("temperatures must be positive")
        if self.kind == "bump" and not (self.amplitude > 0 and self.radius > 0):
            raise ValueError("bump needs positive amplitude and radius")
        if self.kind == "perturbed_maxwellian" and not self.amplitude >= 0:
            raise ValueError("perturbation amplitude must be nonnegative")
        if self.background < 0:
            raise ValueError("background must be nonnegative")
        if self.mass is not None and not self.mass > 0:
            raise ValueError("mass must be positive")
        if len(self.means) != len(self.temperatures) or len(self.means) != len(self.masses):
            raise ValueError("means, temperatures and masses must have equal length")
        if any(m <= 0 for m in self.masses):
            raise ValueError("component masses must be positive")


def _maxwellian(grid: VelocityGrid, mass: float, T: float, mean) -> np.ndarray:
    d = grid.mesh - np.asarray(mean, dtype=float)[:, None, None, None]
    return mass * (2 * np.pi * T) ** -1.5 * np.exp(-np.sum(d * d, axis=0) / (2 * T))


def sample_initial(data: InitialData, grid: VelocityGrid) -> np.ndarray:
    if data.kind == "maxwellian":
        return _maxwellian(grid, 1.0, data.temperature, data.mean)
    if data.kind == "bimaxwellian":
        return sum(_maxwellian(grid, m, T, u) for u, T, m in zip(data.means, data.temperatures, data.masses))
    if data.kind == "bump":
        d = grid.mesh - np.asarray(data.mean, dtype=float)[:, None, None, None]
        s = np.sum(d * d, axis=0) / data.radius**2
        inside = s < 1.0
        vals = np.zeros(grid.shape)
        vals[inside] = data.amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside]))
        if data.background > 0:
            vals = vals + data.background * _maxwellian(grid, 1.0, data.temperature, data.mean)
        return vals
    T = data.temperature
    x = grid.mesh
    p = (x[0] ** 2 - x[1] ** 2 + x[0] * x[2] + 0.5 * x[1]) / T
    return _maxwellian(grid, 1.0, T, data.mean) * np.exp(data.amplitude * p * np.exp(-grid.speed_sq / (8 * T)))


def make_initial(data: InitialData, grid: VelocityGrid) -> Density:
    vals = sample_initial(data, grid)
    total = integrate(grid, vals)
    if not total > 0:
        raise ValueError("initial density has no mass on this grid")
    if data.mass is not None:
        vals = vals * (data.mass / total)
    return Density(grid, vals)


def moment_2mg(f: Density, gamma: float) -> float:
    """int f <v>^(2 - gamma)."""
    return integrate(f.grid, f.grid.bracket(2.0 - gamma) * f.values)


def initial_report(f: Density, gamma: float) -> dict:
    s = hydrodynamics(f)
    return {"M0": s.mass, "E0": s.energy, "H0": s.entropy, "W0": moment_2mg(f, gamma)}


# -- stepping -------------------------------------------------------------------


def cfl_limit(f: Density, coeffs: CoefficientFields, safety: float = 0.5) -> float:
    lam = max(coeffs.max_eigenvalue(), 1e-300)
    return safety * f.grid.h**2 / (6.0 * lam)


@dataclass(frozen=True)
class StepResult:
    f: Density
    dt: float
    clipped_mass: float  # mass removed by clipping negative values
    cfl_dt: float


def _rhs(values: np.ndarray, coeffs: CoefficientFields, h: float, shape, scheme: str) -> np.ndarray:
    return flux_divergence(face_fluxes(values, coeffs, h, scheme), h, shape)


def step(f: Density, spec: KernelSpec, dt: float, scheme: str = "explicit", cfl_safety: float = 1.0,
         coeffs: CoefficientFields | None = None, balanced: bool = True, flux: str = "hybrid",
         tol: float = 1e-12) -> StepResult:
    """Advance one step of f_t = div(A[f] grad f - b[f] f).

    ``explicit`` is forward Euler on the conservative flux form and checks the
    stability bound dt <= cfl_safety h^2 / (6 lambda_max(A)). ``semi-implicit`` freezes A and b at the current state
    and solves (I - dt L) f_new = f by GMRES, with no step restriction.
    ``balanced`` subtracts the scheme's residual at the matching grid
    Maxwellian (see operator.collision_q), frozen over the step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if coeffs is None:
        coeffs = coefficient_fields(f, spec)
    g = f.grid
    limit = cfl_limit(f, coeffs, cfl_safety)
    source = balance_source(f, spec, coeffs, flux) if balanced else np.zeros(g.shape)
    if scheme == "explicit":
        if dt > limit * (1 + 1e-12):
            raise CFLError(f"dt={dt:.6g} exceeds the explicit stability bound {limit:.6g}")
        new = f.values + dt * (_rhs(f.values, coeffs, g.h, g.shape, flux) + source)
    elif scheme == "semi-implicit":
        n3 = f.values.size

        def matvec(x):
            x = x.reshape(g.shape)
            return (x - dt * _rhs(x, coeffs, g.h, g.shape, flux)).ravel()

        op = spla.LinearOperator((n3, n3), matvec=matvec, dtype=float)
        rhs = (f.values + dt * source).ravel()
        sol, info = spla.gmres(op, rhs, x0=f.values.ravel().copy(), rtol=tol, atol=0.0, restart=50, maxiter=200)
        if info != 0:
            raise NumericalAbort(f"implicit solve did not converge (info={info})")
        new = sol.reshape(g.shape)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(new)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(new))[0])
        raise NumericalAbort(f"non-finite density at cell {idx} after step")
    neg = new < 0
    clipped = -float(np.sum(new[neg])) * g.cell_volume
    new = np.where(neg, 0.0, new)
    return StepResult(f.with_values(new), dt, clipped, limit)


# -- runs -----------------------------------------------------------------------


@dataclass(frozen=True)
class RunControls:
    dt: float | None = None  # None: cfl_safety times the bound of the initial state
    cfl_safety: float = 0.5
    scheme: str = "explicit"
    balanced: bool = True
    flux: str = "hybrid"
    stride: int = 10  # steps between dissipation reports; 0 disables them
    norms: tuple = ((2.0, 0.0), (1.0, 3.0))  # (p, k) pairs for L^p_k norms
    snapshot_times: tuple = ()
    mode: str | None = None  # kernel mode for the D-terms
    max_steps: int = 1_000_000


@dataclass
class TrajectoryRecord:
    gamma: float
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    l_log_l: list = field(default_factory=list)
    fisher: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    norms: dict = field(default_factory=dict)
    moment: list = field(default_factory=list)  # int f <v>^(2-gamma)
    dt: list = field(default_factory=list)
    clipped_mass: list = field(default_factory=list)
    floored_mass: list = field(default_factory=list)
    reports: list = field(default_factory=list)  # (sample index, DissipationReport)
    whf: dict = field(default_factory=dict)  # sample index -> weighted Hessian functional
    snapshots: dict = field(default_factory=dict)  # t -> Density
    states: dict = field(default_factory=dict)  # sample index -> Density, at the reported samples
    final: Density | None = None

    def append(self, t: float, f: Density, dt: float, clipped: float, norm_list):
        s = hydrodynamics(f)
        fr = fisher(f)
        self.t.append(float(t))
        self.mass.append(s.mass)
        self.momentum.append(np.asarray(s.momentum, dtype=float))
        self.energy.append(s.energy)
        self.entropy.append(s.entropy)
        self.l_log_l.append(s.l_log_l)
        self.fisher.append(fr.chosen)
        self.linf.append(float(f.values.max()))
        for p, k in norm_list:
            self.norms.setdefault((p, k), []).append(weighted_lp_norm(f, WeightedNorm(p, k)))
        self.moment.append(moment_2mg(f, self.gamma))
        self.dt.append(float(dt))
        self.clipped_mass.append(float(clipped))
        self.floored_mass.append(fr.floored_mass_fraction)

    def series(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def mass_drift(self) -> float:
        m = self.series("mass")
        return float(np.max(np.abs(m - m[0])) / abs(m[0]))


def monotone_violation(values, rel_step: float = 1e-3) -> tuple[bool, float]:
    """Whether every upward step is at most rel_step times the current value; returns the worst ratio."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True, 0.0
    up = np.diff(v)
    scale = np.maximum(np.abs(v[:-1]), 1e-300)
    worst = float(np.max(up / scale))
    return bool(worst <= rel_step), worst


def run(data: InitialData | Density, spec: KernelSpec, T: float, controls: RunControls | None = None,
        grid: VelocityGrid | None = None) -> TrajectoryRecord:
    """Integrate to time T, recording every step and a dissipation report every ``stride`` steps."""
    from landau_fisher.pair import PairContext, fisher_dissipation_terms

    controls = controls or RunControls()
    if not T > 0:
        raise ValueError("final time must be positive")
    if isinstance(data, Density):
        f = data
    else:
        if grid is None:
            raise ValueError("a grid is needed to sample initial data")
        f = make_initial(data, grid)
    rec = TrajectoryRecord(gamma=spec.gamma)
    coeffs = coefficient_fields(f, spec)
    dt = controls.dt if controls.dt is not None else cfl_limit(f, coeffs, controls.cfl_safety)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    if nsteps > controls.max_steps:
        raise ValueError(f"{nsteps} steps exceed max_steps={controls.max_steps}")
    dt = T / nsteps
    pending = sorted(controls.snapshot_times)

    def record(k, t, f, clipped):
        rec.append(t, f, dt if k else 0.0, clipped, controls.norms)
        if controls.stride and k % controls.stride == 0:
            ctx = PairContext(f, spec)
            rec.reports.append((k, fisher_dissipation_terms(ctx, controls.mode, with_j=True)))
            rec.whf[k] = weighted_hessian_functional(f, spec.gamma)
            rec.states[k] = f
        while pending and pending[0] <= t + 1e-12:
            rec.snapshots[pending.pop(0)] = f

    record(0, 0.0, f, 0.0)
    for k in range(1, nsteps + 1):
        res = step(f, spec, dt, controls.scheme, 1.0, coeffs=coeffs,
                   balanced=controls.balanced, flux=controls.flux)
        f = res.f
        coeffs = coefficient_fields(f, spec)
        record(k, k * dt, f, res.clipped_mass)
    rec.final = f
    return rec


# -- dissipation consistency ------------------------------------------------------


def discrete_rates(f: Density, spec: KernelSpec, balanced: bool = True, flux: str = "hybrid") -> tuple[float, float]:
    """(-dH/dt, -di/dt) of the discrete functionals along the discrete flow, exactly (no time step).

    Entropy: -sum log f q h^3 (the mass term vanishes). Fisher: i_h = 4 sum |D sqrt f|^2 h^3,
    differentiated along q: 8 sum D sqrt f . D(q / 2 sqrt f) h^3.
    """
    g = f.grid
    q = collision_q(f, spec, balanced=balanced, scheme=flux)
    ent = -integrate(g, log_derivatives(f).log * q)
    root = np.sqrt(f.values)
    droot = np.where(root > 0, q / (2 * np.where(root > 0, root, 1.0)), 0.0)
    fis = -8.0 * integrate(g, np.sum(gradient(g, root) * gradient(g, droot), axis=0))
    return float(ent), float(fis)


def refine_state(f: Density, n: int) -> Density:
    """Cubic interpolation of log f onto an n-cell grid over the same box, renormalised to the same mass."""
    g = f.grid
    fine = make_grid(n, g.L)
    logf = np.log(np.maximum(f.values, f.floor_delta))
    interp = RegularGridInterpolator((g.axis,) * 3, logf, method="cubic", bounds_error=False, fill_value=None)
    pts = fine.mesh.reshape(3, -1).T
    vals = np.exp(interp(pts)).reshape(fine.shape)
    vals *= integrate(g, f.values) / integrate(fine, vals)
    return Density(fine, vals)


@dataclass(frozen=True)
class ConsistencySample:
    index: int
    t: float
    finite_difference: float  # -(change of the recorded series)/dt
    formula: float  # pairwise dissipation functional
    discrete: float  # exact rate of the discrete functional on this grid
    e_dt: float  # |finite_difference - discrete|
    e_h: float  # Richardson estimate of |discrete - continuum|
    rel_tol: float

    @property
    def error(self) -> float:
        return abs(self.finite_difference - self.formula)

    @property
    def allowed(self) -> float:
        return max(self.rel_tol * abs(self.formula), self.e_dt + self.e_h)

    @property
    def passed(self) -> bool:
        return self.error <= self.allowed


def dissipation_consistency(rec: TrajectoryRecord, spec: KernelSpec, quantity: str = "fisher",
                            rel_tol: float | None = None, refine: float = 1.5, safety: float = 1.25,
                            balanced: bool = True, flux: str = "hybrid") -> list[ConsistencySample]:
    """Compare the finite-difference decay of entropy or Fisher information with the pairwise formula.

    The allowed error at each reported sample is max(rel_tol |formula|, e_dt + e_h): e_dt is the
    measured gap between the finite difference and the exact rate of the discrete functional, e_h the
    Richardson estimate of that rate's O(h^2) error from the same state on a ``refine`` times finer grid,
    times the usual grid-convergence safety factor ``safety``. Defaults: rel_tol 0.1 for Fisher, 0.05 for entropy.
    """
    if quantity == "fisher":
        series, pick, which = rec.fisher, (lambda r: r.fisher_dissipation_total), 1
    elif quantity == "entropy":
        series, pick, which = rec.entropy, (lambda r: r.entropy_dissipation), 0
    else:
        raise ValueError(f"unknown quantity {quantity!r}")
    if rel_tol is None:
        rel_tol = 0.1 if quantity == "fisher" else 0.05
    out = []
    for idx, report in rec.reports:
        f = rec.states[idx]
        fd = finite_difference_rate(rec.t, series, idx)
        coarse = discrete_rates(f, spec, balanced, flux)[which]
        n_fine = 2 * int(round(0.5 * refine * f.grid.n))
        fine = discrete_rates(refine_state(f, n_fine), spec, balanced, flux)[which]
        e_h = safety * abs(coarse - fine) / (1.0 - (f.grid.n / n_fine) ** 2)
        out.append(ConsistencySample(idx, rec.t[idx], fd, pick(report), coarse, abs(fd - coarse), e_h, rel_tol))
    return out


# -- trajectory checks ------------------------------------------------------------


@dataclass(frozen=True)
class DecayCheck:
    c0_fit: float  # max_t i(t) / (1 + 1/t)
    early_max: float  # max of t i/(1+t) over the early window
    late_max: float
    stationary: bool
    passed: bool


def fisher_decay_check(t, fisher_series, early_fraction: float = 0.25, slack: float = 0.05,
                       stationary_tol: float = 1e-3) -> DecayCheck:
    """Shape check of i(t) <= C0 (1 + 1/t).

    g(t) = t i(t) / (1 + t) must stay below (1 + slack) times its maximum over
    the early window t <= early_fraction * t_end. A series that is constant
    within ``stationary_tol`` passes outright: there i(t) <= i(0) (1 + 1/t)
    holds trivially, while g itself grows like t/(1+t).
    """
    t = np.asarray(t, dtype=float)
    i = np.asarray(fisher_series, dtype=float)
    pos = t > 0
    if np.count_nonzero(pos) < 10:
        raise ValueError("need at least 10 samples with t > 0")
    t, i = t[pos], i[pos]
    g = t * i / (1 + t)
    c0 = float(np.max(i / (1 + 1 / t)))
    early = t <= early_fraction * t[-1]
    if not early.any():
        early[0] = True
    early_max = float(np.max(g[early]))
    late_max = float(np.max(g[~early])) if (~early).any() else early_max
    stationary = bool(np.max(np.abs(i - i[0])) <= stationary_tol * abs(i[0]))
    passed = stationary or late_max <= (1 + slack) * early_max
    return DecayCheck(c0, early_max, late_max, stationary, bool(passed))


def finite_difference_rate(t, values, index: int) -> float:
    """-d/dt of a series at one sample: centred inside, one-sided at the ends."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if 0 < index < len(t) - 1:
        return float(-(v[index + 1] - v[index - 1]) / (t[index + 1] - t[index - 1]))
    if index == 0:
        return float(-(v[1] - v[0]) / (t[1] - t[0]))
    return float(-(v[index] - v[index - 1]) / (t[index] - t[index - 1]))


@dataclass(frozen=True)
class OdeSample:
    index: int
    t: float
    rate: float  # -di/dt by finite differences
    rhs: float  # c2 i^2 - C1 M0 i - C2 M0^2
    margin: float
    dominant: float
    chain_ok: bool


def ode_inequality_check(rec: TrajectoryRecord, c1: float, C1: float, C2: float,
                         chain_tol: float = 1e-2) -> list[OdeSample]:
    """Margins of -di/dt >= c2 i^2 - C1 M0 i - C2 M0^2 at each reported sample.

    c2 = c1 / (3 sup_t int f <v>^(2-gamma)), the constant produced by the
    two Cauchy-Schwarz steps; the chain itself is re-checked on the stored
    state of each sample.
    """
    W = max(rec.moment)
    c2 = c1 / (3.0 * W)
    out = []
    M0 = rec.mass[0]
    for idx, _report in rec.reports:
        i = rec.fisher[idx]
        rate = finite_difference_rate(rec.t, rec.fisher, idx)
        rhs = c2 * i * i - C1 * M0 * i - C2 * M0 * M0
        dom = max(abs(rate), abs(c2 * i * i), abs(C1 * M0 * i), abs(C2 * M0 * M0))
        chain_ok = True
        snap = rec.states.get(idx)
        if snap is not None:
            chain_ok = cauchy_schwarz_chain(snap, rec.gamma).holds(chain_tol)
        out.append(OdeSample(idx, rec.t[idx], rate, rhs, rate - rhs, dom, chain_ok))
    return out


def moment_growth_check(t, moments, rho: float = 0.05) -> tuple[float, bool]:
    """Fit kappa so that m(t) <= (1 + rho)(m(0) + kappa t); pass iff the fitted kappa is finite and >= 0.

    kappa is the smallest slope for which the linear envelope bounds every
    sample; a moment that grows faster than linearly forces a slope that the
    later samples then exceed, which is reported as a failure.
    """
    t = np.asarray(t, dtype=float)
    m = np.asarray(moments, dtype=float)
    pos = t > 0
    need = (m[pos] / (1 + rho) - m[0]) / t[pos]
    kappa = max(0.0, float(np.max(need))) if pos.any() else 0.0
    # linear-growth shape: the envelope fitted on the first half bounds the second half
    half = t <= 0.5 * t[-1]
    hp = half & pos
    k_half = max(0.0, float(np.max((m[hp] / (1 + rho) - m[0]) / t[hp]))) if hp.any() else 0.0
    later = ~half
    ok = bool(np.all(m[later] <= (1 + rho) * (m[0] + max(k_half, 0.0) * t[later]) + 1e-12 * abs(m[0])))
    return kappa, ok


# -- test functions for the initial-time Holder bound -----------------------------


@dataclass(frozen=True)
class TensorBump:
    """psi(v) = scale * prod_i phi((v_i - c_i) / width), phi(s) = (1 - s^2)^4 on |s| < 1."""

    center: tuple = (0.0, 0.0, 0.0)
    width: float = 2.0
    scale: float = 1.0

    def __call__(self, grid: VelocityGrid) -> np.ndarray:
        out = np.full(grid.shape, self.scale)
        for i in range(3):
            s = (grid.mesh[i] - self.center[i]) / self.width
            out = out * np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
        return out

    def hessian_sup(self, samples: int = 20001) -> float:
        """sup_v ||Hess psi(v)||_2 from the one-dimensional profile (analytic derivatives)."""
        s = np.linspace(-1.0, 1.0, samples)
        p0 = (1 - s * s) ** 4
        p1 = -8 * s * (1 - s * s) ** 3
        p2 = -8 * (1 - s * s) ** 3 + 48 * s * s * (1 - s * s) ** 2
        a0, a1, a2 = np.max(np.abs(p0)), np.max(np.abs(p1)), np.max(np.abs(p2))
        # Hessian entries: diagonal p2 p0 p0, off-diagonal p1 p1 p0; spectral norm <= Frobenius
        diag = a2 * a0 * a0
        off = a1 * a1 * a0
        return float(self.scale * np.sqrt(3 * diag**2 + 6 * off**2) / self.width**2)


def holder_initial_check(rec: TrajectoryRecord, psi: TensorBump, f0: Density, states: dict) -> float:
    """sup_tau |int f(tau) psi - int f0 psi| / (tau^(1/2) ||Hess psi||^(1/2)) over the given states."""
    grid = f0.grid
    w = psi(grid)
    base = integrate(grid, f0.values * w)
    hs = psi.hessian_sup()
    best = 0.0
    for tau, f in states.items():
        if tau <= 0:
            continue
        num = abs(integrate(grid, f.values * w) - base)
        best = max(best, num / (math.sqrt(tau) * math.sqrt(hs)))
    return best
