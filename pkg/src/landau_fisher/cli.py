"""Command-line entry points: simulate, analyze, gamma2, selftest.

Exit codes: 0 every enabled check passes, 2 a check failed, 3 bad input
(config, snapshot, options), 4 numerical abort (CFL violation, non-finite
values). LF_TOL_SCALE multiplies every check tolerance; both the raw and the
scaled verdict are reported, and the exit code follows the raw one.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from landau_fisher import evolution, io
from landau_fisher.evolution import CFLError, NumericalAbort, RunControls
from landau_fisher.functionals import fisher, hydrodynamics
from landau_fisher.grid import make_grid
from landau_fisher.kernels import KernelSpec

OK, CHECK_FAILED, INPUT_ERROR, NUMERICAL_ABORT = 0, 2, 3, 4


def tol_scale() -> float:
    raw = os.environ.get("LF_TOL_SCALE", "").strip()
    if not raw:
        return 1.0
    try:
        val = float(raw)
    except ValueError:
        val = float("nan")
    if not (math.isfinite(val) and val > 0):
        raise ValueError(f"LF_TOL_SCALE must be a positive number, got {raw!r}")
    return val


@dataclass(frozen=True)
class Check:
    """A check passes when ``value <= tolerance``."""

    name: str
    value: float
    tolerance: float
    scale: float = 1.0

    @property
    def raw(self) -> bool:
        return bool(self.value <= self.tolerance)

    @property
    def scaled(self) -> bool:
        return bool(self.value <= self.tolerance * self.scale)

    def entries(self) -> dict:
        p = f"check.{self.name}"
        return {
            f"{p}.value": float(self.value),
            f"{p}.tolerance": float(self.tolerance),
            f"{p}.margin": float(self.tolerance - self.value),
            f"{p}.raw": "PASS" if self.raw else "FAIL",
            f"{p}.scaled": "PASS" if self.scaled else "FAIL",
        }


def _verdict(checks: list[Check], scale: float) -> dict:
    failed = [c.name for c in checks if not c.raw]
    failed_scaled = [c.name for c in checks if not c.scaled]
    out = {"tol_scale": float(scale)}
    for c in checks:
        out.update(c.entries())
    out["status"] = "FAIL" if failed else "PASS"
    out["status_scaled"] = "FAIL" if failed_scaled else "PASS"
    out["failed"] = ",".join(failed) or "none"
    return out


def _emit(entries: dict, out_dir: str | None, name: str):
    text = io.summary_text(entries)
    sys.stdout.write(text)
    if out_dir:
        io.atomic_write(Path(out_dir) / name, text)


def _report_failures(checks: list[Check]) -> int:
    failed = [c.name for c in checks if not c.raw]
    if failed:
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return CHECK_FAILED
    return OK


# -- simulate ----------------------------------------------------------------------


def _relative_variation(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1e-300))


def _margin_excess(report) -> float:
    dominant = max(abs(report.d_par), abs(report.d_sph), abs(report.d_rad), abs(report.j1), abs(report.j2),
                   11.0 * abs(report.r_sph), 1e-300)
    return max(0.0, *(-m / dominant for m in report.margins.values()))


def simulation_checks(cfg: io.RunConfig, rec, spec: KernelSpec, scale: float) -> list[Check]:
    checks = []
    for name in cfg.checks:
        if name == "mass":
            clipped = float(np.sum(rec.clipped_mass)) / rec.mass[0]
            checks.append(Check("mass", max(rec.mass_drift(), clipped), 1e-10, scale))
        elif name == "stationary":
            worst = max(_relative_variation(getattr(rec, s)) for s in ("mass", "energy", "entropy", "fisher"))
            checks.append(Check("stationary", worst, 1e-3, scale))
        elif name == "monotone":
            for series in ("entropy", "fisher"):
                _, worst = evolution.monotone_violation(getattr(rec, series))
                checks.append(Check(f"monotone_{series}", worst, 1e-3, scale))
        elif name == "consistency":
            for quantity in ("fisher", "entropy"):
                samples = evolution.dissipation_consistency(rec, spec, quantity, flux=cfg.flux)
                worst = max(s.error / s.allowed if s.allowed > 0 else math.inf for s in samples)
                checks.append(Check(f"consistency_{quantity}", worst, 1.0, scale))
        elif name == "margins":
            worst = max(_margin_excess(r) for _, r in rec.reports)
            checks.append(Check("margins", worst, 1e-8, scale))
        elif name == "decay":
            try:
                d = evolution.fisher_decay_check(rec.t, rec.fisher)
                value = 0.0 if d.stationary else d.late_max / d.early_max - 1.0
            except ValueError:
                value = math.inf
            checks.append(Check("decay", value, 0.05, scale))
    return checks


def cmd_simulate(config_path, out: str | None = None, seed: int | None = None) -> int:
    try:
        scale = tol_scale()
        cfg = io.load_config(config_path)
        changes = {k: v for k, v in (("out", out), ("seed", seed)) if v is not None}
        if changes:
            cfg = cfg.replace(**changes)
        spec = cfg.kernel()
        grid = make_grid(cfg.n, cfg.L)
        controls = RunControls(dt=cfg.dt, cfl_safety=cfg.cfl_safety, scheme=cfg.scheme, flux=cfg.flux,
                               stride=cfg.stride, snapshot_times=cfg.snapshots)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    start = time.perf_counter()
    try:
        rec = evolution.run(cfg.initial_data(), spec, cfg.T, controls, grid)
        checks = simulation_checks(cfg, rec, spec, scale)
    except (CFLError, NumericalAbort, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return NUMERICAL_ABORT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    out_dir = Path(cfg.out)
    io.atomic_write(out_dir / "config.cfg", cfg.to_text())
    io.atomic_write(out_dir / "series.csv", io.series_text(rec))
    for t, f in sorted(rec.snapshots.items()):
        io.save_snapshot(out_dir / f"snapshot_t{t:.6g}.lfsh", f, spec.gamma, t)
    io.save_snapshot(out_dir / "final.lfsh", rec.final, spec.gamma, rec.t[-1])
    entries = {
        "steps": len(rec.t) - 1,
        "dt": rec.dt[-1],
        "t_final": rec.t[-1],
        "seed": cfg.seed,
        "final.mass": rec.mass[-1],
        "final.px": float(rec.momentum[-1][0]),
        "final.py": float(rec.momentum[-1][1]),
        "final.pz": float(rec.momentum[-1][2]),
        "final.energy": rec.energy[-1],
        "final.entropy": rec.entropy[-1],
        "final.llogl": rec.l_log_l[-1],
        "final.fisher": rec.fisher[-1],
        "final.linf": rec.linf[-1],
        "mass_drift": rec.mass_drift(),
        "clipped_mass": float(np.sum(rec.clipped_mass)),
        "runtime_s": time.perf_counter() - start,
    }
    entries.update(_verdict(checks, scale))
    _emit(entries, str(out_dir), "summary.txt")
    return _report_failures(checks)


# -- analyze -----------------------------------------------------------------------

BRUTE_MAX_N = 8


def cmd_analyze(snapshot_path, gamma: float | None = None, brute_force: bool = False, coercivity: bool = False,
                mode: str | None = None, out: str | None = None) -> int:
    from landau_fisher.pair import PairContext, coercivity_constant, fisher_dissipation_terms

    try:
        scale = tol_scale()
        snap = io.load_snapshot(snapshot_path)
        spec = KernelSpec(snap.gamma if gamma is None else gamma)
        f = snap.density()
        if brute_force and snap.n > BRUTE_MAX_N:
            raise ValueError(f"--brute-force needs n <= {BRUTE_MAX_N}, snapshot has n={snap.n}")
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    s = hydrodynamics(f)
    fr = fisher(f)
    entries = {
        "n": snap.n, "L": snap.L, "gamma": spec.gamma, "t": snap.t,
        "mass": s.mass, "px": float(s.momentum[0]), "py": float(s.momentum[1]), "pz": float(s.momentum[2]),
        "energy": s.energy, "entropy": s.entropy, "llogl": s.l_log_l,
        "fisher": fr.chosen, "fisher_spread": fr.spread(),
    }
    ctx = PairContext(f, spec)
    report = fisher_dissipation_terms(ctx, mode, with_j=True)
    entries.update(report.as_dict())
    checks = []
    if coercivity:
        c, cell = coercivity_constant(ctx)
        entries["coercivity"] = c
        entries["coercivity_cell"] = ",".join(str(i) for i in cell)
    if brute_force:
        from landau_fisher.brute import brute_force_terms

        ref = brute_force_terms(f, spec, report.mode)
        worst = 0.0
        for name in io.REPORT_COLUMNS:
            a, b = getattr(report, name), ref[name]
            err = abs(a - b) / max(abs(a), abs(b), 1e-300)
            entries[f"brute.{name}"] = b
            worst = max(worst, err)
        checks.append(Check("brute_force", worst, 1e-12, scale))
    entries.update(_verdict(checks, scale))
    _emit(entries, out, "analysis.txt")
    return _report_failures(checks)


# -- gamma2 ------------------------------------------------------------------------


def cmd_gamma2(seed: int = 0, seeds: int = 20, degree: int = 6, steps: int = 60, n_theta: int = 16,
               out: str | None = None) -> int:
    from landau_fisher import gamma2

    try:
        scale = tol_scale()
        if seeds < 1 or steps < 0 or n_theta < 8:
            raise ValueError("need --seeds >= 1, --steps >= 0 and --n-theta >= 8")
        gamma2.even_degrees(degree)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    lin2 = gamma2.linearized_ratio(2)
    lin1 = gamma2.linearized_ratio(1)
    probe = gamma2.probe_minimum(seed_count=seeds, max_harmonic_degree=degree, steps=steps, seed=seed,
                                 n_theta=n_theta, n_phi=2 * n_theta)
    checks = [
        Check("linearized_l2", abs(lin2 - 6.0), 0.05, scale),
        Check("linearized_l1", abs(lin1 - 2.0), 0.05, scale),
        Check("probe_min", 5.4 - probe.min_ratio, 0.0, scale),
    ]
    entries = {
        "linearized_l2": lin2,
        "linearized_l1": lin1,
        "min_ratio": probe.min_ratio,
        "argmin": probe.describe(),
        "seeds": seeds, "degree": degree, "steps": steps, "seed": seed,
    }
    entries.update(_verdict(checks, scale))
    _emit(entries, out, "gamma2.txt")
    return _report_failures(checks)


# -- selftest ----------------------------------------------------------------------


def selftest_checks(samples: int = 10_000, seed: int = 0) -> tuple[list[Check], dict]:
    from landau_fisher import gamma2, kernels, operator, pair
    from landau_fisher.convolution import Convolver, direct_sum
    from landau_fisher.grid import Density, integrate

    rng = np.random.default_rng(seed)
    checks, info = [], {}
    g = rng.standard_normal((samples, 6))
    v, w = rng.standard_normal((samples, 3)), rng.standard_normal((samples, 3))
    res = pair.decomposition_identity_check(g, v, w)
    checks.append(Check("decomposition", float(np.max(np.abs(res) / np.sum(g * g, axis=1))), 1e-12))

    z = rng.standard_normal((samples, 3))
    a = kernels.a_matrix(z)
    bb = sum(np.einsum("mi,mj->mij", kernels.b_field(k, z), kernels.b_field(k, z)) for k in range(3))
    r2 = np.sum(z * z, axis=1)
    checks.append(Check("a_equals_sum_bb", float(np.max(np.abs(a - bb)) / np.max(r2)), 1e-14))
    trace = np.trace(a, axis1=1, axis2=2)
    checks.append(Check("trace_a", float(np.max(np.abs(trace - 2 * r2) / r2)), 1e-14))

    grid = make_grid(8, 2.0)
    f = Density(grid, np.exp(-grid.speed_sq / 2) * (1 + 0.5 * rng.random(grid.shape)))
    spec = KernelSpec(-3.0)
    A = operator.coefficient_fields(f, spec).A
    ref = 2 * operator.radial_convolution(f, spec.gamma + 2.0, spec=spec)
    tr = A[0, 0] + A[1, 1] + A[2, 2]
    checks.append(Check("trace_relation", float(np.max(np.abs(tr - ref)) / np.max(np.abs(ref))), 1e-10))
    kern = operator.diffusion_kernels(grid, spec)[("A", 0, 1)]
    fast = Convolver(grid, "fft")(kern, f.values)
    slow = direct_sum(grid, kern, f.values)
    checks.append(Check("fft_vs_direct", float(np.max(np.abs(fast - slow)) / np.max(np.abs(slow))), 1e-10))

    # midpoint rule on a wide box is spectrally accurate for Gaussians: mass and energy of a unit Maxwellian
    wide = make_grid(32, 8.0)
    m = np.exp(-wide.speed_sq / 2) / (2 * np.pi) ** 1.5
    quad = max(abs(integrate(wide, m) - 1.0), abs(integrate(wide, m * wide.speed_sq) - 3.0) / 3.0)
    # Gauss-Legendre x uniform sphere rule integrates products of harmonics up to its degree exactly
    n_t = 12
    pts, wts = gamma2._nodes(n_t, 2 * n_t)
    Y = gamma2.real_harmonics(pts, tuple(range(n_t)))
    gram = (Y * wts[:, None]).T @ Y
    quad = max(quad, float(np.max(np.abs(gram - np.eye(gram.shape[0])))))
    checks.append(Check("quadrature", quad, 1e-12))

    blob = io.encode_snapshot(f, spec.gamma, 0.25)
    back = io.decode_snapshot(blob)
    same = back.values.tobytes() == f.values.tobytes() and (back.n, back.L, back.gamma, back.t) == (8, 2.0, -3.0, 0.25)
    checks.append(Check("snapshot_roundtrip", 0.0 if same else 1.0, 0.0))

    eta = kernels.eta_self_test()
    info["sup_eta_dd"] = eta["sup_eta_dd"]
    info["sup_eta_d"] = eta["sup_eta_d"]
    checks.append(Check("eta", float(sum(not ok for ok in eta["checks"].values())), 0.0))
    return checks, info


def cmd_selftest(out: str | None = None) -> int:
    try:
        scale = tol_scale()
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    start = time.perf_counter()
    checks, info = selftest_checks()
    checks = [Check(c.name, c.value, c.tolerance, scale) for c in checks]
    entries = dict(info)
    entries["runtime_s"] = time.perf_counter() - start
    entries.update(_verdict(checks, scale))
    _emit(entries, out, "selftest.txt")
    return _report_failures(checks)


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landau-fisher", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a configured evolution and its checks")
    sim.add_argument("--config", required=True, metavar="PATH")
    sim.add_argument("--out", metavar="DIR")
    sim.add_argument("--seed", type=int, metavar="N")
    an = sub.add_parser("analyze", help="functionals and dissipation terms of a snapshot")
    an.add_argument("--snapshot", required=True, metavar="PATH")
    an.add_argument("--gamma", type=float, metavar="G")
    an.add_argument("--brute-force", action="store_true", help="compare with the naive pair loop (n <= 8)")
    an.add_argument("--coercivity", action="store_true", help="scan the coercivity constant over cells")
    an.add_argument("--mode", choices=("raw", "cutoff"))
    an.add_argument("--out", metavar="DIR")
    g2 = sub.add_parser("gamma2", help="curvature ratio probe on the sphere")
    g2.add_argument("--seed", type=int, default=0, metavar="N")
    g2.add_argument("--seeds", type=int, default=20)
    g2.add_argument("--degree", type=int, default=6)
    g2.add_argument("--steps", type=int, default=60)
    g2.add_argument("--n-theta", type=int, default=16)
    g2.add_argument("--out", metavar="DIR")
    st = sub.add_parser("selftest", help="identity and format checks")
    st.add_argument("--out", metavar="DIR")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INPUT_ERROR
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.seed)
        if args.command == "analyze":
            return cmd_analyze(args.snapshot, args.gamma, args.brute_force, args.coercivity, args.mode, args.out)
        if args.command == "gamma2":
            return cmd_gamma2(args.seed, args.seeds, args.degree, args.steps, args.n_theta, args.out)
        return cmd_selftest(args.out)
    except (CFLError, NumericalAbort, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return NUMERICAL_ABORT


def entry() -> None:
    sys.exit(main())
