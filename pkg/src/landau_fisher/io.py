"""Run configuration, snapshots, series and summary files.

Config files are ``key = value`` lines; ``#`` starts a comment. Lists are
comma separated, point lists semicolon separated. Every file is written to a
temporary sibling first and renamed into place.

Snapshot layout (all little-endian):

    offset  size  field
    0       5     magic b"LFSH1"
    5       3     zero padding
    8       4     uint32 endianness tag 0x01020304
    12      4     uint32 n
    16      8     float64 L
    24      8     float64 gamma
    32      8     float64 t
    40      8n^3  float64 values, row-major (i, j, k)
"""

from __future__ import annotations

import csv
import math
import os
import struct
import tempfile
from io import StringIO
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from landau_fisher.evolution import KINDS, InitialData
from landau_fisher.grid import Density, make_grid
from landau_fisher.kernels import CUTOFF, RAW, KernelSpec
from landau_fisher.operator import SCHEMES


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class SnapshotError(ValueError):
    pass


# -- run configuration ------------------------------------------------------------

CHECKS = ("mass", "stationary", "monotone", "consistency", "margins", "decay")
TIME_SCHEMES = ("explicit", "semi-implicit")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _points(text: str) -> tuple:
    return tuple(_floats(p) for p in text.split(";") if p.strip())


def _names(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _optional_float(text: str):
    return None if text.strip() in ("auto", "none") else float(text)


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(_fmt(p) for p in value)
        return ", ".join(_fmt(x) for x in value)
    return str(value)


# key -> (attribute, parser)
KEYS = {
    "grid.n": ("n", int),
    "grid.L": ("L", float),
    "kernel.gamma": ("gamma", float),
    "kernel.epsilon": ("epsilon", float),
    "kernel.cutoff": ("cutoff", str),
    "initial.kind": ("kind", str),
    "initial.mass": ("mass", _optional_float),
    "initial.temperature": ("temperature", float),
    "initial.mean": ("mean", _floats),
    "initial.means": ("means", _points),
    "initial.temperatures": ("temperatures", _floats),
    "initial.masses": ("masses", _floats),
    "initial.amplitude": ("amplitude", float),
    "initial.radius": ("radius", float),
    "initial.background": ("background", float),
    "time.T": ("T", float),
    "time.dt": ("dt", _optional_float),
    "time.cfl_safety": ("cfl_safety", float),
    "time.stride": ("stride", int),
    "time.scheme": ("scheme", str),
    "time.flux": ("flux", str),
    "time.snapshots": ("snapshots", _floats),
    "checks": ("checks", _names),
    "output.dir": ("out", str),
    "seed": ("seed", int),
}


@dataclass(frozen=True)
class RunConfig:
    n: int = 16
    L: float = 4.0
    gamma: float = -3.0
    epsilon: float = 0.0
    cutoff: str = RAW
    kind: str = "maxwellian"
    mass: float | None = 1.0
    temperature: float = 1.0
    mean: tuple = (0.0, 0.0, 0.0)
    means: tuple = ((2.0, 0.0, 0.0), (-2.0, 0.0, 0.0))
    temperatures: tuple = (0.5, 0.5)
    masses: tuple = (0.5, 0.5)
    amplitude: float = 0.3
    radius: float = 1.5
    background: float = 0.0
    T: float = 0.1
    dt: float | None = None
    cfl_safety: float = 0.5
    stride: int = 10
    scheme: str = "explicit"
    flux: str = "hybrid"
    snapshots: tuple = ()
    checks: tuple = ("mass", "monotone")
    out: str = "out"
    seed: int = 0
    lines: dict = field(default_factory=dict, compare=False, repr=False)  # attribute -> source line

    def __post_init__(self):
        def fail(attr, msg):
            raise ConfigError(msg, self.lines.get(attr))

        if not (-3.0 <= self.gamma < -2.0):
            fail("gamma", f"gamma must lie in [-3, -2), got {self.gamma}")
        if self.n < 4 or self.n % 2:
            fail("n", f"grid.n must be an even integer >= 4, got {self.n}")
        if not (math.isfinite(self.L) and self.L > 0):
            fail("L", f"grid.L must be positive, got {self.L}")
        if not (math.isfinite(self.T) and self.T > 0):
            fail("T", f"time.T must be positive, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            fail("dt", f"time.dt must be positive or auto, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            fail("cfl_safety", "time.cfl_safety must lie in (0, 1]")
        if self.stride < 0:
            fail("stride", "time.stride must be >= 0")
        if self.epsilon < 0:
            fail("epsilon", "kernel.epsilon must be >= 0")
        if self.cutoff not in (RAW, CUTOFF):
            fail("cutoff", f"kernel.cutoff must be {RAW!r} or {CUTOFF!r}")
        if self.kind not in KINDS:
            fail("kind", f"initial.kind must be one of {', '.join(KINDS)}")
        if self.scheme not in TIME_SCHEMES:
            fail("scheme", f"time.scheme must be one of {', '.join(TIME_SCHEMES)}")
        if self.flux not in SCHEMES:
            fail("flux", f"time.flux must be one of {', '.join(SCHEMES)}")
        if len(self.mean) != 3 or any(len(p) != 3 for p in self.means):
            fail("mean" if len(self.mean) != 3 else "means", "velocities need three components")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            fail("checks", f"unknown checks {', '.join(bad)}; expected a subset of {', '.join(CHECKS)}")
        needs_reports = {"consistency", "margins"} & set(self.checks)
        if needs_reports and self.stride == 0:
            fail("stride", f"checks {', '.join(sorted(needs_reports))} need time.stride > 0")
        try:
            self.initial_data()
        except ValueError as exc:
            fail("kind", str(exc))

    def initial_data(self) -> InitialData:
        return InitialData(self.kind, self.mass, self.temperature, self.mean, self.means,
                           self.temperatures, self.masses, self.amplitude, self.radius, self.background)

    def kernel(self) -> KernelSpec:
        return KernelSpec(self.gamma, self.epsilon, self.cutoff)

    def to_text(self) -> str:
        return "".join(f"{key} = {_fmt(getattr(self, attr))}\n" for key, (attr, _) in KEYS.items())

    def replace(self, **changes) -> "RunConfig":
        return replace(self, lines={}, **changes)


def parse_config(text: str) -> RunConfig:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        attr, parser = KEYS[key]
        if attr in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[attr]})", lineno)
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        lines[attr] = lineno
    return RunConfig(**values, lines=lines)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def config_fields() -> tuple:
    return tuple(f.name for f in fields(RunConfig) if f.name != "lines")


# -- atomic output -----------------------------------------------------------------


def atomic_write(path, data: bytes | str):
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- snapshots ---------------------------------------------------------------------

MAGIC = b"LFSH1"
ENDIAN_TAG = 0x01020304
_HEADER = struct.Struct("<5s3xIIddd")


@dataclass(frozen=True)
class Snapshot:
    n: int
    L: float
    gamma: float
    t: float
    values: np.ndarray

    def density(self) -> Density:
        return Density(make_grid(self.n, self.L), self.values)


def encode_snapshot(f: Density, gamma: float, t: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, ENDIAN_TAG, g.n, g.L, gamma, t)
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")


def decode_snapshot(blob: bytes) -> Snapshot:
    if len(blob) < _HEADER.size:
        raise SnapshotError(f"snapshot too short: {len(blob)} bytes, header needs {_HEADER.size}")
    magic, tag, n, L, gamma, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if tag != ENDIAN_TAG:
        if tag == int.from_bytes(ENDIAN_TAG.to_bytes(4, "little"), "big"):
            raise SnapshotError("endianness tag says big-endian; only little-endian snapshots are supported")
        raise SnapshotError(f"bad endianness tag 0x{tag:08x}")
    expected = _HEADER.size + 8 * n**3
    if len(blob) != expected:
        raise SnapshotError(f"size mismatch: {len(blob)} bytes, n={n} needs {expected}")
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(n, n, n).astype(float)
    return Snapshot(int(n), float(L), float(gamma), float(t), values)


def save_snapshot(path, f: Density, gamma: float, t: float):
    atomic_write(path, encode_snapshot(f, gamma, t))


def load_snapshot(path) -> Snapshot:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc.strerror}") from None
    return decode_snapshot(blob)


# -- series and summary ------------------------------------------------------------

SERIES_COLUMNS = ("t", "mass", "px", "py", "pz", "energy", "entropy", "llogl", "fisher", "linf")
REPORT_COLUMNS = ("d_par", "d_rad", "d_sph", "r_sph", "slope_term", "j1", "j2",
                  "entropy_dissipation", "fisher_dissipation_total")


def _num(x: float) -> str:
    return repr(float(x))


def series_text(rec) -> str:
    """One row per recorded step; dissipation columns are empty between reports."""
    with_reports = bool(rec.reports)
    reports = dict(rec.reports)
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS + (REPORT_COLUMNS if with_reports else ()))
    for k, t in enumerate(rec.t):
        p = rec.momentum[k]
        row = [t, rec.mass[k], p[0], p[1], p[2], rec.energy[k], rec.entropy[k],
               rec.l_log_l[k], rec.fisher[k], rec.linf[k]]
        row = [_num(x) for x in row]
        if with_reports:
            rep = reports.get(k)
            row += [_num(getattr(rep, c)) if rep else "" for c in REPORT_COLUMNS]
        w.writerow(row)
    return buf.getvalue()


def read_series(path) -> dict:
    """Columns of a series file as float arrays (empty cells become NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[j]) if r[j] else np.nan for r in body]) for j, name in enumerate(header)}


def summary_text(entries: dict) -> str:
    out = []
    for key, value in entries.items():
        out.append(f"{key} = {_num(value) if isinstance(value, (float, np.floating)) else value}\n")
    return "".join(out)


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
