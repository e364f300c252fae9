"""Run configuration: flat ``section.key = value`` text files.

Blank lines and lines starting with ``#`` are ignored. Every key must be
known, appear once and parse to its declared type; cross-key constraints
are checked after parsing and reported against the offending key's line.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import GRAZING_COS_MIN, Side
from .errors import ConfigError, DomainError
from .wells import WaveguideSpec


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not a finite number")
    return v


def _int(s):
    return int(s, 10)


def _bool(s):
    t = s.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def _floats(count):
    def parse(s):
        parts = [p.strip() for p in s.split(",")]
        if len(parts) != count:
            raise ValueError(f"expected {count} comma-separated numbers")
        return tuple(_float(p) for p in parts)

    return parse


def _ints(count):
    def parse(s):
        parts = [p.strip() for p in s.split(",")]
        if len(parts) != count:
            raise ValueError(f"expected {count} comma-separated integers")
        return tuple(_int(p) for p in parts)

    return parse


def _choice(*opts):
    def parse(s):
        if s.lower() not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return s.lower()

    return parse


KEYS = {
    "geometry.a_minus": _float,
    "geometry.a_plus": _float,
    "geometry.b": _float,
    "medium.V0_real": _float,
    "medium.V0_imag": _float,
    "incidence.k": _float,
    "incidence.k_min": _float,
    "incidence.k_max": _float,
    "incidence.k_steps": _int,
    "incidence.theta0_deg": _float,
    "incidence.side": _choice("left", "right"),
    "grid.theta_points": _int,
    "grid.exclusion_band_deg": _float,
    "truncation.max_modes": _int,
    "truncation.tol": _float,
    "truncation.field_modes": _int,
    "output.format": _choice("csv", "json"),
    "output.path": str,
    "output.emit_field": _bool,
    "output.field_box": _floats(4),
    "output.field_grid": _ints(2),
}

REQUIRED = ("geometry.a_minus", "geometry.a_plus", "geometry.b")


@dataclass(frozen=True)
class Sweep:
    k_min: float
    k_max: float
    steps: int

    def values(self):
        if self.steps == 1:
            return [self.k_min]
        return [float(v) for v in np.linspace(self.k_min, self.k_max, self.steps)]


@dataclass(frozen=True)
class RunConfig:
    spec: WaveguideSpec
    k: float | None
    sweep: Sweep | None
    theta0_deg: float
    side: Side | None
    theta_points: int
    exclusion_band_deg: float
    max_modes: int
    tol: float
    field_modes: int | None
    format: str
    path: str | None
    emit_field: bool
    field_box: tuple | None
    field_grid: tuple | None
    source: tuple = ()  # normalised (key, value-text) pairs, sorted

    @property
    def k_values(self):
        return [self.k] if self.sweep is None else self.sweep.values()

    @property
    def has_sweep(self):
        return self.sweep is not None

    def config_hash(self):
        text = "\n".join(f"{k}={v}" for k, v in self.source)
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, path=None, fmt=None):
        from dataclasses import replace

        return replace(self, path=path if path is not None else self.path, format=fmt if fmt is not None else self.format)


def parse_config_text(text):
    """Parse configuration text into a validated :class:`RunConfig`."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key=key, line=lineno)
        if val == "":
            raise ConfigError("missing value", key=key, line=lineno)
        try:
            values[key] = KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value {val!r}: {exc}", key=key, line=lineno) from None
        lines[key] = lineno
    return _build(values, lines)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config_text(text)


def _build(v, lines):
    def err(msg, key):
        return ConfigError(msg, key=key, line=lines.get(key))

    for key in REQUIRED:
        if key not in v:
            raise ConfigError("required key missing", key=key)
    V0 = complex(v.get("medium.V0_real", 0.0), v.get("medium.V0_imag", 0.0))
    try:
        spec = WaveguideSpec(v["geometry.a_minus"], v["geometry.a_plus"], v["geometry.b"], V0)
    except DomainError as exc:
        bad = "geometry.b" if "width" in str(exc) else "geometry.a_plus"
        raise err(str(exc), bad) from None

    sweep_keys = [k for k in ("incidence.k_min", "incidence.k_max", "incidence.k_steps") if k in v]
    k = v.get("incidence.k")
    sweep = None
    if k is not None and sweep_keys:
        raise err("give either incidence.k or a sweep, not both", sweep_keys[0])
    if sweep_keys:
        missing = [s for s in ("incidence.k_min", "incidence.k_max", "incidence.k_steps") if s not in v]
        if missing:
            raise ConfigError("incomplete sweep", key=missing[0])
        if not 0 < v["incidence.k_min"] < v["incidence.k_max"]:
            raise err("need 0 < k_min < k_max", "incidence.k_max")
        if v["incidence.k_steps"] < 1:
            raise err("need at least one sweep point", "incidence.k_steps")
        sweep = Sweep(v["incidence.k_min"], v["incidence.k_max"], v["incidence.k_steps"])
    elif k is None:
        raise ConfigError("need incidence.k or incidence.k_min/k_max/k_steps", key="incidence.k")
    elif not k > 0:
        raise err("wavenumber must be positive", "incidence.k")

    th = v.get("incidence.theta0_deg", 0.0)
    c = math.cos(math.radians(th))
    if abs(c) < GRAZING_COS_MIN:
        raise err("incidence too close to +-90 degrees", "incidence.theta0_deg")
    side = Side(v["incidence.side"]) if "incidence.side" in v else None
    inferred = Side.LEFT if c > 0 else Side.RIGHT
    if side is not None and side is not inferred:
        raise err(f"theta0_deg={th} is a {inferred.value}-incidence angle", "incidence.side")

    points = v.get("grid.theta_points", 721)
    if points < 2:
        raise err("need at least 2 angles", "grid.theta_points")
    band = v.get("grid.exclusion_band_deg", 0.5)
    if not 0 < band < 90:
        raise err("exclusion band must lie in (0, 90) degrees", "grid.exclusion_band_deg")
    if math.cos(math.radians(90 - band)) < GRAZING_COS_MIN:
        raise err("exclusion band too narrow", "grid.exclusion_band_deg")

    max_modes = v.get("truncation.max_modes", 20000)
    if max_modes < 1:
        raise err("max_modes must be positive", "truncation.max_modes")
    tol = v.get("truncation.tol", 1e-10)
    if not tol > 0:
        raise err("tol must be positive", "truncation.tol")
    field_modes = v.get("truncation.field_modes")
    if field_modes is not None and field_modes < 1:
        raise err("field_modes must be positive", "truncation.field_modes")

    box = v.get("output.field_box")
    if box is not None and not (box[1] > box[0] and box[3] > box[2]):
        raise err("field box needs x0 < x1 and y0 < y1", "output.field_box")
    grid = v.get("output.field_grid")
    if grid is not None and min(grid) < 2:
        raise err("field grid needs at least 2 x 2 points", "output.field_grid")
    emit = v.get("output.emit_field", False)
    if emit and (box is None or grid is None):
        raise err("emit_field needs output.field_box and output.field_grid", "output.emit_field")

    source = tuple(sorted((key, _canon(val)) for key, val in v.items()))
    return RunConfig(
        spec=spec,
        k=k,
        sweep=sweep,
        theta0_deg=th,
        side=side,
        theta_points=points,
        exclusion_band_deg=band,
        max_modes=max_modes,
        tol=tol,
        field_modes=field_modes,
        format=v.get("output.format", "csv"),
        path=v.get("output.path"),
        emit_field=emit,
        field_box=box,
        field_grid=grid,
        source=source,
    )


def _canon(val):
    if isinstance(val, tuple):
        return ",".join(_canon(x) for x in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)
