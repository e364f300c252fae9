"""Command-line front end.

Subcommands ``scatter``, ``ep-report``, ``field`` and ``regimes`` all read
the same configuration file. Exit status: 0 on success, 2 for configuration
errors, 3 for numerical failures (results computed before the failure are
still written and flagged).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .dispersion import Incidence, exceptional_wavenumbers, is_exceptional, n_star
from .errors import ConfigError, DomainError, ExceptionalPointError, GrazingModeError, ScatteringError
from .fieldmap import field_grid
from .scattering import Truncation, amplitudes, classify_regime, default_theta_grid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SCATTER_COLUMNS = ("theta_deg", "R_re", "R_im", "R_abs2", "T_re", "T_im", "T_abs2")
DELTA_COLUMNS = ("kind", "angle_deg", "coeff_re", "coeff_im")
EP_COLUMNS = ("k", "n", "varpi_re", "varpi_im", "multiplier_re", "multiplier_im", "regime")
REGIME_COLUMNS = ("k", "regime", "n_star", "eta", "min_evanescent_aw", "exceptional_mode")
FIELD_COLUMNS = ("x", "y", "psi_re", "psi_im", "psi_abs2")

# names of the formulas behind each output, recorded in JSON metadata
FORMULA_REFS = [
    "per-mode Fabry-Perot coefficients r/s",
    "Gamma kernel mode sum",
    "angular reflection/transmission amplitudes",
    "vertical-boundary wall term",
]


# ---------------------------------------------------------------------------
# serialisation


def _num(x):
    """Shortest round-trip text for a float; ``nan`` for NaN."""
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _num(v)


def _json_num(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    if x is None or isinstance(x, (str, bool)):
        return x
    x = float(x)
    return None if math.isnan(x) else x


def _csv_text(columns, rows, header_lines=()):
    out = [f"# {h}" for h in header_lines]
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(_cell(v) for v in row))
    return "\n".join(out) + "\n"


def _json_text(payload):
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return _json_num(o)

    return json.dumps(clean(payload), indent=1, allow_nan=False) + "\n"


def _rows_as_dicts(columns, rows):
    return [dict(zip(columns, row)) for row in rows]


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _abs2(z):
    re, im = float(z.real), float(z.imag)
    v = re * re + im * im
    if not (math.isnan(v) or math.isclose(v, abs(complex(re, im)) ** 2, rel_tol=1e-14, abs_tol=1e-300)):
        raise ScatteringError("inconsistent squared magnitude")
    return v


# ---------------------------------------------------------------------------
# computations


def _scatter_one(cfg, k):
    inc = Incidence(k, math.radians(cfg.theta0_deg), cfg.side)
    grid = default_theta_grid(inc.side, cfg.theta_points, cfg.exclusion_band_deg)
    tr = Truncation(tol=cfg.tol, max_modes=cfg.max_modes)
    reg = classify_regime(k, cfg.spec)
    meta = {
        "k": k,
        "theta0_deg": cfg.theta0_deg,
        "side": inc.side.value,
        "regime": reg.regime.value,
        "n_star": reg.n_star,
        "exceptional": is_exceptional(k, cfg.spec.b, cfg.spec.V0) is not None,
        "paper_refs": FORMULA_REFS,
        "reflection_angle": "180 - theta_deg",
    }
    try:
        amp = amplitudes(inc, cfg.spec, grid, tr)
    except ScatteringError as exc:
        meta["truncation_used"] = getattr(exc, "n_used", None)
        meta["error"] = str(exc)
        return meta, [], [], False
    meta["truncation_used"] = amp.n_used
    rows = []
    for th, r, t in zip(grid, amp.R.smooth, amp.T.smooth):
        rows.append((math.degrees(th), float(r.real), float(r.imag), _abs2(r), float(t.real), float(t.imag), _abs2(t)))
    deltas = [
        ("R", math.degrees(amp.R.theta_sing), amp.R.delta_coeff.real, amp.R.delta_coeff.imag),
        ("T", math.degrees(amp.T.theta_sing), amp.T.delta_coeff.real, amp.T.delta_coeff.imag),
    ]
    return meta, rows, deltas, True


def _numbered(path, i, count):
    if count == 1 or path is None:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}.k{i:03d}{p.suffix}"))


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map preserves input order


def run_scatter(cfg, threads=1):
    ks = cfg.k_values
    if cfg.path is None and len(ks) > 1:
        raise ConfigError("a k-sweep needs an output path", key="output.path")
    results = _map(lambda k: _scatter_one(cfg, k), ks, threads)
    ok_all = True
    for i, (meta, rows, deltas, ok) in enumerate(results):
        ok_all &= ok
        path = _numbered(cfg.path, i, len(ks))
        if cfg.format == "json":
            payload = {
                "metadata": meta,
                "columns": list(SCATTER_COLUMNS),
                "rows": _rows_as_dicts(SCATTER_COLUMNS, rows),
                "deltas": _rows_as_dicts(DELTA_COLUMNS, deltas),
            }
            _write(path, _json_text(payload))
        else:
            header = [f"{key}={meta[key]}" for key in ("k", "theta0_deg", "side", "regime", "n_star", "exceptional", "truncation_used")]
            if not ok:
                header.append(f"error={meta['error']}")
            _write(path, _csv_text(SCATTER_COLUMNS, rows, header))
            if path is not None:
                p = Path(path)
                _write(str(p.with_name(p.stem + ".deltas.csv")), _csv_text(DELTA_COLUMNS, deltas))
    if cfg.emit_field:
        fcfg = cfg.with_overrides(path=None if cfg.path is None else str(Path(cfg.path).with_suffix("")) + ".field." + cfg.format)
        code = run_field(fcfg)
        if code != EXIT_OK:
            return code
    return EXIT_OK if ok_all else EXIT_NUMERIC


def ep_rows(cfg):
    ks = cfg.k_values
    lo, hi = (ks[0], ks[-1]) if cfg.sweep is not None else (cfg.k, cfg.k)
    spec = cfg.spec
    if hi > lo:
        found = exceptional_wavenumbers(lo, hi, spec.b, spec.V0)
    else:
        n = is_exceptional(lo, spec.b, spec.V0)
        found = [] if n is None else [(lo, n)]
    rows = []
    for ks_, n in found:
        V0 = spec.V0_real
        # varpi at the exceptional point is sqrt(V0) (imaginary for V0 < 0)
        vp = complex(math.sqrt(V0)) if V0 >= 0 else 1j * math.sqrt(-V0)
        mult = np.exp(-1j * spec.a * vp) / (1 - 0.5j * spec.a * vp)
        rows.append((ks_, n, vp.real, vp.imag, mult.real, mult.imag, classify_regime(ks_, spec).regime.value))
    return rows


def run_ep_report(cfg, threads=1):
    rows = ep_rows(cfg)
    if cfg.format == "json":
        _write(cfg.path, _json_text({"columns": list(EP_COLUMNS), "rows": _rows_as_dicts(EP_COLUMNS, rows)}))
    else:
        _write(cfg.path, _csv_text(EP_COLUMNS, rows))
    return EXIT_OK


def _regime_row(cfg, k):
    r = classify_regime(k, cfg.spec)
    nan = float("nan")
    return (
        k,
        r.regime.value,
        r.n_star,
        nan if r.eta is None else r.eta,
        nan if r.min_evanescent_aw is None else r.min_evanescent_aw,
        "" if r.exceptional_mode is None else str(r.exceptional_mode),
    )


def run_regimes(cfg, threads=1):
    rows = _map(lambda k: _regime_row(cfg, k), cfg.k_values, threads)
    if cfg.format == "json":
        js = [(*row[:5], None if row[5] == "" else int(row[5])) for row in rows]
        _write(cfg.path, _json_text({"columns": list(REGIME_COLUMNS), "rows": _rows_as_dicts(REGIME_COLUMNS, js)}))
    else:
        _write(cfg.path, _csv_text(REGIME_COLUMNS, rows))
    return EXIT_OK


def run_field(cfg, threads=1):
    if cfg.field_box is None or cfg.field_grid is None:
        raise ConfigError("field output needs output.field_box and output.field_grid", key="output.field_box")
    if cfg.sweep is not None:
        raise ConfigError("field maps need a single incidence.k", key="incidence.k_min")
    inc = Incidence(cfg.k, math.radians(cfg.theta0_deg), cfg.side)
    fm = field_grid(inc, cfg.spec, cfg.field_box, cfg.field_grid, N=cfg.field_modes)
    rows = []
    for i, x in enumerate(fm.x):
        for j, y in enumerate(fm.y):
            z = fm.psi[i, j]
            rows.append((float(x), float(y), float(z.real), float(z.imag), _abs2(z)))
    h = cfg.config_hash()
    meta = {"n_modes": fm.n_modes, "failures": fm.failures, "face_l2_tail": fm.face_l2_tail, "wall_max": fm.wall_max}
    if cfg.format == "json":
        payload = {"config_hash": h, "metadata": meta, "columns": list(FIELD_COLUMNS), "rows": _rows_as_dicts(FIELD_COLUMNS, rows)}
        _write(cfg.path, _json_text(payload))
    else:
        header = [f"config_hash={h}"] + [f"{k}={_num(v) if isinstance(v, float) else v}" for k, v in meta.items()]
        _write(cfg.path, _csv_text(FIELD_COLUMNS, rows, header))
    if fm.failures:
        print(f"field: {fm.failures} sample(s) failed quadrature and were written as NaN", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS = {"scatter": run_scatter, "ep-report": run_ep_report, "field": run_field, "regimes": run_regimes}


def build_parser():
    ap = argparse.ArgumentParser(prog="wgscatter", description="Scattering by a finite filled waveguide.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="key=value configuration file")
        sp.add_argument("--out", help="output path (overrides output.path)")
        sp.add_argument("--format", choices=("csv", "json"), help="overrides output.format")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = load_config(args.config).with_overrides(path=args.out, fmt=args.format)
        return COMMANDS[args.command](cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GrazingModeError, ExceptionalPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScatteringError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
