"""Command-line front end: parameter sweeps, figure presets and checks.

Config files are flat ``key = value`` text, one entry per line, ``#`` starts
a comment.  Sweep axes are written as

    axis1 = gamma2 0.1 10 41 log
    axis2 = omega 0 1 3 linear

Every other key is either a run option (``quantity``, ``out``, ``format``,
``seed``, ``threads``) or a fixed model parameter.  Command-line flags
override the file; ``--set key=value`` overrides any single key.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import io
import itertools
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, linres, metrology, oracle, scatter1d, squeezing
from .core import CavitySystem, NoiseModel
from .errors import InvalidSpec, ModelError

QUANTITIES = ("product", "product_mixed", "szz", "smin", "wasted_info", "scatter", "oracle_check")
SYSTEM_FIELDS = tuple(f.name for f in dataclasses.fields(CavitySystem))
NOISE_FIELDS = ("laser_amp_excess", "laser_phase_excess")
POINT_FIELDS = ("omega", "theta", "xi")
SCATTER_FIELDS = ("r0", "delta_r", "tau", "l", "c", "branch", "order")
ORACLE_FIELDS = ("dt", "duration", "n_segments", "decimate", "n_seeds", "band_lo", "band_hi", "target_scale", "output")
OPTION_KEYS = ("quantity", "axis1", "axis2", "out", "format", "seed", "threads")
STRING_FIELDS = ("branch", "output")
INT_FIELDS = ("order", "n_segments", "decimate", "n_seeds", "seed", "threads")

PARAMETERS = {
    "product": SYSTEM_FIELDS + POINT_FIELDS,
    "product_mixed": SYSTEM_FIELDS + POINT_FIELDS,
    "szz": SYSTEM_FIELDS + POINT_FIELDS,
    "smin": SYSTEM_FIELDS + POINT_FIELDS,
    "wasted_info": SYSTEM_FIELDS + POINT_FIELDS,
    "scatter": SCATTER_FIELDS,
    "oracle_check": SYSTEM_FIELDS + NOISE_FIELDS + ("theta", "seed") + ORACLE_FIELDS,
}


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)

    def text(self) -> str:
        return f"{self.name} {_fmt(self.start)} {_fmt(self.stop)} {self.count} {self.scale}"


@dataclass
class SweepSpec:
    quantity: str
    axes: tuple
    fixed: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str = "csv"
    seed: int = 0
    threads: int = 1

    def echo(self) -> dict:
        d = {"quantity": self.quantity}
        for i, ax in enumerate(self.axes, 1):
            d[f"axis{i}"] = ax.text()
        d.update({k: v for k, v in self.fixed.items()})
        d["format"] = self.format
        d["seed"] = self.seed
        return d


# --- config parsing ---------------------------------------------------------


def parse_config(text: str) -> dict:
    entries = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"line {n}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        entries[key] = value
    return entries


def _value(key: str, text):
    if not isinstance(text, str):
        return text
    if key in STRING_FIELDS:
        return text
    try:
        return int(text) if key in INT_FIELDS else float(text)
    except ValueError:
        raise InvalidSpec(f"{key}: cannot parse {text!r} as a number") from None


def _axis(text: str) -> Axis:
    parts = text.split()
    if len(parts) not in (4, 5):
        raise InvalidSpec(f"axis must be 'name start stop count [linear|log]', got {text!r}")
    scale = parts[4] if len(parts) == 5 else "linear"
    if scale not in ("linear", "log"):
        raise InvalidSpec(f"axis scale must be linear or log, got {scale!r}")
    try:
        ax = Axis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), scale)
    except ValueError:
        raise InvalidSpec(f"cannot parse axis {text!r}") from None
    if ax.count < 2:
        raise InvalidSpec("axis count must be >= 2")
    if scale == "log" and (ax.start <= 0 or ax.stop <= 0):
        raise InvalidSpec("log axis bounds must be positive")
    return ax


def spec_from_mapping(entries: dict) -> SweepSpec:
    entries = dict(entries)
    quantity = entries.pop("quantity", None)
    if quantity not in QUANTITIES:
        raise InvalidSpec(f"quantity must be one of {QUANTITIES}, got {quantity!r}")
    allowed = PARAMETERS[quantity]
    axes = []
    for key in ("axis1", "axis2"):
        if key in entries:
            ax = _axis(entries.pop(key))
            if ax.name not in allowed:
                raise InvalidSpec(f"unknown swept parameter {ax.name!r} for quantity {quantity}")
            axes.append(ax)
    if not axes:
        raise InvalidSpec("a sweep needs at least axis1")
    fmt = entries.pop("format", "csv")
    if fmt not in ("csv", "json"):
        raise InvalidSpec(f"format must be csv or json, got {fmt!r}")
    out = entries.pop("out", None)
    seed = _value("seed", entries.pop("seed", 0))
    threads = _value("threads", entries.pop("threads", 1))
    fixed = {}
    for key, text in entries.items():
        if key not in allowed:
            raise InvalidSpec(f"unknown parameter {key!r} for quantity {quantity}")
        fixed[key] = _value(key, text)
    for ax in axes:
        fixed.pop(ax.name, None)
    return SweepSpec(quantity, tuple(axes), fixed, out, fmt, seed, threads)


# --- quantities -------------------------------------------------------------


def _system(p: dict) -> CavitySystem:
    kw = {k: p[k] for k in SYSTEM_FIELDS if k in p}
    kw.setdefault("gamma1", 1.0)
    kw.setdefault("gamma2", kw["gamma1"])
    if "xi" in p:
        kw["g_omega0"] = p["xi"] * kw.get("g_gamma0", 1.0)
        kw.setdefault("g_gamma0", 1.0)
    return CavitySystem(**kw)


def _q_product(p):
    s = _system(p)
    w = p.get("omega", 0.0)
    return {
        "product": metrology.ba_imp_product(s, w).value_norm,
        "product_engine": metrology.ba_imp_product_engine(s, w).value_norm,
    }


def _q_product_mixed(p):
    s = _system(p)
    w = p.get("omega", 0.0)
    return {
        "product": metrology.mixed_product(s.g_gamma0, s.g_omega0),
        "product_engine": metrology.ba_imp_product_engine(s, w).value_norm,
        "theta_opt": metrology.optimal_homodyne_angle(s),
    }


def _q_szz(p):
    s = _system(p)
    w, th = p.get("omega", s.omega_m), p.get("theta", 0.0)
    return {
        "szz": squeezing.szz(s, w, th),
        "szz_engine": float(linres.quadrature_psd(s, None, w, th)),
    }


def _q_smin(p):
    s = _system(p)
    w = p.get("omega", s.omega_m)
    theta, smin = squeezing.optimal_quadrature(s, w)
    n_ba, n_ba1, _ = squeezing.cooperativity(s, w)
    return {"theta_star": theta, "s_min": smin, "n_ba": n_ba, "n_ba1": n_ba1}


def _q_wasted(p):
    s = _system(p)
    w = p.get("omega", 0.0)
    c = complex(metrology.wasted_information(s, w))
    eng = linres.transfer_matrix(s, w).signal[linres.X_OUT2]
    return {"wasted_re": c.real, "wasted_im": c.imag, "wasted_abs": abs(c), "engine_abs": float(abs(eng))}


def _q_scatter(p):
    kw = {k: p[k] for k in SCATTER_FIELDS if k in p}
    if "r0" not in kw:
        raise InvalidSpec("scatter needs r0")
    res = scatter1d.solve_resonance(scatter1d.ScatterConfig(**kw))
    return {
        "k_re": res.k.real,
        "k_im": res.k.imag,
        "delta_omega_c": res.delta_omega_c,
        "decay": res.decay,
        "gamma_r": res.gamma_r,
        "gamma_rho": res.gamma_rho,
    }


def _oracle_setup(p):
    s = _system(p)
    noise = NoiseModel(p.get("laser_amp_excess", 0.0), p.get("laser_phase_excess", 0.0))
    out = p.get("output", "X_out1")
    if out == "Z":
        out = oracle.Quadrature(p.get("theta", 0.0))
    sim = oracle.SimConfig(
        dt=p["dt"],
        duration=p["duration"],
        n_segments=int(p.get("n_segments", 256)),
        seed=int(p.get("seed", 0)),
        outputs=(out,),
        decimate=int(p.get("decimate", 1)),
    )
    band = (p["band_lo"], p["band_hi"]) if "band_lo" in p and "band_hi" in p else None
    return s, noise, sim, band


def _q_oracle(p):
    s, noise, sim, band = _oracle_setup(p)
    summary = oracle.oracle_check(
        s, noise, sim, n_seeds=int(p.get("n_seeds", 20)), band=band, target_scale=p.get("target_scale", 1.0)
    )
    return {"pass_fraction": summary.pass_fraction, "n_points": summary.n_points, "passed": summary.passed}


COMPUTE = {
    "product": _q_product,
    "product_mixed": _q_product_mixed,
    "szz": _q_szz,
    "smin": _q_smin,
    "wasted_info": _q_wasted,
    "scatter": _q_scatter,
    "oracle_check": _q_oracle,
}
COLUMNS = {
    "product": ("product", "product_engine"),
    "product_mixed": ("product", "product_engine", "theta_opt"),
    "szz": ("szz", "szz_engine"),
    "smin": ("theta_star", "s_min", "n_ba", "n_ba1"),
    "wasted_info": ("wasted_re", "wasted_im", "wasted_abs", "engine_abs"),
    "scatter": ("k_re", "k_im", "delta_omega_c", "decay", "gamma_r", "gamma_rho"),
    "oracle_check": ("pass_fraction", "n_points", "passed"),
}


# --- sweep ------------------------------------------------------------------


def grid(spec: SweepSpec):
    names = [ax.name for ax in spec.axes]
    for combo in itertools.product(*(ax.values() for ax in spec.axes)):
        point = dict(spec.fixed)
        point.update({n: float(v) for n, v in zip(names, combo)})
        if spec.quantity == "oracle_check":
            point.setdefault("seed", spec.seed)
        yield point


def evaluate_point(args):
    quantity, point = args
    try:
        values = COMPUTE[quantity](point)
        status = "ok"
    except (ModelError, ValueError, ArithmeticError) as exc:
        values = {c: None for c in COLUMNS[quantity]}
        status = type(exc).__name__
    return values, status


def run_sweep(spec: SweepSpec) -> list:
    """Evaluate every grid point; rows come back in row-major axis order."""
    points = list(grid(spec))
    jobs = [(spec.quantity, p) for p in points]
    if spec.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(evaluate_point, jobs))
    else:
        results = [evaluate_point(j) for j in jobs]
    param_cols = [ax.name for ax in spec.axes] + [k for k in spec.fixed if k not in {a.name for a in spec.axes}]
    rows = []
    for point, (values, status) in zip(points, results):
        row = {k: point[k] for k in param_cols}
        row.update(values)
        row["status"] = status
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else _fmt(v)
    return v


def render(spec: SweepSpec, rows: list) -> str:
    if spec.format == "json":
        doc = {
            "spec": {k: _json_value(v) for k, v in spec.echo().items()},
            "rows": [{k: _json_value(v) for k, v in r.items()} for r in rows],
            "version": __version__,
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0]) if rows else []
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in header])
    return buf.getvalue()


def write_dataset(spec: SweepSpec, rows: list) -> str:
    text = render(spec, rows)
    if spec.output_path:
        with open(spec.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


PRESETS = {
    "fig2a": {
        "quantity": "product",
        "axis1": "omega 0 1 3 linear",
        "axis2": "gamma2 0.1 10 41 log",
        "gamma1": "1",
        "g_gamma0": "1",
    },
    "fig2b": {
        "quantity": "product_mixed",
        "axis1": "xi 0 10 101 linear",
        "gamma1": "1",
        "gamma2": "1",
        "g_gamma0": "1",
        "omega": "0",
    },
}


# --- argument handling ------------------------------------------------------


def _collect(args, base: dict | None = None) -> dict:
    entries = dict(base or {})
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            entries.update(parse_config(fh.read()))
    for item in args.set or []:
        if "=" not in item:
            raise InvalidSpec(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        entries[k.strip()] = v.strip()
    for flag, key in (("out", "out"), ("format", "format"), ("seed", "seed"), ("threads", "threads")):
        val = getattr(args, flag, None)
        if val is not None:
            entries[key] = str(val)
    return entries


def _cmd_sweep(args, preset=None):
    spec = spec_from_mapping(_collect(args, PRESETS.get(preset)))
    rows = run_sweep(spec)
    write_dataset(spec, rows)
    return 0


def _point_params(entries: dict, allowed) -> dict:
    p = {}
    for k, v in entries.items():
        if k in ("out", "format", "seed", "threads", "quantity"):
            continue
        if k not in allowed:
            raise InvalidSpec(f"unknown parameter {k!r}")
        p[k] = _value(k, v)
    return p


def _emit(report: dict, args):
    if getattr(args, "format", None) == "json":
        text = json.dumps({k: _json_value(v) for k, v in report.items()}, indent=1) + "\n"
    else:
        text = "".join(f"{k} = {_fmt(v)}\n" for k, v in report.items())
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_squeeze(args):
    p = _point_params(_collect(args), SYSTEM_FIELDS + POINT_FIELDS)
    s = _system(p)
    w = p.get("omega", s.omega_m)
    report = {"omega": w}
    report.update(_q_smin(p))
    report["S0"] = squeezing.squeezing_terms(s, w).S0
    try:
        report["s_asymptotic"] = squeezing.asymptotic_min(s, w)
    except ModelError as exc:
        report["s_asymptotic"] = type(exc).__name__
    if "theta" in p:
        report["szz"] = squeezing.szz(s, w, p["theta"])
    _emit(report, args)
    return 0


def _cmd_scatter(args):
    p = _point_params(_collect(args), SCATTER_FIELDS)
    cfg = scatter1d.ScatterConfig(**p)
    res = scatter1d.solve_resonance(cfg)
    dw, gr = scatter1d.tilt_response(cfg.r0, cfg.t, cfg.l, cfg.c, cfg.delta_r, cfg.branch)
    report = {
        "k_re": res.k.real,
        "k_im": res.k.imag,
        "delta_omega_c": res.delta_omega_c,
        "decay": res.decay,
        "gamma_r": res.gamma_r,
        "gamma_rho": res.gamma_rho,
        "delta_omega_c_first_order": dw,
        "gamma_r_first_order": gr,
        "shift_to_halfwidth": scatter1d.shift_to_halfwidth_ratio(cfg.r0, cfg.t),
        "shift_to_decay": scatter1d.shift_to_decay_ratio(cfg.r0, cfg.t),
    }
    if cfg.delta_r == 0.0 and cfg.tau > 0.0:
        ipd = scatter1d.input_port_decay(cfg)
        report.update(input_decay=ipd.general, input_decay_limit=ipd.limit, regime=ipd.regime)
    _emit(report, args)
    return 0


def _cmd_oracle(args):
    entries = _collect(args)
    p = _point_params(entries, PARAMETERS["oracle_check"])
    p["seed"] = _value("seed", entries.get("seed", 0))
    s, noise, sim, band = _oracle_setup(p)
    summary = oracle.oracle_check(
        s, noise, sim, n_seeds=int(p.get("n_seeds", 20)), band=band,
        target_scale=p.get("target_scale", 1.0), n_jobs=int(entries.get("threads", 1)),
    )
    rows = []
    for seed_index, rep in enumerate(summary.reports):
        for w, e, t, se, z in zip(rep.omega, rep.estimate, rep.target, rep.stderr, rep.z):
            rows.append({"seed_index": seed_index, "output": rep.label, "omega": w, "estimate": e,
                         "target": t, "stderr": se, "z": z, "within_3sigma": abs(z) < oracle.Z_LIMIT})
    if args.out:
        if args.format == "json":
            doc = {"spec": {k: _json_value(v) for k, v in p.items()}, "rows": [{k: _json_value(v) for k, v in r.items()} for r in rows],
                   "version": __version__, "pass_fraction": summary.pass_fraction, "passed": summary.passed}
            text = json.dumps(doc, indent=1) + "\n"
        else:
            buf = io.StringIO()
            wr = csv.writer(buf, lineterminator="\n")
            if rows:
                wr.writerow(list(rows[0]))
                for r in rows:
                    wr.writerow([_fmt(v) for v in r.values()])
            text = buf.getvalue()
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    verdict = "PASS" if summary.passed else "FAIL"
    sys.stdout.write(
        f"{verdict}: {summary.pass_fraction * 100:.2f}% of {summary.n_points} points within "
        f"{oracle.Z_LIMIT:g} sigma (need {oracle.PASS_FRACTION * 100:g}%)\n"
    )
    return 0 if summary.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dissipative-cavity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("sweep", "parameter sweep from a config file"),
        ("fig2a", "backaction-imprecision product vs gamma2/gamma1 and omega"),
        ("fig2b", "backaction-imprecision product vs dispersive/dissipative ratio"),
        ("squeeze", "squeezing figures of merit at one frequency"),
        ("scatter", "three-mirror cavity resonance"),
        ("oracle-check", "time-domain simulation against the analytic spectra"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command in PRESETS:
            return _cmd_sweep(args, preset=args.command)
        if args.command == "squeeze":
            return _cmd_squeeze(args)
        if args.command == "scatter":
            return _cmd_scatter(args)
        return _cmd_oracle(args)
    except (ModelError, ValueError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
