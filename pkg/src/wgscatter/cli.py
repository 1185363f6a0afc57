"""Batch front-end: ``wgscatter {tls,pair,trajectories,convergence}``.

Every run reads an optional YAML config, applies ``--set key=value``
overrides, validates the result against the schema below (unknown keys are
errors), and writes CSV tables, ``summary.json`` and ``manifest.json`` into
the output directory.  Times are in units of 1/gamma_ref with gamma_ref = 1.

Exit status: 0 success, 2 config error, 3 photon-number truncation deficit
above ``truncation.deficit_threshold`` (outputs are still written).
"""
import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np
import yaml

from . import __version__
from .analytic_tls import TlsParams, tls_p0_exact
from .model import build_pair_source, build_tls
from .observables import UndefinedValueError, flux_trace, g2_grid, g2_pulsewise
from .observables import mean_photon_number, purity, schmidt
from .propagator import TimeGrid, build_grid
from .scattering import photocounts, scattered_state

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_TRUNCATION = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Field:
    kind: str
    default: object
    minimum: float = None
    positive: bool = False
    choices: tuple = None
    nullable: bool = False


def _f(default, **kw):
    return Field("float", default, **kw)


def _i(default, **kw):
    return Field("int", default, **kw)


_COMMON = {
    "experiment": Field("str", None, nullable=True,
                        choices=("tls", "pair", "trajectories", "convergence")),
    "seed": _i(0, minimum=0),
    "threads": _i(1, minimum=1),
}

_TLS_MODEL = {
    "gamma": _f(1.0, minimum=0),
    "t_pulse": _f(0.2, minimum=0),
    "initial": Field("str", "ground", choices=("ground", "excited")),
}

_PAIR_MODEL = {
    "g0": _f(1.0, minimum=0),
    "gamma1": _f(1.0, minimum=0),
    "gamma2": _f(1.0, minimum=0),
    "t0": _f(None, nullable=True),
    "sigma": _f(0.5, positive=True),
    "n_max": _i(6, minimum=1),
    "k": _f(5.0, positive=True),
}

SCHEMAS = {
    "tls": {
        **_COMMON,
        "model": _TLS_MODEL,
        "sweep": {"areas_over_pi": Field("floats", [0.25 * i for i in range(1, 25)], minimum=0)},
        "grid": {"dt": _f(0.01, positive=True), "horizon": _f(15.0, minimum=0),
                 "substeps": _i(16, minimum=2)},
        "truncation": {"n_max_photons": _i(3, minimum=0),
                       "deficit_threshold": _f(1e-3, minimum=0),
                       "g2_max_sector": _i(3, minimum=2)},
        "outputs": {"directory": Field("str", "wgscatter-out"),
                    "flux": Field("bool", True), "g2": Field("bool", False)},
    },
    "pair": {
        **_COMMON,
        "model": _PAIR_MODEL,
        "sweep": {"sigmas": Field("floats", [0.1, 0.2, 0.4, 0.8, 1.6], positive=True),
                  "g0s": Field("floats", None, nullable=True, minimum=0)},
        "grid": {"dt": _f(0.05, positive=True), "tail": _f(12.0, minimum=0),
                 "substeps": _i(16, minimum=2)},
        "truncation": {"n_max_photons": _i(2, minimum=0),
                       "deficit_threshold": _f(1.0, minimum=0)},
        "outputs": {"directory": Field("str", "wgscatter-out"),
                    "schmidt_values": _i(5, minimum=0)},
    },
    "trajectories": {
        **_COMMON,
        "system": Field("str", "tls", choices=("tls", "pair")),
        "tls": {**_TLS_MODEL, "area_over_pi": _f(1.0, minimum=0)},
        "pair": _PAIR_MODEL,
        "run": {"n_traj": _i(200000, minimum=1), "horizon": _f(15.0, minimum=0),
                "dt": _f(0.01, positive=True), "substeps": _i(16, minimum=2)},
        "reference": {"enabled": Field("bool", True), "n_max_photons": _i(3, minimum=0),
                      "dt": _f(0.01, positive=True)},
        "truncation": {"deficit_threshold": _f(1e-3, minimum=0)},
        "outputs": {"directory": Field("str", "wgscatter-out"),
                    "records": Field("bool", False)},
    },
    "convergence": {
        **_COMMON,
        "model": {**_TLS_MODEL, "area_over_pi": _f(1.0, minimum=0)},
        "grid": {"dt": _f(0.05, positive=True), "horizon": _f(6.0, minimum=0),
                 "rk_substeps": Field("ints", [2, 4, 8, 16], minimum=2),
                 "reference_factor": _i(4, minimum=2)},
        "truncation": {"n_max_photons": _i(2, minimum=1),
                       "deficit_threshold": _f(1e-2, minimum=0)},
        "outputs": {"directory": Field("str", "wgscatter-out")},
    },
}


# ---- config handling ----

def _key_lines(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for knode, vnode in node.value:
            path = f"{prefix}{knode.value}"
            out[path] = knode.start_mark.line + 1
            _key_lines(vnode, path + ".", out)
    return out


def load_config_text(text, source="<config>"):
    """Parse YAML text; returns (mapping, {dotted key: line number})."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    return data, _key_lines(node)


def _check_number(value, field, where, integer):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}: expected a finite number, got {value!r}")
    if field.minimum is not None and value < field.minimum:
        raise ConfigError(f"{where}: must be >= {field.minimum}, got {value!r}")
    if field.positive and not value > 0:
        raise ConfigError(f"{where}: must be > 0, got {value!r}")
    return value


def _check_leaf(value, field, where):
    if value is None:
        if field.nullable:
            return None
        raise ConfigError(f"{where}: a value is required")
    kind = field.kind
    if kind in ("float", "int"):
        return _check_number(value, field, where, kind == "int")
    if kind in ("floats", "ints"):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where}: expected a non-empty list, got {value!r}")
        return [_check_number(v, field, f"{where}[{i}]", kind == "ints")
                for i, v in enumerate(value)]
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    if field.choices and value not in field.choices:
        raise ConfigError(f"{where}: must be one of {', '.join(field.choices)}; got {value!r}")
    return value


def _defaults(schema):
    return {k: _defaults(v) if isinstance(v, dict) else v.default for k, v in schema.items()}


def _merge(schema, resolved, data, prefix, locate):
    if not isinstance(data, dict):
        raise ConfigError(f"{locate(prefix.rstrip('.'))}: expected a mapping")
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"{locate(path)}: unknown key '{path}'")
        sub = schema[key]
        if isinstance(sub, dict):
            _merge(sub, resolved[key], value, path + ".", locate)
        else:
            resolved[key] = _check_leaf(value, sub, f"{locate(path)}: '{path}'")


def _parse_override(item):
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set {item!r}: expected key=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"--set {item!r}: value is not valid YAML") from None
    nested = value
    for part in reversed(key.strip().split(".")):
        nested = {part: nested}
    return nested


def resolve_config(experiment, data=None, lines=None, overrides=(), source="<config>"):
    """Validated config dict: schema defaults, then file values, then overrides."""
    schema = SCHEMAS[experiment]
    resolved = _defaults(schema)
    lines = lines or {}

    def locate(path):
        line = lines.get(path)
        return f"{source}:{line}" if line else source

    _merge(schema, resolved, data or {}, "", locate)
    for item in overrides:
        _merge(schema, resolved, _parse_override(item), "", lambda p: f"--set {p}")
    if resolved["experiment"] not in (None, experiment):
        raise ConfigError(f"{locate('experiment')}: config is for '{resolved['experiment']}', "
                          f"not '{experiment}'")
    resolved["experiment"] = experiment
    return resolved


# ---- output helpers ----

def _num(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _safe(fn, *args):
    try:
        return fn(*args)
    except UndefinedValueError:
        return None


def _grid_info(grid):
    return {"dt": grid.dt, "dt_requested": grid.dt_requested, "snap_error": grid.snap_error,
            "n_bins": grid.n_bins, "t_end": grid.t_end}


# ---- experiments ----

def run_tls(cfg, out):
    m, g, tr = cfg["model"], cfg["grid"], cfg["truncation"]
    N = tr["n_max_photons"]
    if g["horizon"] < m["t_pulse"]:
        raise ConfigError(f"'grid.horizon' ({g['horizon']}) must be >= 'model.t_pulse'")
    grid = TimeGrid.for_pulse(m["t_pulse"], g["dt"], g["horizon"])
    rows, points, fluxes = [], [], []
    for i, a in enumerate(cfg["sweep"]["areas_over_pi"]):
        area = a * math.pi
        model = _tls_model(m, a)
        omega = area / (2 * m["t_pulse"]) if m["t_pulse"] > 0 else 0.0
        state = scattered_state(model, build_grid(model, grid, g["substeps"]), N,
                                threads=cfg["threads"])
        P = photocounts(state)
        deficit = max(0.0, 1.0 - P.sum())
        p0_exact = None
        if m["initial"] == "ground" and m["t_pulse"] > 0:
            p0_exact = tls_p0_exact(TlsParams(m["gamma"], omega, m["t_pulse"]))
        g2_0 = _safe(g2_pulsewise, P)
        rows.append([a, area, *P, deficit, mean_photon_number(P), g2_0, p0_exact])
        points.append({"area_over_pi": a, "P": P, "deficit": deficit, "g2_0": g2_0,
                       "p0_closed_form": p0_exact})
        if cfg["outputs"]["flux"]:
            fluxes.append(flux_trace(state))
        if cfg["outputs"]["g2"] and N >= 2:
            G = g2_grid(state, max_sector=min(tr["g2_max_sector"], N))
            t = grid.midpoints()
            _write_csv(os.path.join(out, f"g2_{i:03d}.csv"),
                       ["t1[1/gamma]\\t2[1/gamma]", *[_num(x) for x in t]],
                       ([t[r], *G[r]] for r in range(t.size)))
    header = ["area_over_pi", "area[rad]", *[f"P{j}" for j in range(N + 1)], "deficit",
              "mean_photons", "g2_0", "P0_closed_form"]
    _write_csv(os.path.join(out, "photocounts.csv"), header, rows)
    if fluxes:
        t = grid.midpoints()
        header = ["t[1/gamma]", *[f"flux_area{a}pi[gamma]" for a in cfg["sweep"]["areas_over_pi"]]]
        _write_csv(os.path.join(out, "flux.csv"), header,
                   ([t[r], *[f[r] for f in fluxes]] for r in range(t.size)))
    return {"grid": _grid_info(grid), "points": points,
            "max_deficit": max(p["deficit"] for p in points)}


def _tls_model(t, area_over_pi):
    omega = area_over_pi * math.pi / (2 * t["t_pulse"]) if t["t_pulse"] > 0 else 0.0
    return build_tls(t["gamma"], omega, t["t_pulse"], t["initial"])


def _pair_model(p, sigma=None, g0=None):
    sigma = p["sigma"] if sigma is None else sigma
    g0 = p["g0"] if g0 is None else g0
    t0 = p["k"] * sigma if p["t0"] is None else p["t0"]
    return build_pair_source(g0, t0, sigma, p["gamma1"], p["gamma2"], p["n_max"], p["k"])


def run_pair(cfg, out):
    p, g, tr = cfg["model"], cfg["grid"], cfg["truncation"]
    N = tr["n_max_photons"]
    g0s = cfg["sweep"]["g0s"] or [p["g0"]]
    n_sv = cfg["outputs"]["schmidt_values"]
    rows, points = [], []
    for g0 in g0s:
        for sigma in cfg["sweep"]["sigmas"]:
            model = _pair_model(p, sigma, g0)
            t_pulse = model.t_pulse
            grid = TimeGrid.for_pulse(t_pulse, g["dt"], t_pulse + g["tail"])
            state = scattered_state(model, build_grid(model, grid, g["substeps"]), N,
                                    threads=cfg["threads"])
            P = photocounts(state)
            deficit = max(0.0, 1.0 - P.sum())
            pur = _safe(purity, P) if N >= 2 else None
            spec = _safe(schmidt, state) if N >= 2 else None
            K = spec.schmidt_number if spec is not None else None
            lam = list(spec.lambdas[:n_sv]) if spec is not None else []
            lam += [None] * (n_sv - len(lam))
            rows.append([g0, sigma, t_pulse, grid.dt, *P, deficit, pur, K, *lam])
            points.append({"g0": g0, "sigma": sigma, "P": P, "deficit": deficit,
                           "purity": pur, "schmidt_number": K, "grid": _grid_info(grid)})
    header = ["g0[gamma]", "sigma[1/gamma]", "t_pulse[1/gamma]", "dt[1/gamma]",
              *[f"P{j}" for j in range(N + 1)], "deficit", "purity", "schmidt_number",
              *[f"lambda{j}" for j in range(n_sv)]]
    _write_csv(os.path.join(out, "pair_sweep.csv"), header, rows)
    return {"points": points, "max_deficit": max(q["deficit"] for q in points)}


def run_trajectories(cfg, out):
    from scipy import stats

    from .trajectories import sample_records

    r = cfg["run"]
    if cfg["system"] == "tls":
        model = _tls_model(cfg["tls"], cfg["tls"]["area_over_pi"])
    else:
        model = _pair_model(cfg["pair"])
    if r["horizon"] < model.t_pulse:
        raise ConfigError(f"'run.horizon' ({r['horizon']}) must be >= the pulse length "
                          f"({model.t_pulse})")
    n = r["n_traj"]
    traj, times, chans = sample_records(model, r["horizon"], n, cfg["seed"], r["dt"],
                                        r["substeps"])
    M = model.n_channels
    per = np.zeros((n, M), dtype=np.int64)
    np.add.at(per, (traj, chans), 1)
    totals = per.sum(axis=1)
    hist = np.bincount(totals, minlength=1)
    Phat = hist / n
    err = np.sqrt(Phat * (1 - Phat) / n)
    summary = {"n_traj": n, "seed": cfg["seed"], "P_hat": Phat, "stderr": err,
               "mean_clicks": float(totals.mean())}
    ref = None
    if cfg["reference"]["enabled"]:
        Nr = cfg["reference"]["n_max_photons"]
        grid = TimeGrid.for_pulse(model.t_pulse, cfg["reference"]["dt"], r["horizon"])
        state = scattered_state(model, build_grid(model, grid, r["substeps"]), Nr,
                                threads=cfg["threads"])
        ref = photocounts(state)
        deficit = max(0.0, 1.0 - ref.sum())
        observed = np.zeros(Nr + 1)
        top = min(Nr, hist.size)
        observed[:top] = hist[:top]
        observed[Nr] = hist[Nr:].sum()
        expected = np.append(ref[:Nr], max(0.0, 1.0 - ref[:Nr].sum())) * n
        keep = expected > 0
        chi = stats.chisquare(observed[keep], expected[keep] * observed[keep].sum() / expected[keep].sum())
        summary.update({"P_quadrature": ref, "deficit": deficit,
                        "chi_square": float(chi.statistic), "chi_square_pvalue": float(chi.pvalue),
                        "grid": _grid_info(grid)})
        summary["max_deficit"] = deficit
    rows = []
    for m_ in range(max(hist.size, 0 if ref is None else ref.size)):
        c = int(hist[m_]) if m_ < hist.size else 0
        q = float(ref[m_]) if ref is not None and m_ < ref.size else None
        rows.append([m_, c, c / n, math.sqrt((c / n) * (1 - c / n) / n), q])
    _write_csv(os.path.join(out, "counts.csv"),
               ["m", "count", "P_hat", "stderr", "P_quadrature"], rows)
    patterns, pcounts = np.unique(per, axis=0, return_counts=True)
    _write_csv(os.path.join(out, "channel_counts.csv"),
               [*[f"n_channel{c}" for c in range(M)], "count"],
               ([*row, cnt] for row, cnt in zip(patterns.tolist(), pcounts.tolist())))
    if cfg["outputs"]["records"]:
        _write_csv(os.path.join(out, "records.csv"), ["trajectory", "t[1/gamma]", "channel"],
                   zip(traj.tolist(), times.tolist(), chans.tolist()))
    return summary


def run_convergence(cfg, out):
    m, g, tr = cfg["model"], cfg["grid"], cfg["truncation"]
    N = tr["n_max_photons"]
    if g["horizon"] < m["t_pulse"]:
        raise ConfigError(f"'grid.horizon' ({g['horizon']}) must be >= 'model.t_pulse'")
    for i, s in enumerate(g["rk_substeps"]):
        if s % 2:
            raise ConfigError(f"'grid.rk_substeps[{i}]': substep counts must be even, got {s}")
    model = _tls_model(m, m["area_over_pi"])
    grid = TimeGrid.for_pulse(m["t_pulse"], g["dt"], g["horizon"])

    def run(substeps):
        gridp = build_grid(model, grid, substeps, method="rk4")
        return scattered_state(model, gridp, N, threads=cfg["threads"])

    ref = run(max(g["rk_substeps"]) * g["reference_factor"])
    ref_dense = [ref.dense(key) for key in sorted(ref.sectors)]
    rows, points, prev = [], [], None
    for s in g["rk_substeps"]:
        st = run(s)
        err = max(float(np.max(np.abs(st.dense(key) - d))) if d.size else 0.0
                  for key, d in zip(sorted(ref.sectors), ref_dense))
        P = photocounts(st)
        ratio = prev / err if prev is not None and err > 0 else None
        rows.append([s, grid.dt / s, *P, err, ratio])
        points.append({"substeps": s, "step": grid.dt / s, "max_amplitude_error": err,
                       "error_ratio": ratio, "P": P})
        prev = err
    P_ref = photocounts(ref)
    _write_csv(os.path.join(out, "convergence.csv"),
               ["substeps", "rk_step[1/gamma]", *[f"P{j}" for j in range(N + 1)],
                "max_amplitude_error", "error_ratio"], rows)
    deficit = max(0.0, 1.0 - P_ref.sum())
    return {"grid": _grid_info(grid), "reference_substeps": max(g["rk_substeps"]) * g["reference_factor"],
            "P_reference": P_ref, "points": points, "deficit": deficit, "max_deficit": deficit}


def example_models(cfg):
    """(label, model, TimeGrid, substeps, n_max_photons) for every model a config runs."""
    exp = cfg["experiment"]
    out = []
    if exp in ("tls", "convergence"):
        m, g = cfg["model"], cfg["grid"]
        grid = TimeGrid.for_pulse(m["t_pulse"], g["dt"], g["horizon"])
        N = cfg["truncation"]["n_max_photons"]
        if exp == "tls":
            for a in cfg["sweep"]["areas_over_pi"]:
                out.append((f"tls area={a}pi", _tls_model(m, a), grid, g["substeps"], N))
        else:
            sub = max(g["rk_substeps"]) * g["reference_factor"]
            out.append((f"tls area={m['area_over_pi']}pi", _tls_model(m, m["area_over_pi"]),
                        grid, sub, N))
    elif exp == "pair":
        p, g = cfg["model"], cfg["grid"]
        for g0 in cfg["sweep"]["g0s"] or [p["g0"]]:
            for sigma in cfg["sweep"]["sigmas"]:
                model = _pair_model(p, sigma, g0)
                grid = TimeGrid.for_pulse(model.t_pulse, g["dt"], model.t_pulse + g["tail"])
                out.append((f"pair g0={g0} sigma={sigma}", model, grid, g["substeps"],
                            cfg["truncation"]["n_max_photons"]))
    else:
        r = cfg["run"]
        if cfg["system"] == "tls":
            model = _tls_model(cfg["tls"], cfg["tls"]["area_over_pi"])
        else:
            model = _pair_model(cfg["pair"])
        grid = TimeGrid.for_pulse(model.t_pulse, cfg["reference"]["dt"], r["horizon"])
        out.append((f"trajectories {cfg['system']}", model, grid, r["substeps"],
                    cfg["reference"]["n_max_photons"]))
    return out


def load_config(path):
    """Read and resolve a YAML config file; the experiment comes from the file."""
    with open(path) as fh:
        data, lines = load_config_text(fh.read(), path)
    exp = (data or {}).get("experiment")
    if exp not in SCHEMAS:
        raise ConfigError(f"{path}: 'experiment' must be one of {sorted(SCHEMAS)}")
    return resolve_config(exp, data, lines, (), path)


RUNNERS = {"tls": run_tls, "pair": run_pair, "trajectories": run_trajectories,
           "convergence": run_convergence}


def run_experiment(cfg, out=None):
    """Run a resolved config; returns (exit status, summary dict)."""
    out = out or cfg["outputs"]["directory"]
    os.makedirs(out, exist_ok=True)
    summary = RUNNERS[cfg["experiment"]](cfg, out)
    threshold = cfg["truncation"]["deficit_threshold"]
    deficit = summary.get("max_deficit")
    summary["truncation_ok"] = deficit is None or deficit <= threshold
    summary["deficit_threshold"] = threshold
    _write_json(os.path.join(out, "summary.json"), summary)
    manifest = {"version": __version__, "config": cfg}
    if "grid" in summary:
        manifest["resolved_grid"] = summary["grid"]
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return (EXIT_OK if summary["truncation_ok"] else EXIT_TRUNCATION), summary


def build_parser():
    parser = argparse.ArgumentParser(prog="wgscatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in SCHEMAS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (dotted key, YAML value)")
        p.add_argument("--out", help="output directory (overrides outputs.directory)")
        p.add_argument("--threads", type=int, help="worker threads for the amplitude sweep")
        p.add_argument("--seed", type=int, help="master random seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"outputs.directory={json.dumps(args.out)}")
    try:
        data, lines, source = None, None, "<config>"
        if args.config:
            source = args.config
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"{args.config}: cannot read config: {exc.strerror}") from None
            data, lines = load_config_text(text, source)
        cfg = resolve_config(args.experiment, data, lines, overrides, source)
        status, summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"wgscatter: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"wgscatter: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if status == EXIT_TRUNCATION:
        print(f"wgscatter: truncation deficit {summary['max_deficit']:.3g} exceeds "
              f"threshold {summary['deficit_threshold']:.3g}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
