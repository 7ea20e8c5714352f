"""Command-line experiment runner.

Subcommands: compile, simulate, scan, corr, contour, predict.  Every option can
also come from a key = value config file (--config); flags override the file.
Outputs carry a comment header with the resolved config, its hash, the seeds
and the package version, and contain no timestamps, so reruns are byte identical.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import sys
import warnings

import numpy as np

from . import __version__
from .analysis import (OutOfValidityWarning, contour_asymptotes, contour_ka_delta, correlation_matrix,
                       delta_crit, linear_response_fidelity, max_qubits, predicted_fidelity)
from .chain import ChainParams
from .compiler import count_report, pulse_count
from .errors import FRAMES, PLACEMENTS, InsertionPlan
from .simulate import GueRun, compiled_schedule, intrinsic_fidelity, qpulse_generators, run_gue

log = logging.getLogger("isingqc")

MAX_N = 12            # dense 2^n propagators beyond this need --allow-large
MAX_N_SIMULATE = 8    # desk-scale default for simulation commands

DEFAULTS = {
    "algo": "qft", "n": None, "a": 1000.0, "k": 1024, "delta": 0.0,
    "placement": "after_each_gate", "frame": "interaction_static", "engine": "ideal",
    "realizations": 20, "states": 20, "seed": 0, "out": None, "schedule_out": None,
    "ka": None, "levels": "0.9", "regime": "intrinsic", "gue": "gue_int", "allow_large": False,
}


class UsageError(Exception):
    pass


# -- config handling ----------------------------------------------------------------

def read_config(path: str) -> dict:
    """Parse a key = value file ('#' comments, no sections)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        cp.read_string("[run]\n" + fh.read())
    return {k.replace("-", "_"): v for k, v in cp["run"].items()}


def parse_int_list(text) -> list:
    """'3..7' or '3,5,7' or '4' -> list of ints."""
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def parse_float_list(text) -> list:
    """'0.01,0.02' or 'geom:1e3:1e6:7' (log-spaced) -> list of floats."""
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    if text.startswith("geom:"):
        _, lo, hi, num = text.split(":")
        return [float(v) for v in np.geomspace(float(lo), float(hi), int(num))]
    if text.startswith("lin:"):
        _, lo, hi, num = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(num))]
    return [float(v) for v in text.split(",") if v.strip()]


def resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for k, v in vars(args).items():
        if k in ("config", "func", "command") or v is None:
            continue
        cfg[k] = v
    cfg["command"] = args.command
    for key in ("allow_large",):
        if isinstance(cfg[key], str):
            cfg[key] = cfg[key].lower() in ("1", "true", "yes", "on")
    return cfg


OUTPUT_KEYS = ("out", "schedule_out")


def recorded(cfg: dict) -> dict:
    """Config as persisted in outputs; where the output goes is not part of the run."""
    return {k: v for k, v in cfg.items() if k not in OUTPUT_KEYS}


def config_hash(cfg: dict) -> str:
    blob = json.dumps(recorded(cfg), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def header_lines(cfg: dict, seeds=()) -> list:
    return [
        f"isingqc {__version__}",
        f"config_hash {config_hash(cfg)}",
        f"config {json.dumps(recorded(cfg), sort_keys=True, default=str)}",
        f"seeds {json.dumps(list(seeds))}",
    ]


def write_csv(cfg, rows, columns, seeds=(), dest=None):
    buf = io.StringIO()
    for line in header_lines(cfg, seeds):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    _emit(buf.getvalue(), dest)


def write_json(cfg, payload, seeds=(), dest=None):
    doc = {"version": __version__, "config_hash": config_hash(cfg), "config": recorded(cfg),
           "seeds": list(seeds), **payload}
    _emit(json.dumps(doc, sort_keys=True, default=_json_default, indent=1) + "\n", dest)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _emit(text, dest):
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(text)


# -- validation -------------------------------------------------------------------

def check_n(n, cfg, limit=MAX_N):
    if n is None:
        raise UsageError("--n is required")
    if n < 2:
        raise UsageError(f"n must be >= 2, got {n}")
    if n > limit and not cfg["allow_large"]:
        raise UsageError(f"n={n} exceeds the guardrail n <= {limit}; pass --allow-large to override")


def single_n(cfg, limit):
    """The one qubit count of compile/simulate/corr, validated."""
    if cfg["n"] is None:
        raise UsageError("--n is required")
    try:
        n = int(cfg["n"])
    except ValueError:
        raise UsageError(f"--n must be a single integer here, got {cfg['n']!r}") from None
    check_n(n, cfg, limit)
    return n


def params_for(cfg, n) -> ChainParams:
    try:
        p = ChainParams(n=n, a=float(cfg["a"]), k=int(cfg["k"]))
    except ValueError as e:
        raise UsageError(str(e)) from None
    for w in p.warnings:
        log.warning(w)
    return p


def plan_for(cfg) -> InsertionPlan:
    if cfg["placement"] not in PLACEMENTS or cfg["frame"] not in FRAMES:
        raise UsageError(f"placement must be one of {PLACEMENTS}, frame one of {FRAMES}")
    return InsertionPlan(cfg["placement"], cfg["frame"])


def _gue_regime(cfg) -> str:
    if cfg["placement"] == "after_each_pulse":
        return "gue_pulse"
    return "gue_lab" if cfg["frame"] == "lab_static" else "gue_int"


def _prediction(cfg, algo, n, ka, delta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        try:
            if delta == 0:
                return float(predicted_fidelity("intrinsic", n, ka, 0.0, algo))
            regime = _gue_regime(cfg)
            if cfg["engine"] == "ideal":
                return float(predicted_fidelity(regime, n, ka, delta, algo))
            return float(predicted_fidelity("both", n, ka, delta, algo, gue=regime))
        except ValueError:
            return float("nan")


# -- commands ------------------------------------------------------------------------

def cmd_compile(cfg):
    n = single_n(cfg, MAX_N)
    algo = cfg["algo"]
    rep = count_report(algo, n)
    print(f"algo: {algo}, n: {n}")
    print(f"gates: {rep['gates']}, q-pulses: {rep['qpulses']}")
    print(f"pulses: {rep['pulses']}")
    print(f"expected pulses: {pulse_count(algo, n)}")
    if cfg.get("schedule_out"):
        sched = compiled_schedule(algo, params_for(cfg, n))
        _emit(sched.to_json() + "\n", cfg["schedule_out"])
    if not rep["match"]:
        print("error: pulse count does not match the closed form", file=sys.stderr)
        return 1
    return 0


def _simulate_point(cfg, algo, n, delta, seed):
    p = params_for(cfg, n)
    ka = p.k * p.a
    if delta == 0:
        F = intrinsic_fidelity(algo, p)
        return {"F_mean": F, "F_stderr": 0.0, "realizations": 0, "regime": "intrinsic", "ka": ka}, []
    engine = cfg["engine"]
    gates = "pulses" if cfg["placement"] == "after_each_pulse" else engine
    ref = "ideal" if engine in ("compiled", "pulses") else "unperturbed"
    run = GueRun(algo, p, float(delta), plan_for(cfg), gates=gates, reference=ref)
    st = run_gue(run, int(cfg["realizations"]), int(cfg["states"]), seed)
    regime = _gue_regime(cfg) if ref == "unperturbed" else "both"
    return {"F_mean": st.mean, "F_stderr": st.stderr, "realizations": st.realizations,
            "regime": regime, "ka": ka}, [list(s) for s in st.seeds]


def cmd_simulate(cfg):
    n = single_n(cfg, MAX_N_SIMULATE)
    algo, delta, seed = cfg["algo"], float(cfg["delta"]), int(cfg["seed"])
    res, seeds = _simulate_point(cfg, algo, n, delta, seed)
    res.update({"algo": algo, "n": n, "delta": delta,
                "F_pred": _prediction(cfg, algo, n, res["ka"], delta)})
    write_json(cfg, {"result": res}, seeds, cfg.get("out"))
    return 0


SCAN_COLUMNS = ["algo", "n", "a", "k", "ka", "delta", "regime", "F_mean", "F_stderr", "one_minus_F",
                "realizations", "F_pred"]


def cmd_scan(cfg):
    ns = parse_int_list(cfg["n"]) if cfg["n"] is not None else []
    if not ns:
        raise UsageError("--n is required (e.g. 3..7)")
    for n in ns:
        check_n(n, cfg, MAX_N_SIMULATE)
    algos = [a.strip() for a in str(cfg["algo"]).split(",")]
    ks = parse_int_list(cfg["k"])
    As = parse_float_list(cfg["a"])
    deltas = parse_float_list(cfg["delta"])
    seed = int(cfg["seed"])
    rows, all_seeds = [], []
    for algo in algos:
        for n in ns:
            for k in ks:
                for a in As:
                    for d in deltas:
                        sub = dict(cfg, k=k, a=a)
                        res, seeds = _simulate_point(sub, algo, n, d, seed)
                        all_seeds.extend(s for s in seeds if s not in all_seeds)
                        log.info("%s n=%d k=%d a=%g delta=%g F=%.6g", algo, n, k, a, d, res["F_mean"])
                        rows.append({"algo": algo, "n": n, "a": a, "k": k, "ka": res["ka"], "delta": d,
                                     "regime": res["regime"], "F_mean": res["F_mean"],
                                     "F_stderr": res["F_stderr"], "one_minus_F": 1 - res["F_mean"],
                                     "realizations": res["realizations"],
                                     "F_pred": _prediction(sub, algo, n, res["ka"], d)})
    write_csv(cfg, rows, SCAN_COLUMNS, all_seeds, cfg.get("out"))
    return 0


def cmd_corr(cfg):
    n = single_n(cfg, MAX_N_SIMULATE)
    p = params_for(cfg, n)
    sched = compiled_schedule(cfg["algo"], p)
    if cfg.get("empty"):
        sched = type(sched)(p)
    gens, prefixes = qpulse_generators(sched)
    cm = correlation_matrix(gens, prefixes, "trace", unit="qpulse")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        F_lin, run = linear_response_fidelity(cm, 1.0) if len(gens) else (1.0, np.zeros(0))
    spans = [{"gate": g.gate.label(), "qstart": g.qstart, "qstop": g.qstop} for g in sched.gates]
    payload = {"unit": "qpulse", "size": len(gens), "gate_spans": spans, "total": cm.total,
               "F_linear_response": F_lin, "running_sum": run, "C": cm.C}
    write_json(cfg, payload, [], cfg.get("out"))
    return 0


CONTOUR_COLUMNS = ["level", "n", "ka", "delta", "best", "delta_crit"]


def cmd_contour(cfg):
    levels = parse_float_list(cfg["levels"])
    ns = parse_int_list(cfg["n"]) if cfg["n"] is not None else [5]
    kas = parse_float_list(cfg["ka"]) if cfg["ka"] is not None else parse_float_list("geom:1e3:1e6:31")
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        for n in ns:
            for lv in levels:
                for r in contour_ka_delta(lv, n, kas, cfg["gue"]):
                    r["delta_crit"] = delta_crit(n, r["ka"], cfg["gue"])
                    rows.append(r)
        for lv in levels:
            for n in ns:
                for algo in ("qft", "iqft"):
                    asy = contour_asymptotes(lv, n, algo, cfg["gue"])
                    log.info("level %g n=%d %s: ka_min=%.4g delta_max=%.4g", lv, n, algo,
                             asy["ka_min"], asy["delta_max"])
    write_csv(cfg, rows, CONTOUR_COLUMNS, [], cfg.get("out"))
    if cfg.get("report_max_n"):
        for lv in levels:
            for ka in kas:
                nmax, algo = max_qubits(lv, ka, 0.0, gue=cfg["gue"])
                print(f"# max n with F >= {lv} at ka={ka:g}, delta=0: {nmax} ({algo})", file=sys.stderr)
    return 0


def cmd_predict(cfg):
    ns = parse_int_list(cfg["n"]) if cfg["n"] is not None else []
    if not ns:
        raise UsageError("--n is required")
    kas = parse_float_list(cfg["ka"]) if cfg["ka"] is not None else [float(cfg["k"]) * float(cfg["a"])]
    deltas = parse_float_list(cfg["delta"])
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfValidityWarning)
        for n in ns:
            for ka in kas:
                for d in deltas:
                    for algo in [a.strip() for a in str(cfg["algo"]).split(",")]:
                        try:
                            F = float(predicted_fidelity(cfg["regime"], n, ka, d, algo, gue=cfg["gue"]))
                        except ValueError as e:
                            raise UsageError(str(e)) from None
                        rows.append({"algo": algo, "regime": cfg["regime"], "n": n, "ka": ka, "delta": d,
                                     "F": F, "delta_crit": delta_crit(n, ka, cfg["gue"])})
    write_csv(cfg, rows, ["algo", "regime", "n", "ka", "delta", "F", "delta_crit"], [], cfg.get("out"))
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isingqc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"isingqc {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, n_help="number of qubits"):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--algo", help="qft or iqft (comma list for scan/predict)")
        p.add_argument("--n", help=n_help)
        p.add_argument("--a", help="Larmor gradient a/J")
        p.add_argument("--k", help="2 pi k condition integer")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--allow-large", action="store_const", const=True, default=None,
                       help="lift the qubit-count guardrail")

    def noise(p):
        p.add_argument("--delta", help="GUE strength (0 = intrinsic errors only)")
        p.add_argument("--placement", choices=PLACEMENTS)
        p.add_argument("--frame", choices=FRAMES)
        p.add_argument("--engine", choices=("ideal", "compiled"),
                       help="ideal gates isolate GUE effects; compiled adds intrinsic errors")
        p.add_argument("--realizations", type=int)
        p.add_argument("--states", type=int)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("compile", help="compile a protocol and report counts")
    common(p)
    p.add_argument("--schedule-out", help="write the pulse schedule JSON here")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="fidelity at one parameter point")
    common(p)
    noise(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="fidelity sweep to CSV")
    common(p, "qubit counts, e.g. 3..7 or 3,5")
    noise(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("corr", help="Q-pulse correlation matrix and running sum (JSON)")
    common(p)
    p.add_argument("--empty", action="store_const", const=True, default=None,
                   help="use an empty schedule (diagnostic)")
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("contour", help="constant-fidelity contours of the predictions")
    common(p, "qubit counts")
    p.add_argument("--ka", help="ka values, e.g. geom:1e3:1e6:31")
    p.add_argument("--levels", help="fidelity levels, comma separated")
    p.add_argument("--gue", choices=("gue_int", "gue_lab"))
    p.add_argument("--report-max-n", action="store_const", const=True, default=None,
                   help="print the largest n reaching each level at delta = 0")
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("predict", help="closed-form fidelity predictions")
    common(p, "qubit counts")
    p.add_argument("--ka")
    p.add_argument("--delta")
    p.add_argument("--regime", choices=("intrinsic", "gue_lab", "gue_int", "gue_pulse", "both"))
    p.add_argument("--gue", choices=("gue_int", "gue_lab", "gue_pulse"))
    p.set_defaults(func=cmd_predict)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    del args.verbose
    try:
        cfg = resolve(args)
        return args.func(cfg)
    except UsageError as e:
        ap.error(str(e))
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
