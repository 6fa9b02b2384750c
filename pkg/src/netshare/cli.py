"""Command-line front end: ``netshare run | sweep | verify``."""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import io
import itertools
import json
import math
import os
import sys

import numpy as np

from netshare import netcalc, verify
from netshare.errors import InfeasibleScheduleError, NetShareError
from netshare.optimizer import DEFAULT_SEED
from netshare.qstate import bell_mixture, phi_plus, pure_schmidt
from netshare.seqmeas import MODES, SHARP_ZX

SCENARIOS = ("biloc-unilateral", "biloc-bilateral", "star-unilateral", "star-multilateral")
SWEEP_PARAMS = ("theta", "alpha", "p", "margin")
CSV_HEADER = ("scenario", "theta", "alpha_or_p", "round", "gamma", "chsh", "s_or_n_value", "violated")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NOT_VIOLATED, EXIT_VERIFY_FAILED = 0, 1, 2, 3, 4


class ConfigError(Exception):
    pass


def make_state(spec):
    """State from ``{"family": "pure", "alpha": a}`` or ``{"family": "bell-mixture", "p": p}``."""
    if not isinstance(spec, dict):
        raise ConfigError(f"state must be an object, got {spec!r}")
    family = spec.get("family", "pure")
    if family == "pure":
        return pure_schmidt(float(spec.get("alpha", math.pi / 4)))
    if family == "bell-mixture":
        if "p" not in spec:
            raise ConfigError("bell-mixture state needs 'p'")
        return bell_mixture(float(spec["p"]))
    raise ConfigError(f"unknown state family {family!r}")


def state_parameter(spec):
    return float(spec["p"]) if spec.get("family") == "bell-mixture" else float(spec.get("alpha", math.pi / 4))


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return normalize_config(cfg)


def normalize_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"scenario", "state", "states", "theta", "rounds", "margin", "mode", "branches", "seed"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scenario = cfg.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    out = {
        "scenario": scenario,
        "state": cfg.get("state", {"family": "pure", "alpha": math.pi / 4}),
        "theta": float(cfg.get("theta", 0.1)),
        "rounds": cfg.get("rounds", 1),
        "margin": float(cfg.get("margin", 1e-3)),
        "mode": cfg.get("mode", SHARP_ZX),
        "seed": int(cfg.get("seed", DEFAULT_SEED)),
    }
    if out["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    if scenario.startswith("star"):
        out["branches"] = int(cfg.get("branches", 3))
        if out["branches"] < 2:
            raise ConfigError("star scenarios need branches >= 2")
        if "states" in cfg:
            out["states"] = cfg["states"]
    return out


def _rounds_list(cfg):
    rounds = cfg["rounds"]
    n = cfg["branches"]
    if cfg["scenario"] == "star-unilateral":
        if not isinstance(rounds, int):
            raise ConfigError("star-unilateral takes an integer 'rounds' for the first branch")
        return [rounds] + [0] * (n - 1)
    if isinstance(rounds, int):
        return [rounds] * n
    rounds = [int(r) for r in rounds]
    if len(rounds) > n:
        raise ConfigError(f"{len(rounds)} round counts for {n} branches")
    return rounds + [0] * (n - len(rounds))


def execute(cfg):
    """Run one scenario; returns (reports, infeasible_error or None)."""
    scenario, theta, margin, mode = cfg["scenario"], cfg["theta"], cfg["margin"], cfg["mode"]
    state = make_state(cfg["state"])
    try:
        if scenario == "biloc-unilateral":
            if not isinstance(cfg["rounds"], int):
                raise ConfigError("biloc-unilateral takes an integer 'rounds'")
            return netcalc.run_unilateral_biloc(state, theta, cfg["rounds"], margin, mode), None
        if scenario == "biloc-bilateral":
            rounds = cfg["rounds"]
            n, m = (rounds, rounds) if isinstance(rounds, int) else (int(rounds[0]), int(rounds[1]))
            return netcalc.run_bilateral_biloc(state, theta, n, margin, m_max=m, mode=mode), None
        rounds = _rounds_list(cfg)
        if "states" in cfg:
            states = [make_state(s) for s in cfg["states"]]
            if len(states) != cfg["branches"]:
                raise ConfigError(f"{len(states)} states for {cfg['branches']} branches")
        else:
            states = [state if r > 0 else phi_plus() for r in rounds]
        return netcalc.run_star(states, theta, rounds, margin, mode), None
    except InfeasibleScheduleError as exc:
        return exc.reports, exc


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return repr(float(x))


def csv_rows(cfg, reports):
    param = state_parameter(cfg["state"])
    for rep in reports:
        yield (cfg["scenario"], _fmt(cfg["theta"]), _fmt(param), str(rep.round_index), _fmt(rep.gamma_used),
               _fmt(rep.chsh_direct), _fmt(rep.value), _fmt(rep.violated))


def write_csv(fh, rows, header=True):
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    w.writerows(rows)


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _effective_seed(cfg_seed, flag_seed):
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("NETSHARE_SEED")
    return int(env) if env else cfg_seed


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        if args.mode:
            cfg["mode"] = args.mode
        cfg["seed"] = _effective_seed(cfg["seed"], args.seed)
        reports, error = execute(cfg)
    except (ConfigError, NetShareError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _open_out(args.out)
    try:
        if args.format == "csv":
            write_csv(out, csv_rows(cfg, reports))
        else:
            for rep in reports:
                out.write(json.dumps(rep.to_json()) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if error is not None:
        print(f"infeasible schedule at round {error.round_index}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK if all(rep.violated for rep in reports) else EXIT_NOT_VIOLATED


def parse_grid(items):
    """``name=start:stop:num`` (inclusive linspace) or ``name=v1,v2,...``; values sorted ascending."""
    axes = []
    for item in items or ():
        name, sep, spec = item.partition("=")
        name = name.strip()
        if not sep or name not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {name!r}; choose from {SWEEP_PARAMS}")
        spec = spec.strip()
        if not spec:
            values = []
        elif ":" in spec:
            lo, hi, num = spec.split(":")
            values = np.linspace(float(lo), float(hi), int(num)).tolist()
        else:
            values = [float(v) for v in spec.split(",")]
        axes.append((name, sorted(values)))
    return axes


def grid_point_config(base, names, values):
    cfg = dict(base)
    state = dict(base["state"])
    for name, value in zip(names, values):
        if name == "alpha":
            state = {"family": "pure", "alpha": value}
        elif name == "p":
            state = {"family": "bell-mixture", "p": value}
        else:
            cfg[name] = value
    cfg["state"] = state
    return cfg


def _sweep_point(cfg):
    try:
        reports, _ = execute(cfg)
    except NetShareError as exc:
        return [], str(exc)
    return list(csv_rows(cfg, reports)), None


def cmd_sweep(args):
    try:
        base = load_config(args.config)
        if args.mode:
            base["mode"] = args.mode
        base["seed"] = _effective_seed(base["seed"], args.seed)
        axes = parse_grid(args.grid)
    except (ConfigError, NetShareError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    names = [n for n, _ in axes]
    points = list(itertools.product(*[v for _, v in axes])) if axes else []
    configs = [grid_point_config(base, names, p) for p in points]
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(c) for c in configs]
    buf = io.StringIO()
    write_csv(buf, [row for rows, _ in results for row in rows])
    for (_, err), point in zip(results, points):
        if err:
            print(f"warning: grid point {dict(zip(names, point))}: {err}", file=sys.stderr)
    out = _open_out(args.out)
    try:
        out.write(buf.getvalue())
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_verify(args):
    if args.suite not in verify.SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    seed = _effective_seed(DEFAULT_SEED, args.seed)
    result = verify.run_suite(args.suite, seed=seed)
    for prop in result.properties:
        print(f"{args.suite}: {prop.line()}")
    if result.ok:
        return EXIT_OK
    print("first failure: " + json.dumps(result.first_failure))
    return EXIT_VERIFY_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="netshare", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write output to PATH instead of stdout")
        p.add_argument("--seed", type=int, help="PRNG seed (overrides NETSHARE_SEED and the config)")
        p.add_argument("--mode", choices=MODES, help="fixed-party observables")

    run = sub.add_parser("run", help="run one scenario and emit per-round reports")
    run.add_argument("config")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    common(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="Cartesian parameter sweep to CSV")
    sweep.add_argument("config")
    sweep.add_argument("--grid", action="append", metavar="NAME=SPEC",
                       help="theta|alpha|p|margin = start:stop:num or v1,v2,...; repeatable")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--format", choices=("csv",), default="csv")
    common(sweep)
    sweep.set_defaults(func=cmd_sweep)

    ver = sub.add_parser("verify", help="run a seeded oracle-equivalence suite")
    ver.add_argument("suite")
    ver.add_argument("--seed", type=int)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
