"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 internal error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import fixtures, trace
from .instances import random_instance
from .metrics import efficiency
from .milp import SolveConfig, build_milp, solve_bb, solve_count_dp, solve_exhaustive
from .model import ObjectiveMetric, load_trainers, state_to_dict
from .policies import Policy, PolicyConfig
from .simulator import SimulationConfig, SimulationError, run

LOG_ENV = "FRAGSCHED_LOG_LEVEL"
log = logging.getLogger("fragsched")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_VERIFY = 0, 1, 2, 3


class InputError(Exception):
    pass


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return parse


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trace", required=True, help="JSONL node event trace")
    p.add_argument("--trainers", required=True, help="JSON array of trainer specs")
    p.add_argument("--policy", choices=[x.value for x in Policy], default="milp")
    p.add_argument("--solver", choices=["bb", "count-dp"], default="count-dp")
    p.add_argument("--tfwd", "--tfwd-s", dest="tfwd", type=_positive(float), default=120.0,
                   help="forward-looking time in seconds")
    p.add_argument("--pjmax", type=_positive(int), default=10,
                   help="maximum parallel trainers")
    p.add_argument("--objective", choices=[m.value for m in ObjectiveMetric],
                   default="throughput")
    p.add_argument("--timeout-ms", type=_non_negative_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", "--horizon-s", dest="horizon", type=_positive(float),
                   default=None, help="stop the replay at this time (seconds)")
    p.add_argument("--window-h", type=_positive(float), default=6.0,
                   help="window length for windowed efficiency (hours)")
    p.add_argument("--charge-solver-time", action="store_true")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay a trace against a trainer queue")
    _add_run_args(p)

    p = sub.add_parser("sweep", help="one replay per parameter value")
    _add_run_args(p)
    p.add_argument("--sweep", required=True,
                   help="e.g. tfwd=10,60,120,300 or pjmax=5..35:5")

    p = sub.add_parser("trace-stats", help="characterize a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--min-length-s", type=float, default=0.0)
    p.add_argument("--out", default="out")

    p = sub.add_parser("verify", help="cross-check the three exact solvers")
    p.add_argument("--instances", type=_non_negative_int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-jobs", type=_positive(int), default=4)
    p.add_argument("--max-nodes", type=_positive(int), default=12)
    p.add_argument("--rtol", type=float, default=1e-9)

    p = sub.add_parser("synth", help="generate a synthetic node trace")
    p.add_argument("--n-pool", type=_non_negative_int, default=64)
    p.add_argument("--join-rate", type=float, default=25.0, help="join events per hour")
    p.add_argument("--residency-s", type=_positive(float), default=1200.0)
    p.add_argument("--duration-s", type=_positive(float), default=4 * 3600.0)
    p.add_argument("--mean-batch", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSONL path")

    p = sub.add_parser("fixtures", help="write the bundled fixture files")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load_inputs(args):
    for path in (args.trace, args.trainers):
        if not os.path.isfile(path):
            raise InputError(f"no such file: {path}")
    try:
        log_ = trace.load(args.trace)
    except trace.TraceError as exc:
        raise InputError(f"{args.trace}: {exc}") from None
    try:
        trainers = load_trainers(args.trainers)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.trainers}: {exc}") from None
    return log_, trainers


def _sim_config(args, **overrides) -> SimulationConfig:
    values = {
        "tfwd": args.tfwd, "pjmax": args.pjmax, "timeout-ms": args.timeout_ms,
    }
    values.update(overrides)
    solve = SolveConfig(t_fwd_s=float(values["tfwd"]), metric=ObjectiveMetric(args.objective),
                        timeout_ms=values["timeout-ms"])
    pcfg = PolicyConfig(pj_max=int(values["pjmax"]), policy=Policy(args.policy),
                        solve=solve, solver=args.solver)
    return SimulationConfig(pcfg, charge_solver_time=args.charge_solver_time,
                            horizon_s=args.horizon)


def _simulate(log_, trainers, cfg, args, out_dir):
    report = run(log_, trainers, cfg)
    report.config["seed"] = args.seed
    paths = report.write(out_dir)
    eff = efficiency(report, log_, trainers, window_s=args.window_h * 3600.0)
    with open(os.path.join(out_dir, "efficiency.json"), "w", encoding="utf-8") as fh:
        fh.write(eff.to_json() + "\n")
    eff.write_windows_csv(os.path.join(out_dir, "windows.csv"))
    return report, eff, paths


def cmd_run(args) -> int:
    log_, trainers = _load_inputs(args)
    report, eff, _ = _simulate(log_, trainers, _sim_config(args), args, args.out)
    u = "n/a" if eff.u_pct is None else f"{eff.u_pct:.2f}%"
    print(f"A_e={report.a_e:.6g} samples  A_s={eff.a_s:.6g}  U={u}  "
          f"decisions={len(report.decisions)}  out={args.out}")
    return EXIT_OK


SWEEP_KEYS = ("tfwd", "pjmax", "timeout-ms")


def parse_sweep(spec: str) -> tuple[str, list]:
    """``key=v1,v2`` or ``key=a..b[:step]``; duplicates dropped with a warning."""
    if "=" not in spec:
        raise InputError(f"sweep must look like key=values: {spec!r}")
    key, _, body = spec.partition("=")
    key = key.strip().replace("_", "-")
    if key == "tfwd-s":
        key = "tfwd"
    if key not in SWEEP_KEYS:
        raise InputError(f"cannot sweep {key!r}; choose from {SWEEP_KEYS}")
    conv = float if key == "tfwd" else int
    values: list = []
    try:
        for part in body.split(","):
            part = part.strip()
            if ".." in part:
                rng, _, step = part.partition(":")
                lo, _, hi = rng.partition("..")
                step_v = conv(step) if step else conv(1)
                if not step_v > 0:
                    raise InputError("sweep step must be positive")
                v = conv(lo)
                while v <= conv(hi):
                    values.append(v)
                    v += step_v
            elif part:
                values.append(conv(part))
    except ValueError:
        raise InputError(f"bad sweep values: {body!r}") from None
    if not values:
        raise InputError("sweep has no values")
    unique = list(dict.fromkeys(values))
    if len(unique) != len(values):
        log.warning("duplicate sweep values dropped: %s -> %s", values, unique)
        print(f"warning: duplicate sweep values dropped ({len(values) - len(unique)})",
              file=sys.stderr)
    return key, unique


def cmd_sweep(args) -> int:
    key, values = parse_sweep(args.sweep)
    log_, trainers = _load_inputs(args)
    rows = []
    for v in values:
        cfg = _sim_config(args, **{key: v})
        out_dir = os.path.join(args.out, f"{key}={v}")
        report, eff, _ = _simulate(log_, trainers, cfg, args, out_dir)
        rt = report.mean_runtime_s()
        rows.append([key, v, "" if eff.u_pct is None else eff.u_pct,
                     report.rescale_cost_per_event, "" if rt is None else rt,
                     eff.resource_node_hours])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "value", "u_pct", "rescale_cost_per_event",
                    "avg_runtime_s", "resource_node_hours"])
        w.writerows(rows)
    print(f"{len(rows)} runs -> {path}")
    return EXIT_OK


def cmd_trace_stats(args) -> int:
    if not os.path.isfile(args.trace):
        raise InputError(f"no such file: {args.trace}")
    try:
        st = trace.stats(trace.load(args.trace), min_length_s=args.min_length_s)
    except trace.TraceError as exc:
        raise InputError(f"{args.trace}: {exc}") from None
    os.makedirs(args.out, exist_ok=True)
    trace.write_stats_csv(st, os.path.join(args.out, "stats.csv"))
    trace.write_cdf_csv(st, os.path.join(args.out, "cdf.csv"))
    for name, value in st.rows():
        print(f"{name}\t{value:.6g}")
    return EXIT_OK


def _agree(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    for i in range(args.instances):
        state, cfg = random_instance(rng, max_jobs=args.max_jobs, max_nodes=args.max_nodes)
        results = {
            "bb": solve_bb(build_milp(state, cfg)),
            "count-dp": solve_count_dp(state, cfg),
            "exhaustive": solve_exhaustive(state, cfg),
        }
        values = {k: r.objective_value for k, r in results.items()}
        ref = values["exhaustive"]
        if not all(_agree(v, ref, args.rtol) for v in values.values()):
            repro = {
                "instance": i, "seed": args.seed,
                "config": {"t_fwd_s": cfg.t_fwd_s, "metric": cfg.metric.value},
                "state": state_to_dict(state),
                "objectives": values,
                "counts": {k: r.counts for k, r in results.items()},
            }
            print(f"solver disagreement on instance {i}", file=sys.stderr)
            print(json.dumps(repro, indent=1, sort_keys=True))
            return EXIT_VERIFY
    print(f"{args.instances} instances: all three solvers agree")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        cfg = trace.SynthConfig(args.n_pool, args.join_rate, args.residency_s, args.duration_s,
                                args.mean_batch)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    log_ = trace.synth(cfg, args.seed)
    trace.save(log_, args.out)
    print(f"{len(log_.events)} events -> {args.out}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    for p in fixtures.write_bundled(args.out):
        print(p)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "trace-stats": cmd_trace_stats,
    "verify": cmd_verify,
    "synth": cmd_synth,
    "fixtures": cmd_fixtures,
}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
