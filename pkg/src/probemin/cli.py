"""Command-line front end.

Subcommands: solve, oracle, verify, gap, sweep.  Exit codes: 0 pass,
1 verification failure, 2 usage or input error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import multiprocessing
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from ._numeric import number_json, number_repr
from .metamin import ALGORITHMS, calls_bound, make_solver, metamin_for
from .model import CapExceeded, Cardinality, InstanceError, Knapsack, load_instance
from .objective import MinBasis, ThresholdContext
from .oracle import (
    OracleTooLarge,
    opt_adaptive_expectation,
    opt_adaptive_mtrank_cardinality,
    opt_adaptive_rank_knapsack,
    opt_adaptive_rank_matroid,
    opt_nonadaptive,
)
from .policy import PolicyError, exact_expected_objective, exact_success_probability, run_trials, summarize
from .verify import Knobs, SUITES, gap_case, run_suite
from .generate import random_knapsack_instance

CSV_SCHEMA = "probemin-csv/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- output helpers ---------------------------------------------------------------


def _plain(value):
    if isinstance(value, Fraction):
        return number_repr(value)
    return value


def emit(args, payload: dict, rows: list[dict] | None = None, kind: str = "report") -> None:
    """Write JSON, or CSV with a schema row first, to --out or stdout."""
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=False, default=_plain) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema", CSV_SCHEMA, kind])
        table = rows if rows is not None else [_flatten(payload)]
        if table:
            cols = list(table[0].keys())
            for r in table[1:]:
                cols += [c for c in r if c not in cols]
            w.writerow(cols)
            for r in table:
                w.writerow([_plain(r.get(c, "")) for c in cols])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(payload: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in payload.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, name + "_"))
        elif isinstance(val, (list, tuple)):
            out[name] = " ".join(str(_plain(v)) for v in val)
        else:
            out[name] = val
    return out


def _load(args):
    if not args.instance:
        raise UsageError("--instance is required")
    try:
        return load_instance(args.instance)
    except FileNotFoundError:
        raise UsageError(f"instance file {args.instance!r} not found") from None


# -- solve ---------------------------------------------------------------------------


def _build_policy(args, instance):
    if args.algo == "metamin":
        solver = make_solver(args.inner, instance, args.mode)
        return metamin_for(instance, solver, test_on_union=args.test_on_union, index_mode=args.index_mode)
    if args.t is None:
        raise UsageError(f"--t is required for --algo {args.algo}")
    solver = make_solver(args.algo, instance, args.mode)
    return solver(args.i, args.t)


def _rank_kind(args, instance):
    if args.algo == "adap-mgreedy" or isinstance(instance.objective, MinBasis):
        return "mtrank", instance.inner_matroid
    return "trank", None


def cmd_solve(args) -> int:
    instance = _load(args)
    policy = _build_policy(args, instance)
    head = {"algo": args.algo, "inner": args.inner if args.algo == "metamin" else None,
            "t": args.t, "i": args.i, "n": instance.n, "m": instance.m}
    if args.mc is None:
        ev = exact_expected_objective(policy, instance)
        payload = {**head, "mode": "exact",
                   "expected_objective": number_json(ev.expected),
                   "expected_ub": number_json(ev.expected_ub) if ev.expected_ub is not None else None,
                   "outcomes": len(ev.outcomes),
                   "max_calls": max(len(r.call_log) for _, r in ev.outcomes),
                   "max_feasible_sets": max(r.feasible_set_count for _, r in ev.outcomes)}
        if args.t is not None and args.algo != "metamin":
            kind, matroid = _rank_kind(args, instance)
            p = exact_success_probability(policy, instance, ThresholdContext(args.t, args.i), kind, matroid)
            payload["success_probability"] = number_json(p)
            first = ev.outcomes[0][1]
            if len({tuple(sorted(r.selection)) for _, r in ev.outcomes}) == 1:
                payload["selection"] = sorted(first.selection)
        if args.algo == "metamin" and args.format == "json":
            payload["outcome_reports"] = [
                {"probability": number_repr(p), **r.to_json()} for p, r in ev.outcomes
            ]
        emit(args, payload)
        return EXIT_OK
    rows = run_trials(policy, instance, args.mc, args.seed, jobs=args.jobs)
    mean, hw = summarize([r.objective for r in rows])
    summary = {"trial": "summary", "objective": mean, "cost": "", "feasible_set_count": "",
               "ub": "", "calls": "", "half_width_95": hw, "trials": len(rows)}
    table = [{"trial": r.trial, "objective": r.objective, "cost": number_repr(r.cost),
              "feasible_set_count": r.feasible_set_count,
              "ub": "" if r.ub is None else r.ub, "calls": r.calls} for r in rows]
    if args.format == "json":
        emit(args, {**head, "mode": "monte-carlo", "seed": args.seed, "trials": table,
                    "summary": {"mean": mean, "half_width_95": hw, "trials": len(rows)}})
    else:
        emit(args, {}, table + [summary], kind="trials")
    return EXIT_OK


# -- oracle ----------------------------------------------------------------------------


def cmd_oracle(args) -> int:
    instance = _load(args)
    start = time.perf_counter()
    states = None
    if args.kind == "expectation":
        res = opt_adaptive_expectation(instance)
        value, states = res.value, res.states_visited
    elif args.kind == "nonadaptive":
        res = opt_nonadaptive(instance, t=args.t)
        value, states = res.value, res.sets_checked
    else:
        if args.t is None:
            raise UsageError("--t is required for rank oracles")
        c = instance.constraint
        if isinstance(instance.objective, MinBasis) and isinstance(c, Cardinality):
            value = opt_adaptive_mtrank_cardinality(instance, instance.inner_matroid, c.budget, args.i, args.t)
        elif isinstance(c, (Knapsack, Cardinality)):
            from .metamin import knapsack_view

            view, B = knapsack_view(instance)
            value = opt_adaptive_rank_knapsack(view, B, args.i, args.t)
        else:
            value = opt_adaptive_rank_matroid(instance, c.matroid, args.i, args.t)
    elapsed = (time.perf_counter() - start) * 1000
    emit(args, {"kind": args.kind, "value": number_json(value), "states_visited": states,
                "elapsed_ms": round(elapsed, 3)})
    return EXIT_OK


# -- verify / gap ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    knobs = Knobs(seed=args.seed, trials=args.trials, n=args.n, N=tuple(args.N or (4, 10, 100)))
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = [c for name in names for c in run_suite(name, knobs)]
    if args.format == "json" and args.out:
        emit(args, {"checks": [c.__dict__ for c in checks]})
    elif args.format == "csv" and args.out:
        emit(args, {}, [c.__dict__ for c in checks], kind="verify")
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_gap(args) -> int:
    rows = []
    for N in args.N or (10,):
        res = gap_case(N)
        rows.append({"N": N, "adaptive_expected": number_repr(res["adaptive"]),
                     "adaptive_float": float(res["adaptive"]),
                     "oracle_adaptive": number_repr(res["oracle"]),
                     "best_fixed_set": " ".join(map(str, res["nonadaptive_set"])),
                     "best_fixed_expected": number_repr(res["nonadaptive"]),
                     "ratio": float(res["ratio"]), "half_N": N / 2,
                     "ratio_at_least_half_N": res["ratio"] >= Fraction(N, 2)})
    if args.format == "json":
        emit(args, {"gap": rows})
    else:
        emit(args, {}, rows, kind="gap")
    return EXIT_OK


# -- sweep ------------------------------------------------------------------------------


def _parse_grid(spec: str) -> tuple[str, list[int]]:
    try:
        name, values = spec.split("=", 1)
        return name.strip(), [int(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --param {spec!r}; expected name=v1,v2,...") from None


def _sweep_point(job) -> dict:
    algo, inner, mode, name, value, n, trials, seed, t, i = job
    rng = random.Random(seed * 1_000_003 + value)
    params = {"m": 4, "n": n}
    params[name] = value
    inst = random_knapsack_instance(rng, params["n"], m=params["m"])
    if algo == "metamin":
        policy = metamin_for(inst, make_solver(inner, inst, mode))
    else:
        policy = make_solver(algo, inst, mode)(i, t if t is not None else 0)
    rows = run_trials(policy, inst, trials, seed)
    mean, hw = summarize([r.objective for r in rows])
    calls = [r.calls for r in rows]
    return {name: value, "trials": trials, "mean_objective": mean, "half_width_95": hw,
            "mean_calls": sum(calls) / len(calls), "max_calls": max(calls),
            "calls_bound": calls_bound(inst.m) if algo == "metamin" else "",
            "max_feasible_sets": max(r.feasible_set_count for r in rows)}


def cmd_sweep(args) -> int:
    name, values = _parse_grid(args.param)
    if name not in ("m", "n"):
        raise UsageError("sweep supports the parameters m and n")
    trials = args.mc or 200
    jobs = [(args.algo, args.inner, args.mode, name, v, args.n or 6, trials, args.seed, args.t, args.i)
            for v in values]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs, mp_context=multiprocessing.get_context("fork")) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    if args.format == "json":
        emit(args, {"param": name, "rows": rows})
    else:
        emit(args, {}, rows, kind="sweep")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON document")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trials and sweeps")
    ev = common.add_mutually_exclusive_group()
    ev.add_argument("--exact", action="store_true", help="exact evaluation (default)")
    ev.add_argument("--mc", type=int, metavar="N", help="Monte Carlo with N trials")
    common.add_argument("--out", help="write the primary output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    algo = argparse.ArgumentParser(add_help=False)
    algo.add_argument("--algo", choices=ALGORITHMS + ("metamin",), default="metamin")
    algo.add_argument("--inner", choices=ALGORITHMS, default="exact", help="threshold solver inside metamin")
    algo.add_argument("--t", type=int, help="threshold")
    algo.add_argument("--i", type=int, default=1, help="rank target")
    algo.add_argument("--mode", choices=("union", "handoff"), default="union",
                      help="rank-knapsack: probe G u C, or C first then a greedy set sized by what C found")
    algo.add_argument("--test-on-union", action="store_true",
                      help="judge each threshold call on everything probed so far")
    algo.add_argument("--index-mode", choices=("reversed", "powers"), default="reversed")

    p = argparse.ArgumentParser(prog="probemin", description="Adaptive stochastic probing toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common, algo], help="run an algorithm on an instance")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", parents=[common], help="optimal values by brute force")
    o.add_argument("--kind", choices=("expectation", "nonadaptive", "rank"), default="expectation")
    o.add_argument("--t", type=int)
    o.add_argument("--i", type=int, default=1)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=list(SUITES) + ["all"])
    v.add_argument("--trials", type=int)
    v.add_argument("--n", type=int, help="maximum instance size")
    v.add_argument("--N", type=int, nargs="+", help="gap-example sizes")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gap", parents=[common], help="three-element adaptivity gap report")
    g.add_argument("--N", type=int, nargs="+")
    g.set_defaults(func=cmd_gap)

    w = sub.add_parser("sweep", parents=[common, algo], help="parameter sweep over random instances")
    w.add_argument("--param", required=True, help="name=v1,v2,... (m or n)")
    w.add_argument("--n", type=int, help="instance size when sweeping m")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapExceeded, OracleTooLarge) as exc:
        print(f"probemin: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, InstanceError, ValueError, KeyError, PolicyError) as exc:
        print(f"probemin: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
