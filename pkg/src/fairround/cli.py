"""Command-line front end: generate, evaluate, round, solve, and brute-force.

Reports go to stdout (or --report FILE); diagnostics go to stderr.  Exit
codes: 0 success, 2 invalid input, 3 infeasible or degenerate, 4 capacity
exceeded, 5 numeric failure.  Runs are deterministic for a fixed argv
including --seed; --threads is accepted for interface stability but results
never depend on it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

from . import multilinear as ml
from .errors import FairroundError, InputError
from .instances import (GenConfig, generate, instance_digest, load, load_point,
                        save, save_point)
from .mms import MmsParams, solve_mms
from .nsw import NswParams, solve_nsw
from .reference import BruteLimits, brute_opt_maxmin, brute_opt_nsw, mms_bruteforce
from .report import RunReport, mode_to_dict
from .rounding import (DEFAULT_ETA, DEFAULT_TAU_ZERO, cancel_all_cycles,
                       nonuniform_pipage, randomized_round)
from .santa import SantaParams, solve_santa
from .valuations import value


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto",
                   help="evaluation mode (auto: exact when the size cap allows)")
    p.add_argument("--samples", type=int, default=10_000,
                   help="Monte Carlo samples per estimate in sampled mode")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomized parts")
    p.add_argument("--threads", type=int, default=0,
                   help="worker hint (0 = auto); never changes results")


def _resolve_mode(args, width: int) -> ml.EvalMode:
    if args.mode == "exact":
        return ml.EXACT
    if args.mode == "sampled":
        return ml.Sampled(args.samples, args.seed)
    if width <= ml.EXACT_MAX_FRACTIONAL:
        return ml.EXACT
    return ml.Sampled(args.samples, args.seed)


def _emit(payload, args) -> None:
    text = payload.to_json() if isinstance(payload, RunReport) else json.dumps(payload, indent=1)
    report_path = getattr(args, "report", None)
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(text)
            fh.write("\n")
    else:
        print(text)


def _cmd_gen(args) -> None:
    cfg = GenConfig(args.family, args.agents, args.goods, args.seed,
                    args.small_goods)
    instance = generate(cfg)
    if args.out:
        save(instance, args.out)
    else:
        from .instances import instance_to_dict
        print(json.dumps(instance_to_dict(instance), indent=1))


def _cmd_eval(args) -> None:
    instance = load(args.instance)
    point = load_point(args.point)
    if point.n != instance.n or point.m != instance.m:
        raise InputError(
            f"point shape {point.n}x{point.m} does not match instance "
            f"{instance.n}x{instance.m}")
    if not 0 <= args.agent < instance.n:
        raise InputError(f"agent {args.agent} out of range [0, {instance.n})")
    mode = _resolve_mode(args, instance.m)
    est = ml.evaluate(instance.valuations[args.agent], point.row(args.agent), mode)
    _emit({
        "agent": args.agent,
        "mode": mode_to_dict(mode),
        "value": est.value,
        "half_width": est.half_width,
        "samples_used": est.samples_used,
    }, args)


def _cmd_cancel(args) -> None:
    instance = load(args.instance)
    point = load_point(args.point)
    if point.n != instance.n or point.m != instance.m:
        raise InputError("point shape does not match the instance")
    mode = _resolve_mode(args, instance.m)
    acyclic, trace = cancel_all_cycles(point, instance.valuations, mode,
                                       args.tau_zero, args.eta)
    payload = {
        "point": acyclic.to_dict(),
        "trace": [s.to_dict() for s in trace],
        "steps": len(trace),
    }
    if args.out:
        save_point(acyclic, args.out)
    _emit(payload, args)


def _cmd_round(args) -> None:
    instance = load(args.instance)
    point = load_point(args.point)
    if point.n != instance.n or point.m != instance.m:
        raise InputError("point shape does not match the instance")
    t0 = time.perf_counter()
    if args.method == "pipage":
        mode = _resolve_mode(args, instance.m)
        alloc, trace = nonuniform_pipage(point, instance.valuations, mode,
                                         args.tau_zero, args.eta)
        trace_payload = [s.to_dict() for s in trace]
    else:
        alloc = randomized_round(point, args.seed)
        trace_payload = []
    per_agent = [value(instance.valuations[i], alloc.bundles[i])
                 for i in range(instance.n)]
    _emit({
        "method": args.method,
        "instance_digest": instance_digest(instance),
        "allocation": alloc.as_lists(),
        "per_agent_values": per_agent,
        "trace": trace_payload,
        "wall_time_ms": (time.perf_counter() - t0) * 1e3,
    }, args)


def _cmd_solve(args) -> None:
    instance = load(args.instance)
    mode = _resolve_mode(args, instance.m)
    if args.algorithm == "santa":
        params = SantaParams(eps=args.eps, cg_steps=args.cg_steps,
                             mwu_rate=args.mwu_rate,
                             bs_rel_precision=args.bs_rel_precision,
                             mode=mode, seed=args.seed,
                             tau_zero=args.tau_zero, eta=args.eta)
        report = solve_santa(instance, params)
    elif args.algorithm == "nsw":
        params = NswParams(step_eps=args.step_eps, stop_delta=args.stop_delta,
                           max_iters=args.max_iters, value_floor=args.value_floor,
                           mode=mode, seed=args.seed,
                           tau_zero=args.tau_zero, eta=args.eta)
        report = solve_nsw(instance, params)
    else:
        params = MmsParams(mode=mode, seed=args.seed,
                           tau_zero=args.tau_zero, eta=args.eta)
        report = solve_mms(instance, params,
                           BruteLimits(args.max_assignments))
    _emit(report, args)


def _cmd_oracle(args) -> None:
    instance = load(args.instance)
    limits = BruteLimits(args.max_assignments)
    if args.objective == "maxmin":
        val, alloc = brute_opt_maxmin(instance, limits)
        _emit({"objective": "maxmin", "value": val,
               "allocation": alloc.as_lists(),
               "instance_digest": instance_digest(instance)}, args)
    elif args.objective == "nsw":
        val, alloc = brute_opt_nsw(instance, limits)
        _emit({"objective": "nsw", "value": val,
               "allocation": alloc.as_lists(),
               "instance_digest": instance_digest(instance)}, args)
    else:
        shares = [mms_bruteforce(spec, instance.n, None, limits)
                  for spec in instance.valuations]
        _emit({"objective": "mms", "mms": shares,
               "instance_digest": instance_digest(instance)}, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairround",
        description="Round fractional allocations and solve max-min, Nash "
                    "welfare and maximin-share objectives under submodular "
                    "valuations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--family", required=True,
                   choices=["additive", "coverage", "budget_additive",
                            "concave_additive", "mixed"])
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--goods", type=int, required=True)
    p.add_argument("--small-goods", type=float, default=None, dest="small_goods",
                   help="cap singleton values at this fraction of the fair share")
    p.add_argument("--out", default=None, help="instance file to write (default stdout)")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("eval", help="evaluate one agent's multilinear value at a point")
    p.add_argument("--instance", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--agent", type=int, required=True)
    p.add_argument("--report", default=None)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cancel", help="cancel all support cycles of a point")
    p.add_argument("--instance", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--out", default=None, help="write the acyclic point here")
    p.add_argument("--report", default=None)
    p.add_argument("--tau-zero", type=float, default=DEFAULT_TAU_ZERO, dest="tau_zero")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_cancel)

    p = sub.add_parser("round", help="round a fractional point to a partition")
    p.add_argument("--instance", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--method", choices=["pipage", "randomized"], default="pipage")
    p.add_argument("--report", default=None)
    p.add_argument("--tau-zero", type=float, default=DEFAULT_TAU_ZERO, dest="tau_zero")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_round)

    p = sub.add_parser("solve", help="run a solver and emit its report")
    p.add_argument("algorithm", choices=["santa", "nsw", "mms"])
    p.add_argument("--instance", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--cg-steps", type=int, default=256, dest="cg_steps")
    p.add_argument("--mwu-rate", type=float, default=1.0, dest="mwu_rate")
    p.add_argument("--bs-rel-precision", type=float, default=0.02,
                   dest="bs_rel_precision")
    p.add_argument("--step-eps", type=float, default=0.05, dest="step_eps")
    p.add_argument("--stop-delta", type=float, default=None, dest="stop_delta")
    p.add_argument("--max-iters", type=int, default=10_000, dest="max_iters")
    p.add_argument("--value-floor", type=float, default=1e-12, dest="value_floor")
    p.add_argument("--max-assignments", type=int, default=2_000_000,
                   dest="max_assignments")
    p.add_argument("--tau-zero", type=float, default=DEFAULT_TAU_ZERO, dest="tau_zero")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("oracle", help="brute-force exact optimum (desk scale)")
    p.add_argument("objective", choices=["maxmin", "nsw", "mms"])
    p.add_argument("--instance", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--max-assignments", type=int, default=2_000_000,
                   dest="max_assignments")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except FairroundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
