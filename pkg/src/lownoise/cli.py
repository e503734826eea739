"""Command-line interface.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConfigInvalid, IOFailure, LowNoiseError
from .report import emit_report
from .scenarios import SCENARIO_BUILDERS, build_scenario, scenario_from_config
from .sweep import run_sweep
from .verify import check_property_suite, run_all


def _parse_direction(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigInvalid(f"bad direction {text!r}: {exc}") from exc


def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            return tuple(np.geomspace(float(lo), float(hi), int(num)))
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigInvalid(f"bad scales {text!r}: {exc}") from exc


def _load_scenario(args) -> object:
    direction = _parse_direction(args.direction) if args.direction else None
    scales = _parse_scales(args.scales) if args.scales else None
    if args.scenario in SCENARIO_BUILDERS:
        return build_scenario(args.scenario, direction=direction, scales=scales, seed=args.seed)
    if os.path.exists(args.scenario):
        with open(args.scenario, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if direction or scales or args.seed is not None:
            sw = cfg.setdefault("sweep", {})
            if direction:
                sw["direction"] = list(direction)
            if scales:
                sw["scales"] = list(scales)
            if args.seed is not None:
                sw["seed"] = args.seed
        return scenario_from_config(cfg)
    raise ConfigInvalid(
        f"{args.scenario!r} is neither a known scenario ({', '.join(sorted(SCENARIO_BUILDERS))}) nor a config file"
    )


def _cmd_run(args) -> int:
    sc = _load_scenario(args)
    report = run_sweep(sc, shots=args.shots)
    for c in report.checks:
        status = "PASS" if c["passed"] else ("XFAIL" if c["expected_failure"] else "FAIL")
        print(f"{status:5s} {sc.name}: {c['name']} -- {c['detail']}")
    out = args.out
    if out is None and os.environ.get("LOWNOISE_OUT_DIR"):
        out = os.path.join(os.environ["LOWNOISE_OUT_DIR"], f"{sc.name}.{args.format}")
    if out:
        emit_report(report, args.format, out)
        print(f"report written to {out}")
    print(f"{'PASS' if report.passed else 'FAIL'} {sc.name}")
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    results = run_all(num_seeds=args.seeds, shots=args.shots)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        ok = ok and r.passed
        print(f"{status}  {r.name}  ({r.seconds:.1f}s)  {r.detail}")
    return 0 if ok else 1


def _cmd_random_suite(args) -> int:
    r = check_property_suite(args.seeds)
    print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.seconds:.1f}s)  {r.detail}")
    return 0 if r.passed else 1


def _cmd_list(_args) -> int:
    for name in sorted(SCENARIO_BUILDERS):
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lownoise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario sweep and report results")
    p_run.add_argument("scenario", help="scenario name or scenario config path")
    p_run.add_argument("--direction", help="comma-separated positive weights summing to 1")
    p_run.add_argument("--scales", help="lo:hi:num geometric grid or comma-separated list")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--shots", type=int, default=0, help="Monte Carlo shots per sweep point")
    p_run.add_argument("--out", default=None, help="report path (default: $LOWNOISE_OUT_DIR/<name>.<fmt>)")
    p_run.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p_run.set_defaults(fn=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the full acceptance and property suite")
    p_verify.add_argument("--seeds", type=int, default=100)
    p_verify.add_argument("--shots", type=int, default=10**6)
    p_verify.set_defaults(fn=_cmd_verify)

    p_rand = sub.add_parser("random-suite", help="run the random-channel property suite")
    p_rand.add_argument("--seeds", type=int, default=100)
    p_rand.set_defaults(fn=_cmd_random_suite)

    p_list = sub.add_parser("list", help="list built-in scenarios")
    p_list.set_defaults(fn=_cmd_list)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigInvalid, IOFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LowNoiseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
