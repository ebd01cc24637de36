"""Command-line interface: `maler run ...` and `maler certify --trace FILE`."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .universal import AssumptionViolation

KNOWN_ALGOS = ("maler", "metagrad", "ogd-convex", "ogd-sc", "ons")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maler",
                                     description="universal online learning benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run learners on one task and write results")
    run.add_argument("--task", choices=("regression", "classification"),
                     default="regression")
    run.add_argument("--algos", default=None,
                     help="comma-separated subset of " + ",".join(KNOWN_ALGOS))
    run.add_argument("--rounds", type=int, default=200)
    run.add_argument("--dim", type=int, default=50)
    run.add_argument("--batch", type=int, default=200)
    run.add_argument("--lambda", dest="ridge_lambda", type=float, default=1e-3)
    run.add_argument("--noise-std", type=float, default=0.1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--data", default=None, help="LIBSVM file (classification)")
    run.add_argument("--radius", type=float, default=0.5,
                     help="decision-ball radius (classification)")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--svg", action="store_true", help="also write a regret plot")

    cert = sub.add_parser("certify", help="re-run all certificates on a saved trace")
    cert.add_argument("--trace", required=True, help="trace JSON written by `run`")
    return parser


def _default_algos(task: str) -> tuple:
    if task == "classification":
        return ("maler", "metagrad", "ogd-convex", "ons")
    return KNOWN_ALGOS


def cmd_run(args) -> int:
    algos = tuple(a for a in (args.algos or "").split(",") if a) or _default_algos(args.task)
    for a in algos:
        if a not in KNOWN_ALGOS:
            print(f"unknown algo {a!r}; known: {', '.join(KNOWN_ALGOS)}", file=sys.stderr)
            return 2
    cfg = harness.ExperimentConfig(
        task=args.task,
        algos=algos,
        rounds=args.rounds,
        dim=args.dim,
        batch=args.batch,
        ridge_lambda=args.ridge_lambda,
        noise_std=args.noise_std,
        seed=args.seed,
        data=args.data,
        radius=args.radius,
        out=args.out,
        svg=args.svg,
    )
    try:
        result = harness.run_experiment(cfg)
    except (ValueError, AssumptionViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(harness._report_text(result), end="")
    if not args.out:
        print("(no --out directory given; results not written)")
    else:
        for f in result.files:
            print(f"wrote {f}")
    all_ok = all(rep.ok for reports in result.certificates.values() for rep in reports)
    return 0 if all_ok else 2


def cmd_certify(args) -> int:
    try:
        trace = harness.load_trace(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load trace: {exc}", file=sys.stderr)
        return 1
    reports, ok = harness.certify_trace(trace)
    for rep in reports:
        status = "PASS" if rep.ok else "FAIL"
        worst = rep.worst()
        print(f"[{status}] {rep.name}: {len(rep.rows)} checks, "
              f"min slack {worst.slack:.6g} at {worst.label!r}")
        if not rep.ok:
            for row in rep.rows:
                if not row.ok:
                    print(f"    violated: {row.label} measured={row.measured:.12g} "
                          f"bound={row.bound:.12g}")
    print("certificates " + ("PASS" if ok else "FAIL") + f" for algo={trace.algo!r}")
    return 0 if ok else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_certify(args)


if __name__ == "__main__":
    sys.exit(main())
