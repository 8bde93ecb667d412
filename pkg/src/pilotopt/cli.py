"""Command line entry point: ``pilotopt run`` and ``pilotopt verify``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import bench

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY_FAILED = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pilotopt", description="Pilot sequence and power design benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a comparison campaign and write CSV outputs")
    run.add_argument("--config", help="JSON config file (defaults apply to missing keys)")
    run.add_argument("--out", default=os.environ.get("PILOTOPT_OUT"),
                     help="output directory (env PILOTOPT_OUT)")
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int, default=_env_int("PILOTOPT_WORKERS"),
                     help="parallel worker processes (env PILOTOPT_WORKERS)")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--methods", help="comma-separated subset of " + ",".join(bench.METHODS))

    ver = sub.add_parser("verify", help="check closed-form SINRs against Monte Carlo simulation")
    ver.add_argument("--config", help="JSON config file")
    ver.add_argument("--out", default=os.environ.get("PILOTOPT_OUT"),
                     help="optional directory for verify.csv (env PILOTOPT_OUT)")
    ver.add_argument("--seed", type=int)
    return p


def _env_int(name):
    value = os.environ.get(name)
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value  # rejected later with a config error


def _run(args) -> int:
    if not args.out:
        print("error: --out is required (or set PILOTOPT_OUT)", file=sys.stderr)
        return EXIT_CONFIG
    conf = bench.load_config(args.config, trials=args.trials, seed=args.seed, methods=args.methods,
                             workers=args.workers)
    summaries = bench.run_campaign(conf, args.out)
    for value, rows in summaries.items():
        if value is not None:
            print(f"{conf['sweep']['key']} = {value}")
        print(f"{'method':<10} {'mean':>10} {'95%-likely':>11}")
        for r in rows:
            print(f"{r['method']:<10} {r['mean_min_se']:>10.4f} {r['p5_min_se']:>11.4f}")
    print(f"outputs written to {args.out}")
    return EXIT_OK


def _verify(args) -> int:
    conf = bench.load_config(args.config, seed=args.seed)
    report = bench.verify_oracle(conf)
    print(f"{'net':>3} {'alloc':>5} {'user':>6} {'closed form':>12} {'empirical':>12} {'rel dev':>9}")
    for n, a, l, k, exact, emp, dev in report.rows:
        print(f"{n:>3} {a:>5} {f'({l},{k})':>6} {exact:>12.6g} {emp:>12.6g} {dev:>9.2e}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        bench.write_verify(report, os.path.join(args.out, "verify.csv"))
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}: max relative deviation {report.max_deviation:.3e} (tolerance {report.tolerance:g})")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args) if args.command == "run" else _verify(args)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
