"""Closed-form SINR against channel-level Monte Carlo on a few random allocations.

Run with ``python demos/oracle_check.py [samples]``.
"""

import sys

from pilotopt import bench


def main(samples=50_000):
    conf = bench.load_config({"antennas": 100, "verify_networks": 2, "verify_allocations": 2,
                              "verify_samples": samples, "verify_cells": "rotate", "verify_tolerance": 0.02})
    report = bench.verify_oracle(conf)
    print(f"{'net':>3} {'alloc':>5} {'user':>6} {'closed form':>12} {'simulated':>12} {'rel dev':>9}")
    for n, a, l, k, exact, emp, dev in report.rows:
        print(f"{n:>3} {a:>5} {f'({l},{k})':>6} {exact:>12.5g} {emp:>12.5g} {dev:>9.2e}")
    print(f"max relative deviation {report.max_deviation:.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50_000)
