"""Mean min-SE against users per cell and against antenna count.

Run with ``python demos/sweeps.py [trials]``. Larger user counts are slow:
one proposed run at six users per cell takes several seconds.
"""

import sys

from pilotopt import bench


def show(title, key, summaries):
    print(title)
    print(f"{key:>15} {'random':>8} {'smart':>8} {'proposed':>9} {'gain':>6}")
    for v, rows in summaries.items():
        m = {r["method"]: r["mean_min_se"] for r in rows}
        print(f"{v:>15} {m['random']:>8.4f} {m['smart']:>8.4f} {m['proposed']:>9.4f} "
              f"{m['proposed'] / m['random']:>6.2f}")
    print()


def main(trials=10):
    common = {"trials": trials, "methods": "random,smart,proposed", "random_starts": 1}
    conf = bench.load_config(dict(common, sweep={"key": "users_per_cell", "values": [2, 4, 6]}))
    show("pilot length equal to users per cell, 300 antennas", "users_per_cell",
         bench.run_campaign(conf, "demos_out/users"))
    conf = bench.load_config(dict(common, users_per_cell=4, sweep={"key": "antennas", "values": [100, 300, 900]}))
    show("four users per cell", "antennas", bench.run_campaign(conf, "demos_out/antennas"))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
