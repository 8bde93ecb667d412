"""Min-SE distribution of all four methods in the default four-cell scenario.

Writes the CSV artifacts to ``demos_out/default`` and prints a coarse CDF
table. Run with ``python demos/default_cdf.py [trials]``.
"""

import sys

import numpy as np

from pilotopt import bench


def main(trials=50):
    conf = bench.load_config({"trials": trials})
    rows = bench.run_campaign(conf, "demos_out/default")[None]
    print(f"{'method':<10} {'mean':>8} {'5th pct':>8}")
    for r in rows:
        print(f"{r['method']:<10} {r['mean_min_se']:>8.4f} {r['p5_min_se']:>8.4f}")
    print("\nmin-SE at selected cumulative probabilities")
    probs = [0.05, 0.25, 0.5, 0.75, 0.95]
    print(f"{'method':<10} " + " ".join(f"{p:>7.2f}" for p in probs))
    for m in conf["methods"]:
        x = np.loadtxt(f"demos_out/default/cdf_{m}.csv", delimiter=",", skiprows=1)[:, 0]
        print(f"{m:<10} " + " ".join(f"{np.quantile(x, p):>7.3f}" for p in probs))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)
