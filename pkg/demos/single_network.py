"""Walk through one network: baselines, the successive approximation, and exhaustive search.

Run with ``python demos/single_network.py [seed]``.
"""

import sys

import numpy as np

from pilotopt import baselines, maxmin
from pilotopt.closedform import se
from pilotopt.netgen import SystemConfig, generate_network
from pilotopt.pilot import from_assignment


def main(seed=0):
    cfg = SystemConfig.standard()
    net = generate_network(cfg, seed)
    print(f"{cfg.L} cells, {cfg.K} users per cell, {cfg.M} antennas, pilot length {cfg.tau_p}")

    rand = from_assignment(baselines.random_assignment(cfg, seed), cfg)
    smart_assign = baselines.smart_assignment(cfg, net)
    smart = from_assignment(smart_assign, cfg)
    print(f"random reuse       min-SE {se(rand, net, cfg).min_se:.4f} b/s/Hz")
    print(f"smart reuse        min-SE {se(smart, net, cfg).min_se:.4f} b/s/Hz  pilots {smart_assign.perm.tolist()}")

    init = maxmin.init_powers(cfg, net, "baseline-warm-start", warm_start=smart)
    trace = maxmin.run(cfg, net, init)
    print("successive approximation, min SINR bound per iteration:")
    for i, xi in enumerate(trace.xi_per_iter, 1):
        print(f"  {i:2d}  {xi:.6g}")
    print(f"proposed           min-SE {trace.min_se:.4f} b/s/Hz after {trace.iterations} iterations")
    np.set_printoptions(precision=4, suppress=True)
    print("pilot power split per user (W):")
    print(trace.final_alloc.power_split.reshape(cfg.L * cfg.K, cfg.tau_p))

    bf = baselines.brute_force(cfg, net)
    print(f"exhaustive search  min-SE {bf.min_se:.4f} b/s/Hz over {bf.n_classes} reuse patterns")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
