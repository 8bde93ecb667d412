"""End-to-end acceptance checks at the target tolerances.

Each test records one PASS/FAIL line (printed again in the terminal
summary). Campaign sizes are module constants; the whole file takes tens
of minutes on one core.
"""

import subprocess
import sys

import numpy as np
import pytest

from conftest import record
from pilotopt import bench, gp, maxmin
from pilotopt.netgen import SystemConfig, generate_network

ORACLE_SAMPLES = 200_000
AMGM_TRIPLES = 10_000
RANDOM_GPS = 20
CONVERGENCE_RUNS = 100
DEFAULT_TRIALS = 200
K_SWEEP_TRIALS = 12
M_SWEEP_TRIALS = 20
RANDOM_LEVEL_TRIALS = 300

# reference random-reuse mean min-SE at K = tau_p = 4
RANDOM_REFERENCE = {100: 0.08, 900: 0.22}


# ---------------------------------------------------------------------------
# closed form against Monte Carlo


def test_closed_form_matches_monte_carlo():
    conf = bench.load_config({
        "antennas": 100, "verify_networks": 5, "verify_allocations": 3,
        "verify_samples": ORACLE_SAMPLES, "verify_tolerance": 0.01, "verify_cells": "rotate", "seed": 11,
    })
    report = bench.verify_oracle(conf)
    n_cases = len({r[:2] for r in report.rows})
    record("closed-form SINR vs Monte Carlo", report.passed,
           f"{n_cases} (network, allocation) pairs, {len(report.rows)} users, "
           f"max relative deviation {report.max_deviation:.2e} (need < 1e-2)")
    assert n_cases >= 15
    assert report.passed


# ---------------------------------------------------------------------------
# AM-GM bound


def test_amgm_bound_over_random_triples():
    rng = np.random.default_rng(2024)
    names = ["a", "b", "c", "d"]
    worst_anchor, violations = 0.0, 0
    for _ in range(AMGM_TRIPLES):
        terms = []
        for _ in range(int(rng.integers(2, 6))):
            exps = dict(zip(names, rng.normal(0, 1.5, size=4)))
            terms.append(gp.Monomial(float(np.exp(rng.normal(0, 2))), exps))
        p = gp.Posynomial(terms)
        anchor = dict(zip(names, np.exp(rng.normal(0, 1, size=4))))
        probe = dict(zip(names, np.exp(rng.normal(0, 2, size=4))))
        m = gp.amgm_lower_bound(p, anchor)
        worst_anchor = max(worst_anchor, abs(m(anchor) - p(anchor)) / p(anchor))
        violations += m(probe) > p(probe)
    ok = violations == 0 and worst_anchor <= 1e-12
    record("AM-GM monomial bound", ok,
           f"{AMGM_TRIPLES} triples, {violations} probe violations, "
           f"max relative gap at anchor {worst_anchor:.1e} (need <= 1e-12)")
    assert ok


# ---------------------------------------------------------------------------
# GP solver


def _random_gp(rng):
    """Random GP in array form: maximize x s.t. x * P_j(v) <= 1 for each j, Q(v) <= 1, box."""
    d = int(rng.integers(1, 6))
    def posy(n_terms):
        return np.log(rng.uniform(0.1, 2.0, size=n_terms)), rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
                                                                         size=(n_terms, d))
    objs = [posy(int(rng.integers(1, 4))) for _ in range(int(rng.integers(1, 4)))]
    # a constant term keeps x below 1e3, inside its box
    objs = [(np.r_[lc, np.log(1e-3)], np.vstack([E, np.zeros(d)])) for lc, E in objs]
    lc, E = posy(3)
    # scale the budget so a random interior point is strictly feasible
    v0 = rng.uniform(np.log(0.1), np.log(10.0), size=d)
    lc = lc - np.logaddexp.reduce(lc + E @ v0) + np.log(0.5)
    return d, objs, (lc, E)


def _to_problem(d, objs, budget):
    names = [f"v{i}" for i in range(d)]
    X = gp.Monomial.var("x")

    def build(lc, E):
        return gp.Posynomial(gp.Monomial(float(np.exp(c)), dict(zip(names, e))) for c, e in zip(lc, E))

    cons = [X * build(*o) for o in objs] + [build(*budget)]
    bounds = {"x": (1e-2, 1e4), **{v: (1e-2, 1e2) for v in names}}
    return gp.GpProblem.from_posynomials("x", cons, bounds)


def _grid_oracle(d, objs, budget, rng, points=5, levels=1500):
    """Zooming tensor grid over log(v) with a fresh random rotation per level.

    ``x`` is eliminated as ``min_j 1 / P_j(v)``. The rotation stops the
    search from stalling on ridges where several constraints meet; the grid
    shrinks only when a level brings no improvement.
    """
    lo, hi = np.log(1e-2), np.log(1e2)
    lse = lambda lc, E, Y: np.logaddexp.reduce(lc[None, :] + Y @ E.T, axis=1)

    def value(Y):
        logx = np.minimum(np.log(1e4), -np.max([lse(lc, E, Y) for lc, E in objs], axis=0))
        feasible = (lse(*budget, Y) <= 0) & (logx >= np.log(1e-2)) & np.all((Y >= lo) & (Y <= hi), axis=1)
        return np.where(feasible, logx, -np.inf)

    axes = np.meshgrid(*[np.linspace(lo, hi, 9)] * d, indexing="ij")
    Y = np.stack(axes, axis=-1).reshape(-1, d)
    vals = value(Y)
    i = int(np.argmax(vals))
    center, best, radius = Y[i], vals[i], 0.5 * (hi - lo) / 8
    offsets = np.stack(np.meshgrid(*[np.linspace(-1, 1, points)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    for _ in range(levels):
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        Y = center + radius * offsets @ q.T
        vals = value(Y)
        i = int(np.argmax(vals))
        if vals[i] > best:
            center, best = Y[i], vals[i]
        else:
            radius *= 0.85
        if radius < 1e-9:
            break
    return float(np.exp(best))


def test_gp_solver_against_analytic_and_grid_optima():
    X, A, B = (gp.Monomial.var(n) for n in "xab")
    analytic = [
        (gp.GpProblem.from_posynomials("x", [X**2 / 3.0], {"x": (1e-3, 10.0)}), np.sqrt(3.0)),
        (gp.GpProblem.from_posynomials("x", [X / A, A / 2.0], {"x": (1e-3, 10.0), "a": (1e-3, 10.0)}), 2.0),
        (gp.GpProblem.from_posynomials("x", [X / A + X / B, (A + B) / 16.0],
                                       {"x": (1e-3, 100.0), "a": (1e-3, 100.0), "b": (1e-3, 100.0)}), 4.0),
    ]
    worst_analytic = max(abs(gp.solve(p).xi - ref) / ref for p, ref in analytic)
    rng = np.random.default_rng(77)
    worst_grid = 0.0
    for _ in range(RANDOM_GPS):
        inst = _random_gp(rng)
        sol = gp.solve(_to_problem(*inst), tol=1e-9)
        ref = _grid_oracle(*inst, rng=np.random.default_rng(1))
        # the returned point must satisfy every constraint
        feasible = sol.ok and sol.kkt_residual == 0.0
        worst_grid = max(worst_grid, abs(sol.xi - ref) / ref if feasible else np.inf)
    ok = worst_analytic < 1e-4 and worst_grid < 1e-3
    record("GP solver", ok, f"analytic max rel error {worst_analytic:.1e} (need < 1e-4); "
                            f"{RANDOM_GPS} random GPs vs grid search max rel error {worst_grid:.1e} (need < 1e-3)")
    assert ok


# ---------------------------------------------------------------------------
# successive approximation convergence


def test_successive_approximation_converges():
    cfg = SystemConfig.standard()
    worst_drop, fast, iters = 0.0, 0, []
    for r in range(CONVERGENCE_RUNS):
        net = generate_network(cfg, 5000 + r)
        trace = maxmin.run(cfg, net, maxmin.init_powers(cfg, seed=r))
        xi = np.array(trace.xi_per_iter)
        if xi.size > 1:
            worst_drop = max(worst_drop, float(np.max((xi[:-1] - xi[1:]) / xi[:-1])))
        fast += trace.converged
        iters.append(trace.iterations)
    monotone = worst_drop <= 1e-6
    share = fast / CONVERGENCE_RUNS
    ok = monotone and share >= 0.9
    record("successive approximation convergence", ok,
           f"{CONVERGENCE_RUNS} runs, largest relative xi drop {worst_drop:.1e} (need <= 1e-6), "
           f"{share:.0%} reach relative change < 1e-4 within {maxmin.MAX_ITERS} iterations (need >= 90%), "
           f"median iterations {np.median(iters):.0f}")
    assert monotone
    assert share >= 0.9


# ---------------------------------------------------------------------------
# default scenario campaign


@pytest.fixture(scope="module")
def default_campaign(tmp_path_factory):
    conf = bench.load_config({"trials": DEFAULT_TRIALS, "seed": 2016})
    rows = bench.run_campaign(conf, tmp_path_factory.mktemp("default"))[None]
    return {r["method"]: r for r in rows}


def test_proposed_close_to_brute_force(default_campaign):
    prop, brute = default_campaign["proposed"]["mean_min_se"], default_campaign["brute"]["mean_min_se"]
    gap = abs(prop - brute) / brute
    record("proposed vs exhaustive search", gap < 0.05,
           f"{DEFAULT_TRIALS} trials, mean min-SE proposed {prop:.4f} vs brute force {brute:.4f}, "
           f"relative gap {gap:.2%} (need < 5%)")
    assert gap < 0.05


def test_method_ordering_and_gains(default_campaign):
    s = default_campaign
    prop, smart, rand = (s[m]["mean_min_se"] for m in ("proposed", "smart", "random"))
    ordered = prop >= smart >= rand
    gain = prop / smart
    p5_ratio = s["smart"]["p5_min_se"] / s["random"]["p5_min_se"]
    ok = ordered and 1.2 <= gain <= 2.2 and p5_ratio > 2.5
    record("method ordering and gains", ok,
           f"means proposed {prop:.4f} >= smart {smart:.4f} >= random {rand:.4f}: {ordered}; "
           f"proposed/smart {gain:.2f} (need 1.2 to 2.2); smart/random 5th percentile {p5_ratio:.2f} (need > 2.5)")
    assert ordered
    assert 1.2 <= gain <= 2.2
    assert p5_ratio > 2.5


# ---------------------------------------------------------------------------
# trends in K and M


def _sweep(tmp_path, key, values, trials, **extra):
    conf = bench.load_config({"trials": trials, "seed": 31, "methods": "random,smart,proposed",
                              "sweep": {"key": key, "values": values}, **extra})
    return {v: {r["method"]: r["mean_min_se"] for r in rows} for v, rows in bench.run_campaign(conf, tmp_path).items()}


def test_trend_in_users_per_cell(tmp_path):
    ks = [2, 4, 6]
    means = _sweep(tmp_path, "users_per_cell", ks, K_SWEEP_TRIALS, random_starts=1)
    decreasing = all(means[a][m] > means[b][m] for a, b in zip(ks, ks[1:]) for m in ("random", "smart", "proposed"))
    ratio = [means[k]["proposed"] / means[k]["random"] for k in ks]
    growing = all(b > a for a, b in zip(ratio, ratio[1:]))
    table = ", ".join(f"K={k}: " + "/".join(f"{means[k][m]:.3f}" for m in ("random", "smart", "proposed")) for k in ks)
    record("trend in users per cell", decreasing and growing,
           f"{K_SWEEP_TRIALS} trials, mean min-SE random/smart/proposed {table}; "
           f"proposed/random ratios {', '.join(f'{r:.2f}' for r in ratio)} (need strictly decreasing means, "
           f"increasing ratio)")
    assert decreasing
    assert growing


def test_trend_in_antennas(tmp_path):
    ms = [100, 300, 900]
    means = _sweep(tmp_path / "all", "antennas", ms, M_SWEEP_TRIALS, users_per_cell=4, random_starts=1)
    increasing = all(means[b][m] > means[a][m] for a, b in zip(ms, ms[1:]) for m in ("random", "smart", "proposed"))
    conf = bench.load_config({"trials": RANDOM_LEVEL_TRIALS, "seed": 32, "methods": "random", "users_per_cell": 4,
                              "sweep": {"key": "antennas", "values": sorted(RANDOM_REFERENCE)}})
    level = {v: rows[0]["mean_min_se"] for v, rows in bench.run_campaign(conf, tmp_path / "random").items()}
    within = all(abs(level[m] - ref) <= 0.5 * ref for m, ref in RANDOM_REFERENCE.items())
    table = ", ".join(f"M={m}: " + "/".join(f"{means[m][k]:.3f}" for k in ("random", "smart", "proposed")) for m in ms)
    levels = ", ".join(f"M={m}: {level[m]:.3f} vs {ref}" for m, ref in RANDOM_REFERENCE.items())
    record("trend in antennas", increasing and within,
           f"{M_SWEEP_TRIALS} trials at K=4, mean min-SE random/smart/proposed {table}; "
           f"random level over {RANDOM_LEVEL_TRIALS} trials {levels} (need within 50%)")
    assert increasing
    assert within


# ---------------------------------------------------------------------------
# reproducibility


def test_cli_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "conf.json"
    cfg.write_text('{"trials": 4, "antennas": 100, "random_starts": 1}')
    outs = []
    for name, workers in (("a", "1"), ("b", "2")):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "pilotopt.cli", "run", "--config", str(cfg), "--out", str(out),
                        "--seed", "9", "--workers", workers], check=True, capture_output=True)
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    same = names and all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    record("byte-identical reruns", bool(same), f"{len(names)} CSV files compared across 1 and 2 workers")
    assert same
