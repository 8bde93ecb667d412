import numpy as np
import pytest
from scipy.optimize import minimize

from pilotopt import gp
from pilotopt.closedform import Weights, sinr_all, sinr_approx_all
from pilotopt.netgen import SystemConfig, generate_network, network_from_beta
from pilotopt.pilot import PilotAllocation

X, A, B = gp.Monomial.var("x"), gp.Monomial.var("a"), gp.Monomial.var("b")


def test_monomial_algebra():
    m = 3.0 * X**2 / A
    assert m({"x": 2.0, "a": 4.0}) == pytest.approx(3.0)
    p = m + A + 1.0
    assert len(p) == 3
    assert p({"x": 2.0, "a": 4.0}) == pytest.approx(8.0)
    assert (p * X)({"x": 1.0, "a": 1.0}) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        gp.Monomial(-1.0)
    with pytest.raises(TypeError):
        p / p


def test_simple_monomial_gp():
    # maximize x with x <= a and a <= 2
    prob = gp.GpProblem.from_posynomials("x", [X / A, A / 2.0], {"x": (1e-3, 10.0), "a": (1e-3, 10.0)})
    sol = gp.solve(prob)
    assert sol.ok and sol.xi == pytest.approx(2.0, rel=1e-7)


def test_harmonic_sum_gp():
    # x (1/a + 1/b) <= 1 with a + b <= 16 peaks at a = b = 8, x = 4
    prob = gp.GpProblem.from_posynomials(
        "x", [X / A + X / B, (A + B) / 16.0], {"x": (1e-3, 100.0), "a": (1e-3, 100.0), "b": (1e-3, 100.0)})
    sol = gp.solve(prob, tol=1e-10)
    assert sol.ok and sol.xi == pytest.approx(4.0, rel=1e-8)
    assert sol.values[prob.index("a")] == pytest.approx(8.0, rel=1e-4)
    assert sol.gap <= 1e-10 and sol.kkt_residual == 0.0


def test_infeasible_detected():
    prob = gp.GpProblem.from_posynomials("x", [X, 2.0 / X], {"x": (1e-3, 10.0)})
    sol = gp.solve(prob)
    assert sol.status == "infeasible" and not sol.ok


def test_missing_bounds_rejected():
    with pytest.raises(ValueError):
        gp.GpProblem.from_posynomials("x", [X / A], {"x": (1e-3, 1.0)})


def random_posynomial(rng, names, n_terms):
    terms = []
    for _ in range(n_terms):
        exps = {v: float(rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])) for v in names}
        terms.append(gp.Monomial(float(rng.uniform(0.1, 2.0)), exps))
    return gp.Posynomial(terms)


def test_amgm_bound_property():
    rng = np.random.default_rng(0)
    names = ["a", "b", "c"]
    for _ in range(20):
        p = random_posynomial(rng, names, 4)
        anchor = dict(zip(names, rng.uniform(0.1, 5.0, size=3)))
        m = gp.amgm_lower_bound(p, anchor)
        assert m(anchor) == pytest.approx(p(anchor), rel=1e-12)
        for _ in range(500):
            probe = dict(zip(names, np.exp(rng.uniform(-4, 4, size=3))))
            assert m(probe) <= p(probe) * (1 + 1e-12)


def test_amgm_bound_rejects_bad_anchor():
    with pytest.raises(ValueError):
        gp.amgm_lower_bound(A + B, {"a": 0.0, "b": 1.0})


def _oracle(constraints, names, lo, hi, rng, starts=30):
    """Maximize log x over the log box with SLSQP from many starts."""
    def cons(y):
        vals = dict(zip(names, np.exp(y)))
        return np.array([-np.log(c(vals)) for c in constraints])

    best = -np.inf
    for _ in range(starts):
        y0 = rng.uniform(np.log(lo), np.log(hi))
        res = minimize(lambda y: -y[0], y0, method="SLSQP", bounds=list(zip(np.log(lo), np.log(hi))),
                       constraints=[{"type": "ineq", "fun": cons}], options={"ftol": 1e-12, "maxiter": 500})
        if res.success and np.all(cons(res.x) >= -1e-9):
            best = max(best, res.x[0])
    return np.exp(best)


@pytest.mark.parametrize("seed", range(6))
def test_random_small_gp_matches_independent_optimizer(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    names = [f"v{i}" for i in range(n)]
    cons = []
    for _ in range(int(rng.integers(1, 4))):
        # the constant term keeps x off its upper bound
        cons.append(X * (random_posynomial(rng, names, int(rng.integers(1, 4))) + 1e-3))
    cons.append(random_posynomial(rng, names, 3))
    names = ["x"] + names
    bounds = {v: (1e-2, 1e2) for v in names}
    bounds["x"] = (1e-2, 1e4)
    prob = gp.GpProblem.from_posynomials("x", cons, bounds)
    sol = gp.solve(prob, tol=1e-9)
    assert sol.ok
    lo, hi = np.full(len(names), 1e-2), np.full(len(names), 1e2)
    hi[0] = 1e4
    ref = _oracle(cons, names, lo, hi, rng)
    assert sol.xi < 0.99 * hi[0]
    assert sol.xi == pytest.approx(ref, rel=1e-3)


@pytest.fixture(scope="module")
def default_case():
    cfg = SystemConfig.standard(K=2, tau_p=2)
    net = generate_network(cfg, 3)
    split = np.random.default_rng(1).uniform(0.02, 0.2, size=(4, 2, 2))
    w = Weights(split / split.sum(axis=-1, keepdims=True))
    return cfg, net, split, w


def test_builder_counts_single_user():
    cfg = SystemConfig(L=1, K=1, M=10, tau_p=1, tau_c=10, noise_power=1.0, p_max=1.0, data_power=1.0)
    prob = gp.build_maxmin_gp(np.ones((1, 1, 1)), network_from_beta(np.ones((1, 1, 1))), cfg, np.ones((1, 1, 1)))
    assert len(prob.variables) == 2 and prob.n_constraints == 2


def test_builder_counts_default_network(default_case):
    cfg, net, split, w = default_case
    prob = gp.build_maxmin_gp(split, net, cfg, w)
    assert len(prob.variables) == 17 and prob.n_constraints == 16
    assert prob.labels[0] == ("sinr", 0, 0) and prob.labels[8] == ("budget", 0, 0)


def _point(prob, split, xi):
    return np.array([xi if v == gp.XI else split[v[1], v[2], v[3]] for v in prob.variables])


def test_constraints_equal_inverse_approximate_sinr(default_case):
    cfg, net, _, w = default_case
    prob = gp.build_maxmin_gp(default_case[2], net, cfg, w)
    probe = np.random.default_rng(2).uniform(0.01, 0.3, size=(4, 2, 2))
    vals = prob.constraint_values(_point(prob, probe, 1.0))
    approx = sinr_approx_all(PilotAllocation(probe), net, cfg, w)
    np.testing.assert_allclose(vals[:8], 1.0 / approx.ravel(), rtol=1e-10)
    np.testing.assert_allclose(vals[8:], probe.sum(axis=-1).ravel() / (2 * 0.2), rtol=1e-12)


def test_constraints_are_log_convex(default_case):
    cfg, net, split, w = default_case
    prob = gp.build_maxmin_gp(split, net, cfg, w)
    rng = np.random.default_rng(3)
    n = len(prob.variables)
    for _ in range(200):
        y1, y2 = rng.normal(-2, 2, size=(2, n))
        f = lambda y: np.log(prob.constraint_values(np.exp(y)))
        assert np.all(f(0.5 * (y1 + y2)) <= 0.5 * (f(y1) + f(y2)) + 1e-9)


def test_solution_brackets_exact_sinr(default_case):
    cfg, net, split, w = default_case
    prob = gp.build_maxmin_gp(split, net, cfg, w)
    sol = gp.solve(prob, tol=1e-9)
    assert sol.ok
    new = gp.split_from_values(prob, sol.values, cfg, snap=False)
    # anchor is feasible, and the approximation lower-bounds the true SINR
    assert sol.xi >= sinr_all(PilotAllocation(split), net, cfg).min() * (1 - 1e-8)
    assert sinr_all(PilotAllocation(new), net, cfg).min() >= sol.xi * (1 - 1e-6)
    assert np.all(new.sum(axis=-1) <= 0.4 * (1 + 1e-7))


def test_dump_lists_every_term(default_case):
    cfg, net, split, w = default_case
    prob = gp.build_maxmin_gp(split, net, cfg, w)
    text = prob.dump()
    lines = text.splitlines()
    assert lines[0] == "# maximize xi"
    assert sum(line.startswith("constraint") for line in lines) == prob.n_constraints
    assert sum(line.startswith("  ") for line in lines) == prob.n_terms
    assert sum(line.startswith("bound") for line in lines) == len(prob.variables)


def test_support_removes_variables(default_case):
    cfg, net, _, _ = default_case
    support = np.zeros((4, 2, 2), dtype=bool)
    support[:, 0, 0] = support[:, 1, 1] = True
    anchor = support * 0.4
    prob = gp.build_maxmin_gp(anchor, net, cfg, support.astype(float), support)
    assert len(prob.variables) == 9
    sol = gp.solve(prob)
    split = gp.split_from_values(prob, sol.values, cfg)
    assert np.all(split[~support] == 0)
    with pytest.raises(ValueError):
        gp.build_maxmin_gp(anchor, net, cfg, np.full((4, 2, 2), 0.5), support)


def test_split_snap(default_case):
    cfg, net, split, w = default_case
    prob = gp.build_maxmin_gp(split, net, cfg, w)
    vals = _point(prob, split, 1.0)
    vals[1] = 5 * gp.power_floor(cfg)
    assert gp.split_from_values(prob, vals, cfg)[0, 0, 0] == 0.0
    assert gp.split_from_values(prob, vals, cfg, snap=False)[0, 0, 0] > 0.0


@pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
def test_sinr_upper_bound_holds_for_weak_and_strong_users(scale):
    cfg = SystemConfig(L=1, K=1, M=100, tau_p=2, tau_c=10, noise_power=1.0, p_max=0.8, data_power=0.5)
    net = network_from_beta(np.full((1, 1, 1), scale))
    best = sinr_all(PilotAllocation(np.full((1, 1, 2), 0.8)), net, cfg).max()
    assert best <= gp.sinr_upper_bound(net, cfg)
