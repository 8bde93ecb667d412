"""Reference pilot schemes: random reuse, interference-aware reuse and exhaustive search.

All three use orthogonal pilots (one basis vector per user). The exhaustive
search additionally optimizes the scalar pilot powers of every candidate
assignment with an exact geometric program.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import gp
from .closedform import Weights, se, sinr_all
from .netgen import NetworkRealization, SystemConfig
from .pilot import PilotAllocation, PilotAssignment, from_assignment

BASELINE_POWER = 0.2  # W
ENUMERATION_CAP = 10_000
BRUTE_GP_TOL = 1e-6


def _check_reuse(cfg: SystemConfig) -> None:
    if cfg.tau_p < cfg.K:
        raise ValueError(f"tau_p={cfg.tau_p} < K={cfg.K}: orthogonal pilots inside a cell need tau_p >= K")


def random_assignment(cfg: SystemConfig, seed=None, power: float = BASELINE_POWER) -> PilotAssignment:
    """Independent uniform pilot permutation per cell, equal pilot power."""
    _check_reuse(cfg)
    rng = np.random.default_rng(seed)
    perm = np.stack([rng.permutation(cfg.tau_p)[: cfg.K] for _ in range(cfg.L)])
    return PilotAssignment(perm, np.full((cfg.L, cfg.K), power))


def contamination_cost(net: NetworkRealization, l: int, k: int, i: int, t: int) -> float:
    """Mutual pilot-contamination pressure between users (l, k) and (i, t) sharing a pilot.

    Product of the two cross gains ``beta[l, i, t] * beta[i, l, k]``: how
    strongly each user leaks into the other's BS. Symmetric in the two users.
    """
    return float(net.beta[l, i, t] * net.beta[i, l, k])


def greedy_assignment(cfg: SystemConfig, net: NetworkRealization) -> np.ndarray:
    """Sequential pilot choice minimizing summed :func:`contamination_cost`.

    Cell 0 keeps the identity assignment (pilot labels are arbitrary). In
    every further cell, users are served in descending order of their home
    gain, each taking the free pilot with the smallest summed cost against
    users of earlier cells already on that pilot.
    """
    _check_reuse(cfg)
    L, K, tau_p = cfg.L, cfg.K, cfg.tau_p
    perm = np.zeros((L, K), dtype=int)
    perm[0] = np.arange(K)
    home = net.home_beta
    for l in range(1, L):
        free = list(range(tau_p))
        for k in np.argsort(-home[l], kind="stable"):
            costs = [
                sum(contamination_cost(net, l, int(k), i, t) for i in range(l) for t in range(K) if perm[i, t] == pilot)
                for pilot in free
            ]
            best = free[int(np.argmin(costs))]
            perm[l, k] = best
            free.remove(best)
    return perm


def _leximin_key(cfg: SystemConfig, net: NetworkRealization, perm: np.ndarray, power: float) -> tuple:
    alloc = from_assignment(PilotAssignment(perm, np.full((cfg.L, cfg.K), power)), cfg)
    return tuple(np.sort(sinr_all(alloc, net, cfg).ravel()))


def refine_assignment(cfg: SystemConfig, net: NetworkRealization, perm: np.ndarray,
                      power: float = BASELINE_POWER, max_sweeps: int = 50) -> np.ndarray:
    """Pairwise pilot swaps inside cells while the sorted equal-power SINR vector improves.

    Comparison is leximin: the weakest user first, then the next weakest.
    Cell 0 is never touched. With ``tau_p > K`` a user may also move to an
    unused pilot.
    """
    perm = np.array(perm, dtype=int)
    current = _leximin_key(cfg, net, perm, power)
    for _ in range(max_sweeps):
        improved = False
        for l in range(1, cfg.L):
            for cand in _cell_moves(perm, l, cfg.tau_p):
                key = _leximin_key(cfg, net, cand, power)
                if key > current:
                    perm, current, improved = cand, key, True
        if not improved:
            break
    return perm


def _cell_moves(perm: np.ndarray, l: int, tau_p: int):
    """Assignments one swap (or one move to a free pilot) away from ``perm`` in cell ``l``.

    Every candidate is built from the ``perm`` passed in, so each stays a
    valid reuse pattern even if the caller accepts one midway.
    """
    K = perm.shape[1]
    for a, b in itertools.combinations(range(K), 2):
        cand = perm.copy()
        cand[l, [a, b]] = cand[l, [b, a]]
        yield cand
    for a in range(K):
        for q in sorted(set(range(tau_p)) - set(perm[l].tolist())):
            cand = perm.copy()
            cand[l, a] = q
            yield cand


def smart_assignment(cfg: SystemConfig, net: NetworkRealization, power: float = BASELINE_POWER,
                     refine: bool = True) -> PilotAssignment:
    """Interference-aware orthogonal pilot reuse from large-scale fading only.

    Starts from :func:`greedy_assignment` and, unless ``refine`` is off,
    polishes it with :func:`refine_assignment`. Deterministic in ``(cfg, net)``.
    """
    perm = greedy_assignment(cfg, net)
    if refine:
        perm = refine_assignment(cfg, net, perm, power)
    return PilotAssignment(perm, np.full((cfg.L, cfg.K), power))


def assignment_cost(net: NetworkRealization, perm: np.ndarray) -> float:
    """Total pairwise contamination cost of an assignment, counted once per pair."""
    L, K = perm.shape
    total = 0.0
    for l, i in itertools.combinations(range(L), 2):
        for k in range(K):
            for t in range(K):
                if perm[l, k] == perm[i, t]:
                    total += contamination_cost(net, l, k, i, t)
    return total


def optimal_assignment_powers(cfg: SystemConfig, net: NetworkRealization, perm: np.ndarray,
                              tol: float = BRUTE_GP_TOL) -> tuple[PilotAllocation, float]:
    """Max-min scalar pilot powers for a fixed orthogonal assignment.

    With a single basis vector per user the SINR numerator is already a
    monomial, so one geometric program gives the exact optimum.
    """
    perm = np.asarray(perm, dtype=int)
    support = np.zeros((cfg.L, cfg.K, cfg.tau_p), dtype=bool)
    l_idx, k_idx = np.indices((cfg.L, cfg.K))
    support[l_idx, k_idx, perm] = True
    anchor = support * cfg.p_max[:, :, None] * cfg.tau_p
    prob = gp.build_maxmin_gp(anchor, net, cfg, Weights(support.astype(float)), support)
    sol = gp.solve(prob, tol=tol)
    if not sol.ok:
        raise RuntimeError(f"power GP failed for assignment {perm.tolist()}: {sol.status}")
    split = gp.split_from_values(prob, sol.values, cfg, snap=False)
    avg = split.mean(axis=-1, keepdims=True)
    pmax = cfg.p_max[:, :, None]
    split = np.where(avg > pmax, split * pmax / avg, split)
    alloc = PilotAllocation(split)
    return alloc, se(alloc, net, cfg).min_se


def enumerate_assignments(cfg: SystemConfig, fix_first: bool = True):
    """Yield every ``(L, K)`` permutation assignment, optionally with cell 0 pinned to identity."""
    cells = [[tuple(range(cfg.K))]] if fix_first else []
    rest = cfg.L - len(cells)
    perms = list(itertools.permutations(range(cfg.tau_p), cfg.K))
    for combo in itertools.product(perms, repeat=rest):
        yield np.array([*cells[0], *combo] if fix_first else list(combo), dtype=int)


def n_assignment_classes(cfg: SystemConfig) -> int:
    return (math.perm(cfg.tau_p, cfg.K)) ** (cfg.L - 1)


@dataclass(frozen=True, eq=False)
class BruteForceResult:
    assignment: PilotAssignment
    alloc: PilotAllocation
    min_se: float
    n_classes: int


def brute_force(cfg: SystemConfig, net: NetworkRealization, cap: int = ENUMERATION_CAP,
                fix_first: bool = True, executor=None) -> BruteForceResult:
    """Exhaustive search over pilot permutations, each with optimal scalar powers.

    ``executor`` (anything with a ``map``) lets the candidate GPs run in
    parallel; ties go to the first candidate in enumeration order.
    """
    if cfg.tau_p != cfg.K:
        raise ValueError("brute force is defined for tau_p == K")
    count = n_assignment_classes(cfg) * (1 if fix_first else math.factorial(cfg.K))
    if count > cap:
        raise ValueError(f"{count} assignments exceed the enumeration cap {cap}")
    perms = list(enumerate_assignments(cfg, fix_first))
    mapper = map if executor is None else executor.map
    results = list(mapper(functools.partial(optimal_assignment_powers, cfg, net), perms))
    best = int(np.argmax([r[1] for r in results]))
    alloc, value = results[best]
    power = alloc.total_power
    return BruteForceResult(PilotAssignment(perms[best], power), alloc, value, len(perms))
