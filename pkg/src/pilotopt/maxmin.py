"""Successive geometric-programming approximation for max-min pilot design.

Each iteration freezes AM-GM weights at the current pilot powers, solves
the resulting geometric program and adopts its solution. Because the bound
is tight at the expansion point, the previous iterate stays feasible and
the achieved objective never decreases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .closedform import SinrReport, Weights, se, sinr_all
from .netgen import NetworkRealization, SystemConfig
from .pilot import BUDGET_RTOL, PilotAllocation, validate

log = logging.getLogger(__name__)

MAX_ITERS = 15
STOP_TOL = 1e-4
GP_TOL = 1e-7


@dataclass
class IterationTrace:
    xi_per_iter: list = field(default_factory=list)
    weight_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_alloc: PilotAllocation | None = None
    report: SinrReport | None = None
    exact_min_sinr: list = field(default_factory=list)
    error: str | None = None

    @property
    def min_se(self) -> float:
        return self.report.min_se if self.report is not None else 0.0


def _floor(split: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    return np.maximum(split, gp.power_floor(cfg))


def init_powers(cfg: SystemConfig, net: NetworkRealization | None = None, mode: str = "uniform-random",
                seed=None, warm_start: PilotAllocation | None = None) -> PilotAllocation:
    """Starting pilot powers for the successive approximation.

    ``uniform-random`` draws every entry uniformly on ``[eps, p_max]`` and
    rescales users that exceed their budget; ``baseline-warm-start`` copies
    ``warm_start`` with the power floor applied.
    """
    eps = gp.power_floor(cfg)
    if mode == "uniform-random":
        rng = np.random.default_rng(seed)
        pmax = cfg.p_max[:, :, None]
        split = eps + rng.uniform(0.0, 1.0, size=(cfg.L, cfg.K, cfg.tau_p)) * (pmax - eps)
        avg = split.mean(axis=-1, keepdims=True)
        split = np.where(avg > pmax, split * pmax / avg, split)
        return PilotAllocation(split)
    if mode == "baseline-warm-start":
        if warm_start is None:
            raise ValueError("warm start needs an allocation")
        if validate(warm_start, cfg):
            raise ValueError("warm-start allocation violates the pilot budget")
        split = _floor(warm_start.power_split, cfg)
        # flooring can push a full-budget user a hair over; pull it back
        avg = split.mean(axis=-1, keepdims=True)
        pmax = cfg.p_max[:, :, None]
        split = np.where(avg > pmax, split * pmax / avg, split)
        return PilotAllocation(split)
    raise ValueError(f"unknown init mode {mode!r}")


def update_weights(alloc: PilotAllocation, support: np.ndarray | None = None) -> Weights:
    """Share of each basis vector in a user's total pilot power."""
    split = alloc.power_split
    if support is not None:
        split = np.where(support, split, 0.0)
    tot = split.sum(axis=-1, keepdims=True)
    if np.any(tot <= 0):
        l, k = np.argwhere(tot[..., 0] <= 0)[0]
        raise ValueError(f"user ({l}, {k}) has an all-zero power row")
    return Weights(split / tot)


def _start_point(prob: gp.GpProblem, split: np.ndarray, net, cfg) -> np.ndarray:
    """Strictly feasible GP start: slightly shrunk powers and half the achievable xi."""
    shrunk = 0.99 * split
    sinr = sinr_all(PilotAllocation(shrunk), net, cfg)
    x = np.empty(len(prob.variables))
    for i, name in enumerate(prob.variables):
        x[i] = 0.5 * max(sinr.min(), 1e-300) if name == gp.XI else shrunk[name[1], name[2], name[3]]
    return np.clip(x, prob.lower, prob.upper)


def run(cfg: SystemConfig, net: NetworkRealization, init: PilotAllocation, max_iters: int = MAX_ITERS,
        stop_tol: float = STOP_TOL, support: np.ndarray | None = None, keep_weights: bool = False,
        gp_tol: float = GP_TOL) -> IterationTrace:
    """Iterate weight update -> GP solve until ``xi`` stalls or ``max_iters`` is hit.

    ``support`` restricts every user to a fixed set of basis vectors (the
    rest stay exactly zero). The returned trace carries the last good
    allocation with tiny powers snapped to zero, and its SE evaluated with
    the exact SINR expression.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if validate(init, cfg):
        raise ValueError("initial allocation violates the pilot budget")
    trace = IterationTrace()
    split = _floor(init.power_split, cfg)
    if support is not None:
        split = np.where(support, split, 0.0)
    for it in range(max_iters):
        weights = update_weights(PilotAllocation(split), support)
        if keep_weights:
            trace.weight_history.append(weights)
        prob = gp.build_maxmin_gp(split, net, cfg, weights, support)
        sol = gp.solve(prob, tol=gp_tol, x0=_start_point(prob, split, net, cfg))
        if not sol.ok:
            trace.error = f"GP solver returned {sol.status} at iteration {it + 1}"
            log.warning(trace.error)
            break
        split = gp.split_from_values(prob, sol.values, cfg, snap=False)
        # solver round-off may leave a user a hair above budget
        avg = split.mean(axis=-1, keepdims=True)
        pmax = cfg.p_max[:, :, None]
        split = np.where(avg > pmax, split * pmax / avg, split)
        trace.xi_per_iter.append(sol.xi)
        trace.exact_min_sinr.append(float(sinr_all(PilotAllocation(split), net, cfg).min()))
        trace.iterations = it + 1
        if it > 0:
            prev = trace.xi_per_iter[-2]
            if abs(sol.xi - prev) <= stop_tol * max(abs(prev), 1e-300):
                trace.converged = True
                break
    final = split.copy()
    final[final < 10 * gp.power_floor(cfg)] = 0.0
    if np.any(final.sum(axis=-1) <= 0):
        final = split
    trace.final_alloc = PilotAllocation(final)
    trace.report = se(trace.final_alloc, net, cfg)
    assert not validate(trace.final_alloc, cfg), "iterate left the feasible set"
    return trace


def multistart(cfg: SystemConfig, net: NetworkRealization, n_random: int = 5,
               warm_starts: list[PilotAllocation] = (), seed=None, **kwargs) -> tuple[IterationTrace, list]:
    """Best of several runs by exact min-SE: ``n_random`` random starts plus warm starts."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    traces = [run(cfg, net, init_powers(cfg, net, "uniform-random", child), **kwargs)
              for child in ss.spawn(n_random)]
    traces += [run(cfg, net, init_powers(cfg, net, "baseline-warm-start", warm_start=w), **kwargs)
               for w in warm_starts]
    best = max(traces, key=lambda t: t.min_se)
    return best, traces


__all__ = ["IterationTrace", "init_powers", "update_weights", "run", "multistart", "BUDGET_RTOL"]
