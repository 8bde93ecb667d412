"""Closed-form estimation quality, SINR and SE under MR detection.

All evaluations divide the large-scale gains by the noise power first and
then use unit noise; the SINR expression is invariant under a common
scaling of gains and noise, and this keeps magnitudes near one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgen import NetworkRealization, SystemConfig
from .pilot import PilotAllocation


class DegenerateAllocationError(ValueError):
    """A user has zero total pilot power, so its channel cannot be estimated."""

    def __init__(self, cell: int, user: int):
        super().__init__(f"user ({cell}, {user}) has zero pilot power")
        self.cell = cell
        self.user = user


@dataclass(frozen=True, eq=False)
class Weights:
    alpha: np.ndarray  # (L, K, tau_p)

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if np.any(a < 0):
            raise ValueError("weights must be nonnegative")
        sums = a.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > 1e-12 * a.shape[-1]):
            raise ValueError("weights must sum to one over the basis index")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True, eq=False)
class SinrReport:
    gamma: np.ndarray  # (L, K), in the caller's gain units
    sinr: np.ndarray  # (L, K)
    se: np.ndarray  # (L, K) bit/s/Hz
    min_se: float
    prelog: float

    @property
    def argmin(self) -> tuple[int, int]:
        l, k = np.unravel_index(np.argmin(self.se), self.se.shape)
        return int(l), int(k)


class _Terms:
    """Per-allocation cache of the pieces shared by every user's SINR."""

    def __init__(self, alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig):
        split = alloc.power_split
        if split.shape != (cfg.L, cfg.K, cfg.tau_p):
            raise ValueError(f"allocation shape {split.shape} does not match config")
        L, K = cfg.L, cfg.K
        self.L, self.K = L, K
        self.beta = net.beta.reshape(L, L * K) / cfg.noise_power  # BS l -> user v
        self.p = cfg.data_power.reshape(-1)
        self.tot = split.reshape(L * K, -1).sum(axis=-1)
        zero = np.nonzero(self.tot <= 0)[0]
        if zero.size:
            raise DegenerateAllocationError(*divmod(int(zero[0]), K))
        self.overlap = alloc.overlap_matrix()  # (v, u)
        self.home = np.repeat(np.arange(L), K)  # home cell of user u
        beta_home = self.beta[self.home]  # (u, v): gain from user v at u's BS
        self.beta_own = beta_home[np.arange(L * K), np.arange(L * K)]
        # pilot-domain interference plus noise seen when estimating u
        self.est_den = np.einsum("uv,vu->u", beta_home, self.overlap) + self.tot
        self.received = (self.beta @ self.p + 1.0)[self.home]
        coherent = beta_home**2 * self.p[None, :] * self.overlap.T
        coherent[np.arange(L * K), np.arange(L * K)] = 0.0
        self.coherent = cfg.M * coherent.sum(axis=1)
        self.M = cfg.M

    def gamma(self) -> np.ndarray:
        return self.beta_own**2 * self.tot**2 / self.est_den

    def sinr(self, numerator_power_sq: np.ndarray) -> np.ndarray:
        num = self.M * self.beta_own**2 * self.p * numerator_power_sq
        return num / (self.est_den * self.received + self.coherent)


def _user_index(cfg: SystemConfig, l: int, k: int) -> int:
    if not (0 <= l < cfg.L and 0 <= k < cfg.K):
        raise IndexError(f"user ({l}, {k}) out of range")
    return l * cfg.K + k


def estimate_variance(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int, k: int) -> float:
    """Per-antenna variance of the MMSE estimate of user (l, k)'s channel at its own BS."""
    terms = _Terms(alloc, net, cfg)
    return float(terms.gamma()[_user_index(cfg, l, k)] * cfg.noise_power)


def sinr_all(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig) -> np.ndarray:
    terms = _Terms(alloc, net, cfg)
    return terms.sinr(terms.tot**2).reshape(cfg.L, cfg.K)


def sinr_closed_form(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int, k: int) -> float:
    return float(sinr_all(alloc, net, cfg)[l, k])


def se(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig) -> SinrReport:
    terms = _Terms(alloc, net, cfg)
    gamma = (terms.gamma() * cfg.noise_power).reshape(cfg.L, cfg.K)
    sinr = terms.sinr(terms.tot**2).reshape(cfg.L, cfg.K)
    rates = cfg.prelog * np.log2(1.0 + sinr)
    return SinrReport(gamma=gamma, sinr=sinr, se=rates, min_se=float(rates.min()), prelog=cfg.prelog)


def amgm_power_bound(split: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Monomial lower bound ``prod_b (x_b / a_b)^a_b`` on ``sum_b x_b`` along the last axis.

    Uses 0^0 = 1 where ``a_b = 0``; raises if ``a_b > 0`` on a zero power.
    """
    split = np.asarray(split, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    active = alpha > 0
    if np.any(active & (split <= 0)):
        raise ValueError("positive weight on a zero pilot power")
    logs = np.where(active, alpha * (np.log(np.where(active, split, 1.0)) - np.log(np.where(active, alpha, 1.0))), 0.0)
    return np.exp(logs.sum(axis=-1))


def sinr_approx_all(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, w: Weights) -> np.ndarray:
    if w.alpha.shape != alloc.shape:
        raise ValueError("weights and allocation shapes differ")
    terms = _Terms(alloc, net, cfg)
    bound = amgm_power_bound(alloc.power_split, w.alpha).reshape(-1)
    return terms.sinr(bound**2).reshape(cfg.L, cfg.K)


def sinr_approx(
    alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, w: Weights, l: int, k: int
) -> float:
    """SINR with the total pilot power in the numerator replaced by its AM-GM monomial bound."""
    return float(sinr_approx_all(alloc, net, cfg, w)[l, k])
