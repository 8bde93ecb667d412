"""Pilot allocations over a fixed orthonormal basis.

Every pilot is a nonnegative power split over ``tau_p`` orthonormal basis
vectors, so an allocation is fully described by an ``(L, K, tau_p)`` array
of per-basis powers. Classic orthogonal pilot assignment (one basis vector
per user, optionally with per-user power) is the special case with a single
nonzero per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgen import SystemConfig

BUDGET_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class PilotAllocation:
    power_split: np.ndarray  # (L, K, tau_p) Watts

    def __post_init__(self):
        arr = np.array(self.power_split, dtype=float)
        if arr.ndim != 3:
            raise ValueError("power_split must have shape (L, K, tau_p)")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("pilot powers must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "power_split", arr)

    @property
    def shape(self):
        return self.power_split.shape

    @property
    def total_power(self) -> np.ndarray:
        """Pilot energy ``||psi_{l,k}||^2`` per user, shape (L, K)."""
        return self.power_split.sum(axis=-1)

    @property
    def amplitudes(self) -> np.ndarray:
        """Elementwise square roots, i.e. the columns of ``P_l`` stacked per cell."""
        return np.sqrt(self.power_split)

    def pilot_matrix(self, basis: np.ndarray | None = None) -> np.ndarray:
        """Pilot sequences ``Psi_l = Phi P_l`` as an ``(L, tau_p, K)`` array."""
        tau_p = self.shape[-1]
        phi = np.eye(tau_p) if basis is None else np.asarray(basis)
        return np.einsum("ab,lkb->lak", phi, self.amplitudes)

    def overlap_matrix(self) -> np.ndarray:
        """Squared pilot inner products between all users, shape (LK, LK)."""
        s = self.amplitudes.reshape(-1, self.shape[-1])
        return (s @ s.T) ** 2


@dataclass(frozen=True, eq=False)
class PilotAssignment:
    """Orthogonal pilot indices per user with a scalar pilot power each."""

    perm: np.ndarray  # (L, K) int, 0-based pilot index
    scalar_power: np.ndarray  # (L, K) Watts

    def __post_init__(self):
        perm = np.array(self.perm, dtype=int)
        power = np.broadcast_to(np.asarray(self.scalar_power, dtype=float), perm.shape).copy()
        if perm.ndim != 2:
            raise ValueError("perm must have shape (L, K)")
        if np.any(power < 0):
            raise ValueError("scalar_power must be nonnegative")
        perm.setflags(write=False)
        power.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "scalar_power", power)

    def check(self, cfg: SystemConfig) -> None:
        if self.perm.shape != (cfg.L, cfg.K):
            raise ValueError(f"perm shape {self.perm.shape} does not match (L, K)=({cfg.L}, {cfg.K})")
        if np.any(self.perm < 0) or np.any(self.perm >= cfg.tau_p):
            raise ValueError("pilot index out of range")
        if cfg.tau_p >= cfg.K:
            for l in range(cfg.L):
                if len(set(self.perm[l].tolist())) != cfg.K:
                    raise ValueError(f"pilot reused inside cell {l}")
        limit = cfg.tau_p * cfg.p_max * (1 + BUDGET_RTOL)
        if np.any(self.scalar_power > limit):
            raise ValueError("scalar_power exceeds tau_p * p_max")


def inner_product_sq(a, b) -> float:
    """Squared inner product ``(sum_b sqrt(a_b b_b))^2`` of two pilots given as power splits."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("power rows must have the same length")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("power rows must be nonnegative")
    return float(np.sum(np.sqrt(a * b)) ** 2)


def from_assignment(assign: PilotAssignment, cfg: SystemConfig) -> PilotAllocation:
    assign.check(cfg)
    split = np.zeros((cfg.L, cfg.K, cfg.tau_p))
    l_idx, k_idx = np.indices((cfg.L, cfg.K))
    split[l_idx, k_idx, assign.perm] = assign.scalar_power
    return PilotAllocation(split)


def equal_power_assignment(perm, cfg: SystemConfig, power: float = 0.2) -> PilotAllocation:
    """Orthogonal pilots with the same power for everybody."""
    return from_assignment(PilotAssignment(perm, np.full((cfg.L, cfg.K), power)), cfg)


@dataclass(frozen=True)
class BudgetViolation:
    cell: int
    user: int
    kind: str  # "budget" or "negative"
    slack: float  # allowed minus used; negative means violated


def validate(alloc: PilotAllocation | np.ndarray, cfg: SystemConfig) -> list[BudgetViolation]:
    """List every user breaking the average pilot-power budget or nonnegativity.

    An empty list means the allocation is feasible. Works on raw arrays too so
    candidate allocations can be checked before wrapping them.
    """
    split = alloc.power_split if isinstance(alloc, PilotAllocation) else np.asarray(alloc, dtype=float)
    if split.shape != (cfg.L, cfg.K, cfg.tau_p):
        raise ValueError(f"allocation shape {split.shape} does not match config")
    out = []
    avg = split.sum(axis=-1) / cfg.tau_p
    slack = cfg.p_max - avg
    for l, k in zip(*np.nonzero(slack < -BUDGET_RTOL * cfg.p_max)):
        out.append(BudgetViolation(int(l), int(k), "budget", float(slack[l, k])))
    neg = split.min(axis=-1)
    for l, k in zip(*np.nonzero(neg < 0)):
        out.append(BudgetViolation(int(l), int(k), "negative", float(neg[l, k])))
    return out
