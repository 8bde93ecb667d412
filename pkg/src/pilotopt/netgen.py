"""Multi-cell network realizations on a wrapped-around square grid.

A realization holds user positions, minimum-image distances to every BS,
shadow fading and the resulting large-scale fading coefficients. Arrays
indexed by (BS, cell, user) use the layout ``beta[l, i, t]``: the gain
between BS ``l`` and user ``t`` of cell ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_SHADOW_REDRAWS = 1000


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def dbm_to_watt(value_dbm):
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Global constants of the uplink system.

    Powers are in Watts on a linear scale. ``p_max`` and ``data_power``
    accept a scalar (same for every user) or an ``(L, K)`` array.
    """

    L: int
    K: int
    M: int
    tau_p: int
    tau_c: int
    noise_power: float
    p_max: np.ndarray
    data_power: np.ndarray
    area_side_km: float = 1.0
    min_distance_km: float = 0.035
    shadow_std_db: float = 7.0

    def __post_init__(self):
        if self.L < 1 or self.K < 1 or self.M < 1:
            raise ValueError("L, K and M must all be >= 1")
        if not 1 <= self.tau_p <= self.tau_c:
            raise ValueError(f"need 1 <= tau_p <= tau_c, got tau_p={self.tau_p}, tau_c={self.tau_c}")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        for name in ("p_max", "data_power"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.L, self.K)).copy()
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.area_side_km <= 0 or self.min_distance_km < 0 or self.shadow_std_db < 0:
            raise ValueError("invalid geometry parameters")

    @classmethod
    def standard(cls, K: int = 2, M: int = 300, tau_p: int | None = None, **overrides) -> "SystemConfig":
        """Four square cells on 1 km^2, tau_c = 200, -96 dBm noise, 200 mW powers."""
        params = dict(
            L=4,
            K=K,
            M=M,
            tau_p=K if tau_p is None else tau_p,
            tau_c=200,
            noise_power=float(dbm_to_watt(-96.0)),
            p_max=0.2,
            data_power=0.2,
        )
        params.update(overrides)
        return cls(**params)

    @property
    def grid_side(self) -> int:
        n = math.isqrt(self.L)
        if n * n != self.L:
            raise ValueError(f"only perfect-square cell counts are supported, got L={self.L}")
        return n

    @property
    def cell_side_km(self) -> float:
        return self.area_side_km / self.grid_side

    @property
    def prelog(self) -> float:
        return 1.0 - self.tau_p / self.tau_c


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    positions: np.ndarray  # (L, K, 2) km
    distances: np.ndarray  # (L, L, K) km, wrap-around
    shadow_db: np.ndarray  # (L, L, K)
    beta: np.ndarray  # (L, L, K) linear
    bs_positions: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("positions", "distances", "shadow_db", "beta", "bs_positions"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def home_beta(self) -> np.ndarray:
        """``beta[l, l, k]`` as an ``(L, K)`` array."""
        L = self.beta.shape[0]
        return self.beta[np.arange(L), np.arange(L), :]


def pathloss_db(d_km):
    """Distance-dependent pathloss gain in dB, ``-148.1 - 37.6 log10(d)``."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = -148.1 - 37.6 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def bs_grid(cfg: SystemConfig) -> np.ndarray:
    """BS coordinates at the centres of the square cells, row-major, shape (L, 2)."""
    n = cfg.grid_side
    side = cfg.cell_side_km
    centres = (np.arange(n) + 0.5) * side
    xx, yy = np.meshgrid(centres, centres, indexing="xy")
    return np.column_stack([xx.ravel(), yy.ravel()])


def wraparound_distance(points: np.ndarray, bs: np.ndarray, area_side: float) -> np.ndarray:
    """Minimum-image distance over the nine translated copies of each BS.

    ``points`` has shape (..., 2), ``bs`` shape (L, 2); the result has shape
    (L, ...). Points are first wrapped into the area.
    """
    points = np.mod(np.asarray(points, dtype=float), area_side)
    shifts = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=float) * area_side
    images = bs[:, None, :] + shifts[None, :, :]  # (L, 9, 2)
    diff = points[None, None, ...] - images.reshape(images.shape[:2] + (1,) * (points.ndim - 1) + (2,))
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    return dist.min(axis=1)


def _draw_positions(cfg: SystemConfig, bs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    side = cfg.cell_side_km
    r_min = cfg.min_distance_km
    # the exclusion disc must leave some room inside the square
    if math.pi * r_min**2 >= side**2:
        raise RuntimeError("exclusion radius leaves no room inside the cell")
    pos = np.empty((cfg.L, cfg.K, 2))
    for l in range(cfg.L):
        lower = bs[l] - side / 2
        for k in range(cfg.K):
            for _ in range(MAX_SHADOW_REDRAWS):
                p = lower + rng.uniform(0.0, side, size=2)
                if np.hypot(*(p - bs[l])) >= r_min:
                    break
            else:
                raise RuntimeError("could not place a user outside the exclusion radius")
            pos[l, k] = p
    return pos


def generate_network(cfg: SystemConfig, seed) -> NetworkRealization:
    """Draw user positions and shadow fading for one network realization.

    Users are uniform in their own square cell outside ``min_distance_km``
    from its BS. A user whose home BS is not its strongest BS gets a fresh
    shadow-fading vector (positions are kept); more than
    ``MAX_SHADOW_REDRAWS`` attempts raise ``RuntimeError``.
    """
    rng = np.random.default_rng(seed)
    bs = bs_grid(cfg)
    pos = _draw_positions(cfg, bs, rng)
    dist = wraparound_distance(pos, bs, cfg.area_side_km)  # (L, L, K)
    pl = pathloss_db(np.maximum(dist, 1e-9))

    shadow = rng.normal(0.0, cfg.shadow_std_db, size=(cfg.L, cfg.L, cfg.K))
    for i in range(cfg.L):
        for t in range(cfg.K):
            for _ in range(MAX_SHADOW_REDRAWS):
                gains = pl[:, i, t] + shadow[:, i, t]
                if np.argmax(gains) == i:
                    break
                shadow[:, i, t] = rng.normal(0.0, cfg.shadow_std_db, size=cfg.L)
            else:
                raise RuntimeError(f"home BS never strongest for user ({i}, {t}) after {MAX_SHADOW_REDRAWS} redraws")

    beta = db_to_linear(pl + shadow)
    return NetworkRealization(positions=pos, distances=dist, shadow_db=shadow, beta=beta, bs_positions=bs)


def network_from_beta(beta) -> NetworkRealization:
    """Wrap a hand-made ``(L, L, K)`` gain array (no geometry) for direct evaluation."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 3 or beta.shape[0] != beta.shape[1]:
        raise ValueError("beta must have shape (L, L, K)")
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    L, _, K = beta.shape
    return NetworkRealization(
        positions=np.full((L, K, 2), np.nan),
        distances=np.full(beta.shape, np.nan),
        shadow_db=np.zeros(beta.shape),
        beta=beta,
    )
