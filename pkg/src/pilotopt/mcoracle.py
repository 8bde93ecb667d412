"""Monte Carlo reference for channel estimation and MR-detection SINR.

Brute-force counterpart of :mod:`pilotopt.closedform`: draws Rayleigh
channels and pilot-phase noise, forms the received pilot signal, applies the
MMSE estimator and estimates the expectations in the capacity-bound SINR by
sample means. Works in physical units (no noise normalization) and builds
pilots from an explicit basis, so it shares no arithmetic with the closed
form beyond the estimator scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closedform import DegenerateAllocationError
from .netgen import NetworkRealization, SystemConfig
from .pilot import PilotAllocation

DEFAULT_SAMPLES = 200_000
MIN_SAMPLES = 1_000
CHUNK = 2000


@dataclass
class ChannelSample:
    """A batch of channel draws seen at one BS.

    ``h[n, :, v]`` is the channel of user ``v`` (flattened cell-major) to the
    BS, ``n_pilot[n]`` the pilot-phase noise. Data-phase quantities are only
    drawn on request since the SINR moments do not need them.
    """

    h: np.ndarray  # (n, M, LK)
    n_pilot: np.ndarray  # (n, M, tau_p)
    n_data: np.ndarray | None = None  # (n, M)
    x: np.ndarray | None = None  # (n, LK)


def _cn(rng: np.random.Generator, shape, var) -> np.ndarray:
    """Circular complex Gaussian with E|z|^2 = var (broadcast over the last axis)."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    shape = tuple(shape)
    z = rng.standard_normal(shape[:-1] + (2 * shape[-1],)).view(np.complex128)
    return z * scale


def draw_channel_sample(
    net: NetworkRealization, cfg: SystemConfig, l: int, n: int, rng: np.random.Generator, with_data: bool = False
) -> ChannelSample:
    beta = net.beta[l].reshape(-1)
    h = _cn(rng, (n, cfg.M, beta.size), beta)
    noise = _cn(rng, (n, cfg.M, cfg.tau_p), cfg.noise_power)
    if not with_data:
        return ChannelSample(h, noise)
    return ChannelSample(h, noise, _cn(rng, (n, cfg.M), cfg.noise_power), _cn(rng, (n, beta.size), 1.0))


def _pilots(alloc: PilotAllocation, basis: np.ndarray | None) -> np.ndarray:
    """Pilot sequences as columns, shape (tau_p, LK)."""
    psi = alloc.pilot_matrix(basis)  # (L, tau_p, K)
    return np.transpose(psi, (1, 0, 2)).reshape(psi.shape[1], -1)


def received_pilot(sample: ChannelSample, psi: np.ndarray) -> np.ndarray:
    """``Y_l = sum_v h_v psi_v^H + N_l`` for every draw, shape (n, M, tau_p)."""
    return sample.h @ psi.conj().T + sample.n_pilot


def estimator_gain(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int, k: int,
                   basis: np.ndarray | None = None) -> complex:
    """Scalar ``c`` with ``h_hat = c * Y_l psi_{l,k}`` (MMSE for i.i.d. Rayleigh fading)."""
    psi = _pilots(alloc, basis)
    u = l * cfg.K + k
    own = psi[:, u]
    energy = np.vdot(own, own).real
    if energy <= 0:
        raise DegenerateAllocationError(l, k)
    cross = np.abs(psi.conj().T @ own) ** 2  # |psi_v^H psi_u|^2
    beta = net.beta[l].reshape(-1)
    return beta[u] * energy / (np.sum(beta * cross) + cfg.noise_power * energy)


def mmse_estimate(y_corr: np.ndarray, alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig,
                  l: int, k: int, basis: np.ndarray | None = None) -> np.ndarray:
    """MMSE channel estimate of user (l, k) at BS l from ``y_corr = Y_l psi_{l,k}``."""
    return estimator_gain(alloc, net, cfg, l, k, basis) * np.asarray(y_corr)


ESTIMATORS = ("cv", "antenna", "realization")


@dataclass
class EmpiricalMoments:
    """Running sums for the expectations in the SINR of one user.

    Three estimators share the same draws:

    ``realization``
        plain sample means, one sample per M-antenna draw.
    ``antenna``
        pools the per-antenna products ``z_m = conj(v_m) h_m``, i.i.d. across
        antennas under i.i.d. Rayleigh fading, and rebuilds the M-antenna
        moments from ``E|sum z|^2 = M E|z|^2 + M(M-1)|E z|^2``.
    ``cv``
        as ``antenna``, but ``E z`` is corrected with control variates
        ``conj(x_w) h_v`` (other channels and the correlated pilot noise
        against channel ``v``), which have zero mean by independence. The
        regression coefficients are fitted from the same samples.

    Moments from disjoint sample sets combine with ``merge``.
    """

    own: int
    M: int
    sample_count: int = 0
    sum_g: np.ndarray | None = None  # per user v: sum of v^H h_v over draws
    sum_g2: np.ndarray | None = None  # sum of |v^H h_v|^2
    sum_norm: float = 0.0  # sum of ||v||^2
    sum_z: np.ndarray | None = None  # sum over draws and antennas of conj(v_m) h_{v,m}
    sum_z2: np.ndarray | None = None  # sum of |conj(v_m) h_{v,m}|^2
    sum_c: np.ndarray | None = None  # (U+1, U): sum of controls conj(x_w) h_v
    sum_cc: np.ndarray | None = None  # sum of |controls|^2
    sum_cz: np.ndarray | None = None  # sum of conj(control) * z_v

    _FIELDS = ("sum_g", "sum_g2", "sum_norm", "sum_z", "sum_z2", "sum_c", "sum_cc", "sum_cz")

    def merge(self, other: "EmpiricalMoments") -> "EmpiricalMoments":
        if (other.own, other.M) != (self.own, self.M):
            raise ValueError("cannot merge moments of different users")
        if self.sample_count == 0:
            return other
        if other.sample_count == 0:
            return self
        sums = {f: getattr(self, f) + getattr(other, f) for f in self._FIELDS}
        return EmpiricalMoments(self.own, self.M, self.sample_count + other.sample_count, **sums)

    def _check(self, estimator: str):
        if self.sample_count == 0:
            raise ValueError("no samples accumulated")
        if estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")

    def mean_z(self, estimator: str = "cv") -> np.ndarray:
        """Per-antenna ``E{conj(v_m) h_{v,m}}`` for every user ``v``."""
        self._check(estimator)
        N = self.sample_count * self.M
        mean = self.sum_z / N
        if estimator != "cv":
            return mean
        # the diagonal control |h_v|^2 has nonzero mean and is not a control
        U = self.sum_z.size
        mask = np.ones(self.sum_c.shape, dtype=bool)
        mask[np.arange(U), np.arange(U)] = False
        mean_c = self.sum_c / N
        var_c = self.sum_cc / N - np.abs(mean_c) ** 2
        cov = self.sum_cz / N - mean_c.conj() * mean[None, :]
        coef = np.where(mask, cov / np.where(var_c > 0, var_c, 1.0), 0.0)
        return mean - np.sum(coef * mean_c, axis=0)

    def mean_vh(self, estimator: str = "cv") -> complex:
        """Estimate of ``E{v^H h_own}``."""
        self._check(estimator)
        if estimator == "realization":
            return complex(self.sum_g[self.own] / self.sample_count)
        return complex(self.M * self.mean_z(estimator)[self.own])

    def second_moments(self, estimator: str = "cv") -> np.ndarray:
        """Estimates of ``E|v^H h_v|^2`` for every user ``v``."""
        self._check(estimator)
        if estimator == "realization":
            return self.sum_g2 / self.sample_count
        N = self.sample_count * self.M
        return self.M * self.sum_z2 / N + self.M * (self.M - 1) * np.abs(self.mean_z(estimator)) ** 2

    @property
    def norm_sq(self) -> float:
        return self.sum_norm / self.sample_count

    def sinr(self, data_power: np.ndarray, noise_power: float, estimator: str = "cv") -> float:
        """Capacity-bound SINR built from the sample means."""
        p = np.asarray(data_power, dtype=float).reshape(-1)
        signal = p[self.own] * abs(self.mean_vh(estimator)) ** 2
        interference = np.dot(p, self.second_moments(estimator)) - signal + noise_power * self.norm_sq
        return float(signal / interference)


def _chunk_sizes(n_samples: int) -> list[int]:
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    return sizes


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real**2 + z.imag**2


def cell_moments(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int,
                 n_samples: int = DEFAULT_SAMPLES, seed=0, basis: np.ndarray | None = None) -> list[EmpiricalMoments]:
    """Moments for every user of cell ``l``, all from the same channel draws at BS ``l``.

    Each chunk of draws gets its own generator spawned from ``seed``, so the
    result does not depend on how chunks are scheduled.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    psi = _pilots(alloc, basis)
    users = [l * cfg.K + k for k in range(cfg.K)]
    gains = np.array([estimator_gain(alloc, net, cfg, l, k, basis) for k in range(cfg.K)])
    acc = [EmpiricalMoments(u, cfg.M) for u in users]
    sizes = _chunk_sizes(n_samples)
    coupling = psi.conj().T @ psi[:, users]  # psi_v^H psi_{l,k}, (LK, K)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    for size, ss in zip(sizes, root.spawn(len(sizes))):
        sample = draw_channel_sample(net, cfg, l, size, np.random.default_rng(ss))
        h = sample.h.reshape(size * cfg.M, -1)  # draws and antennas flattened
        q = sample.n_pilot.reshape(size * cfg.M, -1) @ psi[:, users]  # correlated pilot noise
        v = (h @ coupling + q) * gains  # MR filter = MMSE estimate from Y_l psi_{l,k}
        g = v.reshape(size, cfg.M, -1).conj().transpose(0, 2, 1) @ sample.h  # (n, K, LK): v_k^H h_v
        h2 = _abs2(h)
        hh = h.conj().T @ h
        h2h2 = h2.T @ h2
        for j, u in enumerate(users):
            vj = v[:, j].conj()
            qj = q[:, j]
            hv = h * vj[:, None]
            acc[j] = acc[j].merge(EmpiricalMoments(
                u,
                cfg.M,
                size,
                sum_g=g[:, j, :].sum(axis=0),
                sum_g2=np.sum(_abs2(g[:, j, :]), axis=0),
                sum_norm=float(_abs2(vj).sum()),
                sum_z=vj @ h,
                sum_z2=_abs2(vj) @ h2,
                sum_c=np.vstack([hh, qj.conj() @ h]),
                sum_cc=np.vstack([h2h2, _abs2(qj) @ h2]),
                sum_cz=np.vstack([hv.T @ h2, (qj * vj) @ h2]),
            ))
    return acc


def empirical_moments(alloc, net, cfg, l, k, n_samples=DEFAULT_SAMPLES, seed=0, basis=None) -> EmpiricalMoments:
    return cell_moments(alloc, net, cfg, l, n_samples, seed, basis)[k]


def empirical_sinr(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int, k: int,
                   n_samples: int = DEFAULT_SAMPLES, seed=0, basis: np.ndarray | None = None,
                   estimator: str = "cv") -> float:
    """Monte Carlo estimate of the MR-detection SINR of user (l, k)."""
    m = empirical_moments(alloc, net, cfg, l, k, n_samples, seed, basis)
    return m.sinr(cfg.data_power, cfg.noise_power, estimator)


def empirical_sinr_cell(alloc, net, cfg, l, n_samples=DEFAULT_SAMPLES, seed=0, basis=None,
                        estimator: str = "cv") -> np.ndarray:
    moments = cell_moments(alloc, net, cfg, l, n_samples, seed, basis)
    return np.array([m.sinr(cfg.data_power, cfg.noise_power, estimator) for m in moments])


def empirical_sinr_all(alloc, net, cfg, n_samples=DEFAULT_SAMPLES, seed=0, basis=None,
                       estimator: str = "cv") -> np.ndarray:
    """SINR of every user, shape (L, K); BS ``l`` uses the stream ``(seed, l)``."""
    return np.stack([
        empirical_sinr_cell(alloc, net, cfg, l, n_samples, [seed, l] if np.isscalar(seed) else list(seed) + [l],
                            basis, estimator)
        for l in range(cfg.L)
    ])


@dataclass(frozen=True)
class EstimateStatistics:
    variance: float  # per-antenna E|h_hat_m|^2
    variance_stderr: float
    cross_cov: complex  # per-antenna E{h_hat_m e_m^*}
    cross_cov_stderr: float
    error_variance: float


def empirical_estimate_statistics(alloc: PilotAllocation, net: NetworkRealization, cfg: SystemConfig, l: int, k: int,
                                  n_samples: int = 100_000, seed=0, basis=None) -> EstimateStatistics:
    """Sample statistics of the MMSE estimate and its error for user (l, k), pooled over antennas."""
    psi = _pilots(alloc, basis)
    u = l * cfg.K + k
    c = estimator_gain(alloc, net, cfg, l, k, basis)
    rng = np.random.default_rng(seed)
    est, cross, err = [], [], []
    for size in _chunk_sizes(n_samples):
        sample = draw_channel_sample(net, cfg, l, size, rng)
        h_hat = c * (received_pilot(sample, psi) @ psi[:, u])
        e = sample.h[:, :, u] - h_hat
        est.append(np.abs(h_hat).ravel() ** 2)
        cross.append((h_hat * e.conj()).ravel())
        err.append(np.abs(e).ravel() ** 2)
    est = np.concatenate(est)
    cross = np.concatenate(cross)
    err = np.concatenate(err)
    # antennas are i.i.d., so every (draw, antenna) pair is an independent sample
    n = est.size
    return EstimateStatistics(
        variance=float(est.mean()),
        variance_stderr=float(est.std() / np.sqrt(n)),
        cross_cov=complex(cross.mean()),
        cross_cov_stderr=float(np.abs(cross).std() / np.sqrt(n)),
        error_variance=float(err.mean()),
    )
