"""Monomial/posynomial algebra and a log-domain geometric-programming solver.

A GP here maximizes one positive variable subject to posynomial <= 1
constraints and a positive box on every variable. With ``x = exp(y)`` each
constraint becomes ``log-sum-exp(A_j y + b_j) <= 0``, which is convex, and
the problem is solved with a primal log-barrier method (phase I when no
strictly feasible start is known).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np
import scipy.linalg
import scipy.sparse as sp

# ---------------------------------------------------------------------------
# algebra


@dataclass(frozen=True, eq=False)
class Monomial:
    """``coeff * prod_i x_i ** exponents[i]`` with ``coeff > 0``."""

    coeff: float
    exponents: Mapping[Hashable, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coeff > 0 and math.isfinite(self.coeff)):
            raise ValueError(f"monomial coefficient must be positive and finite, got {self.coeff}")
        exps = {k: float(v) for k, v in self.exponents.items() if v != 0}
        if not all(math.isfinite(v) for v in exps.values()):
            raise ValueError("exponents must be finite")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def var(cls, name: Hashable) -> "Monomial":
        return cls(1.0, {name: 1.0})

    def variables(self) -> set:
        return set(self.exponents)

    def __call__(self, values: Mapping[Hashable, float]) -> float:
        out = self.coeff
        for k, e in self.exponents.items():
            out *= values[k] ** e
        return out

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exponents)
            for k, e in other.exponents.items():
                exps[k] = exps.get(k, 0.0) + e
            return Monomial(self.coeff * other.coeff, exps)
        if isinstance(other, Posynomial):
            return other * self
        return Monomial(self.coeff * float(other), self.exponents)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other**-1
        return Monomial(self.coeff / float(other), self.exponents)

    def __rtruediv__(self, other):
        return Monomial(float(other), {}) * self**-1

    def __pow__(self, power: float):
        return Monomial(self.coeff**power, {k: e * power for k, e in self.exponents.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    __radd__ = __add__

    def __repr__(self):
        body = " ".join(f"{k}^{e:g}" for k, e in self.exponents.items())
        return f"Monomial({self.coeff:.6g} {body})".rstrip()


@dataclass(frozen=True, eq=False)
class Posynomial:
    """Sum of monomials."""

    terms: tuple

    def __init__(self, terms: Iterable[Monomial]):
        terms = tuple(terms)
        if not terms:
            raise ValueError("a posynomial needs at least one term")
        if not all(isinstance(t, Monomial) for t in terms):
            raise TypeError("posynomial terms must be monomials")
        object.__setattr__(self, "terms", terms)

    def variables(self) -> set:
        out = set()
        for t in self.terms:
            out |= t.variables()
        return out

    def __call__(self, values: Mapping[Hashable, float]) -> float:
        return sum(t(values) for t in self.terms)

    def __add__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, Monomial):
            return Posynomial(self.terms + (other,))
        return Posynomial(self.terms + (Monomial(float(other)),))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(a * b for a in self.terms for b in other.terms)
        return Posynomial(t * other for t in self.terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Posynomial):
            raise TypeError("division by a posynomial does not give a posynomial")
        return Posynomial(t / other for t in self.terms)

    def __len__(self):
        return len(self.terms)


def amgm_lower_bound(p: Posynomial | Monomial, anchor: Mapping[Hashable, float]) -> Monomial:
    """Monomial ``prod_b (u_b / a_b) ** a_b`` that touches ``p`` at ``anchor``.

    The weights ``a_b = u_b(anchor) / p(anchor)`` make the bound exact at the
    anchor; by the weighted AM-GM inequality it never exceeds ``p`` on the
    positive orthant.
    """
    if isinstance(p, Monomial):
        return p
    for name in p.variables():
        if not anchor[name] > 0:
            raise ValueError(f"anchor coordinate {name!r} must be positive")
    values = np.array([t(anchor) for t in p.terms])
    if not np.all(values > 0):
        raise ValueError("every term must be positive at the anchor")
    alpha = values / values.sum()
    out = Monomial(1.0)
    for a, term in zip(alpha, p.terms):
        out = out * (term / a) ** a
    return out


# ---------------------------------------------------------------------------
# problem in matrix form


@dataclass(frozen=True, eq=False)
class GpProblem:
    """Maximize ``objective_var`` subject to posynomial constraints ``<= 1``.

    Constraint ``j`` owns the terms ``starts[j]:starts[j+1]``; term ``r`` is
    ``exp(log_coeff[r]) * prod_i x_i ** exponents[r, i]``.
    """

    variables: tuple
    objective_var: Hashable
    exponents: sp.csr_matrix  # (T, n)
    log_coeff: np.ndarray  # (T,)
    starts: np.ndarray  # (m + 1,)
    lower: np.ndarray  # (n,)
    upper: np.ndarray  # (n,)
    labels: tuple = ()

    def __post_init__(self):
        n = len(self.variables)
        A = sp.csr_matrix(self.exponents)
        object.__setattr__(self, "exponents", A)
        if A.shape[1] != n or A.shape[0] != len(self.log_coeff):
            raise ValueError("exponent matrix does not match variables / coefficients")
        if self.objective_var not in self.variables:
            raise ValueError("objective variable must be one of the variables")
        if self.starts[0] != 0 or self.starts[-1] != A.shape[0] or np.any(np.diff(self.starts) <= 0):
            raise ValueError("every constraint needs at least one term")
        if np.any(self.lower <= 0) or np.any(self.upper < self.lower):
            raise ValueError("bounds must satisfy 0 < lower <= upper")
        if len(set(self.variables)) != n:
            raise ValueError("duplicate variable names")

    @property
    def n_constraints(self) -> int:
        return len(self.starts) - 1

    @property
    def n_terms(self) -> int:
        return self.exponents.shape[0]

    def index(self, name: Hashable) -> int:
        return self.variables.index(name)

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        """Posynomial values at positive point ``x`` (ordered as ``variables``)."""
        z = self.exponents @ np.log(x) + self.log_coeff
        return np.add.reduceat(np.exp(z), self.starts[:-1])

    @classmethod
    def from_posynomials(cls, objective_var, constraints: list, bounds: Mapping, labels=()) -> "GpProblem":
        """Compile algebra objects; ``bounds`` maps every variable to ``(lo, hi)``."""
        names = set(bounds)
        for c in constraints:
            missing = c.variables() - names
            if missing:
                raise ValueError(f"variables without bounds: {sorted(map(str, missing))}")
        if objective_var not in names:
            raise ValueError("objective variable needs bounds")
        variables = tuple(bounds)
        col = {v: i for i, v in enumerate(variables)}
        rows, cols, vals, logc, starts = [], [], [], [], [0]
        r = 0
        for c in constraints:
            terms = c.terms if isinstance(c, Posynomial) else (c,)
            for t in terms:
                for k, e in t.exponents.items():
                    rows.append(r)
                    cols.append(col[k])
                    vals.append(e)
                logc.append(math.log(t.coeff))
                r += 1
            starts.append(r)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(r, len(variables)))
        lo = np.array([bounds[v][0] for v in variables], dtype=float)
        hi = np.array([bounds[v][1] for v in variables], dtype=float)
        return cls(variables, objective_var, A, np.array(logc), np.array(starts), lo, hi, tuple(labels))

    def dump(self) -> str:
        """Plain-text listing, one monomial term per line, for diffing against other tools."""
        lines = [f"# maximize {self.objective_var}"]
        for v, lo, hi in zip(self.variables, self.lower, self.upper):
            lines.append(f"bound {v} {lo:.17g} {hi:.17g}")
        A = self.exponents.tocsr()
        for j in range(self.n_constraints):
            label = self.labels[j] if j < len(self.labels) else j
            lines.append(f"constraint {label}")
            for r in range(self.starts[j], self.starts[j + 1]):
                lo, hi = A.indptr[r], A.indptr[r + 1]
                exps = " ".join(f"{self.variables[c]}:{e:.17g}" for c, e in zip(A.indices[lo:hi], A.data[lo:hi]))
                lines.append(f"  {math.exp(self.log_coeff[r]):.17g} {exps}".rstrip())
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class GpSolution:
    xi: float
    values: np.ndarray
    status: str  # "optimal" | "infeasible" | "max-iterations"
    kkt_residual: float
    gap: float = math.inf  # duality gap bound on log(xi)
    newton_steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# barrier method


class _LogSumExpSystem:
    """Constraint functions ``F_j(y) = LSE(A_j y + b_j)`` with derivatives."""

    def __init__(self, A: sp.csr_matrix, b: np.ndarray, starts: np.ndarray):
        self.starts = starts[:-1]
        self.counts = np.diff(starts)
        self.group = np.repeat(np.arange(len(self.counts)), self.counts)
        self.m = len(self.counts)
        T, n = A.shape
        # dense is faster for small systems, sparse for the big ones
        self.dense = T * n <= 20_000
        self.A = A.toarray() if self.dense else A.tocsr()
        self.b = b
        if not self.dense:
            self._build_maps()

    def _build_maps(self):
        """Fixed linear maps from per-term weights to the flattened gradient rows and Hessian.

        ``G.ravel() = Q @ pi`` and ``H.ravel() = P @ d`` because every term
        contributes ``pi_r * a_r`` to its constraint's gradient and
        ``d_r * a_r a_r^T`` to the Hessian; the sparsity pattern never changes.
        """
        A = self.A
        T, n = A.shape
        nnz = np.diff(A.indptr)
        term = np.repeat(np.arange(T), nnz)
        self.Q = sp.csr_matrix((A.data, (self.group[term] * n + A.indices, term)), shape=(self.m * n, T))
        # all (i, j) column pairs inside each row
        first = np.repeat(np.arange(A.nnz), nnz[term])
        offs = np.arange(len(first)) - np.repeat(np.cumsum(nnz[term]) - nnz[term], nnz[term])
        second = A.indptr[term[first]] + offs
        self.P = sp.csr_matrix(
            (A.data[first] * A.data[second], (A.indices[first] * n + A.indices[second], term[first])),
            shape=(n * n, T),
        )

    def values(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = self.A @ y + self.b
        zmax = np.maximum.reduceat(z, self.starts)
        e = np.exp(z - zmax[self.group])
        s = np.add.reduceat(e, self.starts)
        F = zmax + np.log(s)
        return F, z

    def derivatives(self, z: np.ndarray, F: np.ndarray, w: np.ndarray):
        """Gradients of every F_j (rows of G) and ``sum_j w_j * hess F_j``."""
        pi = np.exp(z - F[self.group])
        d = pi * w[self.group]
        if self.dense:
            PA = self.A * pi[:, None]
            G = np.add.reduceat(PA, self.starts, axis=0)
            H = self.A.T @ (self.A * d[:, None])
        else:
            n = self.A.shape[1]
            G = (self.Q @ pi).reshape(self.m, n)
            H = (self.P @ d).reshape(n, n)
        H -= G.T @ (G * w[:, None])
        return G, H


class _Barrier:
    def __init__(self, system: _LogSumExpSystem, c: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        self.sys = system
        self.c = c
        self.lo = lo
        self.hi = hi
        self.boxed = np.isfinite(lo) | np.isfinite(hi)
        self.m_total = system.m + int(np.isfinite(lo).sum() + np.isfinite(hi).sum())

    def inside(self, y) -> bool:
        return bool(np.all(y > self.lo) and np.all(y < self.hi))

    def phi(self, y, t):
        F, z = self.sys.values(y)
        if np.any(F >= 0) or not self.inside(y):
            return math.inf, F, z
        box = -np.sum(np.log(y - self.lo)[np.isfinite(self.lo)]) - np.sum(np.log(self.hi - y)[np.isfinite(self.hi)])
        return t * self.c @ y - np.sum(np.log(-F)) + box, F, z

    def newton_direction(self, y, t, F, z):
        w = -1.0 / F
        G, H = self.sys.derivatives(z, F, w)
        H += G.T @ (G * (w**2)[:, None])
        dl = np.where(np.isfinite(self.lo), 1.0 / (y - self.lo), 0.0)
        dh = np.where(np.isfinite(self.hi), 1.0 / (self.hi - y), 0.0)
        grad = t * self.c + G.T @ w - dl + dh
        H[np.diag_indices_from(H)] += dl**2 + dh**2
        try:
            dy = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(H, check_finite=False), grad, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            ridge = 1e-12 * max(1.0, np.abs(np.diag(H)).max())
            dy = -np.linalg.lstsq(H + ridge * np.eye(len(y)), grad, rcond=None)[0]
        return dy, grad

    def max_box_step(self, y, dy):
        step = 1.0
        up = dy > 0
        if np.any(up & np.isfinite(self.hi)):
            sel = up & np.isfinite(self.hi)
            step = min(step, np.min((self.hi[sel] - y[sel]) / dy[sel]))
        down = dy < 0
        if np.any(down & np.isfinite(self.lo)):
            sel = down & np.isfinite(self.lo)
            step = min(step, np.min((self.lo[sel] - y[sel]) / dy[sel]))
        return step

    def center(self, y, t, max_steps, tol=1e-10, stop=None):
        """Newton's method on the barrier at weight ``t``; returns ``(y, steps, converged)``."""
        val, F, z = self.phi(y, t)
        stalled = 0
        for step in range(1, max_steps + 1):
            dy, grad = self.newton_direction(y, t, F, z)
            decrement = -grad @ dy
            # at large t the barrier value carries ~1e-16 relative noise
            if decrement / 2 <= max(tol, 1e-14 * abs(val)):
                return y, step, True
            alpha = min(1.0, 0.99 * self.max_box_step(y, dy))
            while True:
                cand = y + alpha * dy
                new_val, F_new, z_new = self.phi(cand, t)
                if new_val <= val + 0.01 * alpha * (grad @ dy):
                    break
                alpha *= 0.5
                if alpha < 1e-16:
                    return y, step, True  # no further progress in floating point
            stalled = stalled + 1 if val - new_val <= 1e-13 * max(1.0, abs(val)) else 0
            y, val, F, z = cand, new_val, F_new, z_new
            if stalled >= 5:
                return y, step, True
            if stop is not None and stop(y, F):
                return y, step, True
        return y, max_steps, False


def _phase_one(system: _LogSumExpSystem, ylo, yhi, y0, max_newton):
    """Find ``y`` with every ``F_j(y) < 0`` inside the box, or return None."""
    n = len(y0)
    A = system.A
    ones = np.ones((A.shape[0], 1))
    A1 = np.hstack([A, -ones]) if system.dense else sp.hstack([A, sp.csr_matrix(-ones)]).tocsr()
    aux = _LogSumExpSystem.__new__(_LogSumExpSystem)
    aux.__dict__.update(system.__dict__)
    aux.A = A1
    if not system.dense:
        aux._build_maps()
    F0, _ = system.values(y0)
    s0 = max(F0.max(), 0.0) + 1.0
    c = np.zeros(n + 1)
    c[-1] = 1.0
    lo = np.append(ylo, -np.inf)
    hi = np.append(yhi, np.inf)
    barrier = _Barrier(aux, c, lo, hi)
    target = -1e-3

    def done(ys, F):
        return ys[-1] < target

    ys = np.append(y0, s0)
    t = 1.0
    steps = 0
    for _ in range(60):
        ys, k, _ = barrier.center(ys, t, max_newton, stop=done)
        steps += k
        Fy, _ = system.values(ys[:-1])
        if Fy.max() < target:
            return ys[:-1], steps
        if barrier.m_total / t < 1e-9:
            break
        t *= 20.0
    Fy, _ = system.values(ys[:-1])
    if Fy.max() < 0:
        return ys[:-1], steps
    return None, steps


def solve(prob: GpProblem, tol: float = 1e-8, x0: np.ndarray | None = None, max_newton: int = 2000,
          t0: float = 1.0, mu: float = 20.0) -> GpSolution:
    """Maximize ``prob.objective_var``.

    ``tol`` bounds the duality gap on ``log(xi)``, i.e. the returned ``xi``
    is within a factor ``exp(tol)`` of the optimum. ``x0`` is an optional
    starting point; it need not be feasible. ``t0`` is the initial barrier
    weight (the first duality-gap bound is ``m / t0``); a start already near
    the optimum can skip the early stages with a larger value. ``mu`` is the
    barrier weight growth factor.
    """
    ylo = np.log(prob.lower)
    yhi = np.log(prob.upper)
    system = _LogSumExpSystem(prob.exponents, prob.log_coeff, prob.starts)
    n = len(prob.variables)
    width = yhi - ylo
    if x0 is None:
        y = 0.5 * (ylo + yhi)
    else:
        margin = np.minimum(1e-3 * np.maximum(width, 1e-300), 1e-2)
        y = np.clip(np.log(np.asarray(x0, dtype=float)), ylo + margin, yhi - margin)
    fixed = width <= 0
    if np.any(fixed):
        raise ValueError("degenerate bounds (lower == upper) are not supported")

    steps = 0
    F, _ = system.values(y)
    if F.max() >= 0:
        y, k = _phase_one(system, ylo, yhi, y, max_newton)
        steps += k
        if y is None:
            return GpSolution(0.0, np.full(n, np.nan), "infeasible", math.inf, math.inf, steps)

    obj = prob.index(prob.objective_var)
    c = np.zeros(n)
    c[obj] = -1.0
    barrier = _Barrier(system, c, ylo, yhi)
    t = t0
    status = "optimal"
    while True:
        y, k, converged = barrier.center(y, t, max_newton - steps)
        steps += k
        if not converged or steps >= max_newton:
            status = "max-iterations"
            break
        if barrier.m_total / t <= tol:
            break
        t = min(t * mu, 1.0001 * barrier.m_total / tol)
    F, _ = system.values(y)
    x = np.exp(y)
    return GpSolution(
        xi=float(x[obj]),
        values=x,
        status=status,
        kkt_residual=float(max(F.max(), 0.0)),
        gap=float(barrier.m_total / t),
        newton_steps=steps,
    )


# ---------------------------------------------------------------------------
# max-min SINR problem for pilot power splits

XI = "xi"
EPS_REL = 1e-8


def power_floor(cfg) -> float:
    """Box lower bound for pilot-power variables, ``1e-8 * max(p_max)``."""
    return EPS_REL * float(np.max(cfg.p_max))


def power_var(l: int, k: int, b: int) -> tuple:
    return ("p", l, k, b)


def sinr_upper_bound(net, cfg) -> float:
    """Bound on any SINR: the single-user value with the whole pilot budget and no interference.

    With noise normalized to one and ``T`` the pilot budget, that value is
    below both ``M beta p T`` and ``M beta^2 p T^2``.
    """
    beta_home = net.home_beta / cfg.noise_power
    T = cfg.tau_p * cfg.p_max
    return float(np.max(cfg.M * beta_home * cfg.data_power * T * np.minimum(1.0, beta_home * T)))


def build_maxmin_gp(alloc_anchor, net, cfg, w, support: np.ndarray | None = None) -> GpProblem:
    """Geometric program maximizing the smallest AM-GM-approximated SINR.

    Variables are ``xi`` and one pilot power per ``(l, k, b)`` entry of
    ``support`` (default: all). Entries outside the support are fixed at
    exactly zero and drop out of every overlap. Each SINR constraint is
    ``xi * D / N <= 1`` with ``N`` the monomial numerator built from the
    weights ``w`` and ``D`` the denominator with every squared pilot overlap
    expanded into monomial cross terms; each user also gets its average
    pilot-power budget.
    """
    L, K, tau_p = cfg.L, cfg.K, cfg.tau_p
    U = L * K
    anchor = np.asarray(getattr(alloc_anchor, "power_split", alloc_anchor), dtype=float)
    alpha = np.asarray(getattr(w, "alpha", w), dtype=float)
    if anchor.shape != (L, K, tau_p) or alpha.shape != anchor.shape:
        raise ValueError("anchor / weights shape does not match config")
    supp = np.ones((U, tau_p), dtype=bool) if support is None else np.asarray(support, dtype=bool).reshape(U, tau_p)
    if not np.all(supp.any(axis=1)):
        raise ValueError("every user needs at least one basis vector in the support")
    alpha = alpha.reshape(U, tau_p)
    if np.any((alpha > 0) & ~supp):
        raise ValueError("weights put mass outside the support")
    if np.any((alpha > 0) & (anchor.reshape(U, tau_p) <= 0)):
        raise ValueError("weights inconsistent with anchor: positive weight on a zero power")

    col = -np.ones((U, tau_p), dtype=int)
    col[supp] = 1 + np.arange(supp.sum())
    variables = [XI] + [power_var(u // K, u % K, b) for u, b in zip(*np.nonzero(supp))]
    n = len(variables)

    beta = net.beta.reshape(L, U) / cfg.noise_power
    p = cfg.data_power.reshape(-1)
    home = np.repeat(np.arange(L), K)
    received = beta @ p + 1.0  # per BS, noise normalized to one

    act = alpha > 0
    safe = np.where(act, alpha, 1.0)
    log_num = np.log(cfg.M * beta[home, np.arange(U)] ** 2 * p) - np.sum(2.0 * alpha * np.log(safe), axis=1)
    coupling = beta[home]  # (u, v): gain of user v at u's BS
    kappa = coupling * received[home][:, None] + cfg.M * p[None, :] * coupling**2 * (1.0 - np.eye(U))

    # overlap cross terms: one per (u, v, b <= b2) with both pilots present on b and b2
    b1, b2 = np.triu_indices(tau_p)
    both = supp[:, None, :] & supp[None, :, :]  # (u, v, b)
    uu, vv, pp = np.nonzero(both[:, :, b1] & both[:, :, b2])
    ov_cols = np.stack([col[vv, b1[pp]], col[uu, b1[pp]], col[vv, b2[pp]], col[uu, b2[pp]]], axis=1)
    ov_vals = np.full(ov_cols.shape, 0.5)
    ov_log = np.log(kappa[uu, vv] * np.where(b1[pp] != b2[pp], 2.0, 1.0))
    # noise terms
    nu, nb = np.nonzero(supp)
    owner = np.concatenate([uu, nu])
    order = np.argsort(owner * 2 + np.r_[np.zeros(uu.size, int), np.ones(nu.size, int)], kind="stable")
    owner = owner[order]
    t_cols = np.concatenate([ov_cols, np.pad(col[nu, nb][:, None], ((0, 0), (0, 3)), constant_values=0)])[order]
    t_vals = np.concatenate([ov_vals, np.pad(np.ones((nu.size, 1)), ((0, 0), (0, 3)))])[order]
    t_log = np.concatenate([ov_log, np.full(nu.size, 0.0) + np.log(received[home[nu]])])[order] - log_num[owner]
    n_sinr = owner.size
    # xi * term / numerator
    num_cols = np.where(act, col, 0)[owner]
    num_vals = -2.0 * alpha[owner]
    sinr_cols = np.concatenate([np.zeros((n_sinr, 1), int), t_cols, num_cols], axis=1)
    sinr_vals = np.concatenate([np.ones((n_sinr, 1)), t_vals, num_vals], axis=1)

    bu, bb = np.nonzero(supp)
    budget_log = -np.log(tau_p * cfg.p_max.reshape(-1)[bu])
    T = n_sinr + bu.size
    rows = np.concatenate([np.repeat(np.arange(n_sinr), sinr_cols.shape[1]), n_sinr + np.arange(bu.size)])
    cols = np.concatenate([sinr_cols.ravel(), col[bu, bb]])
    vals = np.concatenate([sinr_vals.ravel(), np.ones(bu.size)])
    logc = np.concatenate([t_log, budget_log])
    counts = np.concatenate([np.bincount(owner, minlength=U), np.bincount(bu, minlength=U)])
    starts = np.concatenate([[0], np.cumsum(counts)])
    r = T

    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    A.eliminate_zeros()
    eps = power_floor(cfg)
    xi_hi = 2.0 * sinr_upper_bound(net, cfg)
    lo = np.full(n, eps)
    hi = np.full(n, 2.0 * tau_p * float(np.max(cfg.p_max)))
    lo[0], hi[0] = xi_hi * 1e-15, xi_hi
    labels = [("sinr", u // K, u % K) for u in range(U)] + [("budget", u // K, u % K) for u in range(U)]
    return GpProblem(tuple(variables), XI, A, np.array(logc), np.array(starts), lo, hi, tuple(labels))


def split_from_values(prob: GpProblem, values: np.ndarray, cfg, snap: bool = True) -> np.ndarray:
    """Scatter power variables back into an ``(L, K, tau_p)`` array.

    Entries outside the support are zero; with ``snap`` values below ten
    times the power floor are set to exactly zero.
    """
    split = np.zeros((cfg.L, cfg.K, cfg.tau_p))
    for name, x in zip(prob.variables, values):
        if name == XI:
            continue
        _, l, k, b = name
        split[l, k, b] = x
    if snap:
        split[split < 10 * power_floor(cfg)] = 0.0
    return split
