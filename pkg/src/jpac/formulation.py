"""Normalized sample-approximation problem and exact feasibility oracles.

The SINR constraint of link k under sample n,

    g[n,k,k] * p[n,k] / (eta[k] + sum_{j != k} g[n,k,j] * p[n,j]) >= gamma[k],

is rewritten in budget-normalized powers q[n,k] = p[n,k] / pbar[k] as the
linear constraint ``a[n,k] . q[n] >= c[n,k]`` with unit diagonal
coefficients.  This module builds those coefficients and provides the
exact per-gain-matrix feasibility / minimal-power oracle that defines the
ground truth of "supported" throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import GainSampleSet, NetworkInstance
from .validation import check_gain_matrix, check_subset

# numerical guards for the feasibility decision
RHO_MARGIN = 1e-12
BUDGET_SLACK = 1e-9

# dense eigensolve below this size; power iteration above
DENSE_EIG_MAX = 64
POWER_ITER_TOL = 1e-10
POWER_ITER_CAP = 10_000

PowerProfile = np.ndarray
"""Normalized powers in [0, 1]: shape (N, K) per-sample, or (K,) shared."""


@dataclass(frozen=True)
class NormalizedProblem:
    """Coefficients of the normalized sample-approximation problem.

    ``a[n, k, :]`` is link k's constraint row under sample n (diagonal 1,
    off-diagonal nonpositive normalized interference coefficients);
    ``c[n, k]`` its threshold.  ``alpha`` weights the total-power term and
    always satisfies 0 < alpha < 1/sum(pbar).  ``residual`` selects how
    constraint slack enters group residuals: "one_sided" (default) zeroes
    the contribution of satisfied constraints, "two_sided" keeps the raw
    affine residual inside the norm.
    """

    K: int
    N: int
    a: np.ndarray
    c: np.ndarray
    pbar: np.ndarray
    alpha: float
    eta: np.ndarray
    residual: str = "one_sided"

    def __post_init__(self):
        if self.residual not in ("one_sided", "two_sided"):
            raise ValueError(f"unknown residual mode {self.residual!r}")
        if self.a.shape != (self.N, self.K, self.K) or self.c.shape != (self.N, self.K):
            raise ValueError("coefficient arrays have inconsistent shapes")
        if not 0.0 < self.alpha < 1.0 / float(np.sum(self.pbar)):
            raise ValueError("alpha must lie strictly between 0 and 1/sum(pbar)")
        for name in ("a", "c", "pbar", "eta"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def margins(self, q: PowerProfile) -> np.ndarray:
        """Signed constraint slack ``a[n,k] . q[n] - c[n,k]``, shape (N, K).

        A shared (K,) profile is broadcast across samples.
        """
        if q.ndim == 1:
            return np.einsum("nkj,j->nk", self.a, q) - self.c
        return np.einsum("nkj,nj->nk", self.a, q) - self.c

    def residuals(self, q: PowerProfile) -> np.ndarray:
        """Per-constraint residual entering the group norms, shape (N, K)."""
        m = self.margins(q)
        if self.residual == "one_sided":
            return np.maximum(-m, 0.0)
        return -m

    def group_norms(self, q: PowerProfile) -> np.ndarray:
        """Euclidean norm of each link's residual block, shape (K,)."""
        return np.linalg.norm(self.residuals(q), axis=0)

    def power_term(self, q: PowerProfile) -> float:
        if q.ndim == 1:
            return float(self.alpha * self.pbar @ q)
        return float(self.alpha / self.N * np.sum(q @ self.pbar))


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the exact feasibility oracle on one gain matrix."""

    feasible: bool
    spectral_radius: float
    pmin: np.ndarray | None = None
    diagnostic: str = ""


def normalize(inst: NetworkInstance, samples: GainSampleSet, alpha_fraction: float = 0.999,
              residual: str = "one_sided") -> NormalizedProblem:
    """Build the normalized problem for an instance and its gain samples.

    ``alpha_fraction`` is the fraction of the admissible upper bound
    1/sum(pbar) used for the power weight.
    """
    if not 0.0 < alpha_fraction < 1.0:
        raise ValueError(f"alpha_fraction must lie in (0, 1), got {alpha_fraction}")
    g = samples.gains
    if g.shape[1] != inst.K:
        raise ValueError("sample set does not match instance size")
    diag = np.diagonal(g, axis1=1, axis2=2)
    if np.any(diag <= 0):
        raise ValueError("direct gains must be strictly positive")

    denom = diag * inst.pbar[None, :]                       # (N, K): g[n,k,k] * pbar[k]
    a = -(inst.gamma[None, :, None] * g * inst.pbar[None, None, :]) / denom[:, :, None]
    idx = np.arange(inst.K)
    a[:, idx, idx] = 1.0
    c = (inst.gamma * inst.eta)[None, :] / denom
    alpha = alpha_fraction / float(np.sum(inst.pbar))
    return NormalizedProblem(K=inst.K, N=samples.N, a=a, c=c, pbar=inst.pbar.copy(),
                             alpha=alpha, eta=inst.eta.copy(), residual=residual)


def objective_value(prob: NormalizedProblem, q: PowerProfile) -> float:
    """Sum of group residual norms plus the weighted average total power."""
    return float(np.sum(prob.group_norms(q)) + prob.power_term(q))


def spectral_radius(F: np.ndarray) -> float:
    """Spectral radius of a nonnegative matrix.

    Dense eigensolve up to DENSE_EIG_MAX; Collatz-Wielandt power iteration
    beyond that.
    """
    n = F.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_EIG_MAX:
        return float(np.max(np.abs(np.linalg.eigvals(F))))
    v = np.ones(n)
    rho = 0.0
    for _ in range(POWER_ITER_CAP):
        w = F @ v
        top = float(np.max(w))
        if top == 0.0:
            return 0.0
        w /= top
        # Collatz-Wielandt bounds on the Perron root
        pos = v > 0
        ratios = w[pos] / v[pos] * top
        lo, hi = float(np.min(ratios)), float(np.max(ratios))
        v = w
        rho = hi
        if hi - lo <= POWER_ITER_TOL * max(1.0, hi):
            break
    return rho


def _interference_system(inst: NetworkInstance, G: np.ndarray, S: np.ndarray):
    """Normalized interference matrix F and noise load u on the subset S."""
    g = G[np.ix_(S, S)]
    diag = np.diagonal(g)
    gamma = inst.gamma[S]
    F = gamma[:, None] * g / diag[:, None]
    np.fill_diagonal(F, 0.0)
    u = gamma * inst.eta[S] / diag
    return F, u


def exact_feasibility(inst: NetworkInstance, gain_matrix: np.ndarray, S) -> FeasibilityReport:
    """Exact feasibility and minimal powers of a link subset on one gain matrix.

    The subset is feasible iff the normalized interference matrix has
    spectral radius below one and the resulting minimal power vector
    ``pmin = (I - F)^-1 u`` stays within the budgets.  ``pmin`` is ordered
    by the sorted subset indices and is componentwise minimal among all
    feasible power vectors.
    """
    G = check_gain_matrix(gain_matrix, inst.K)
    S = check_subset(S, inst.K)
    if S.size == 0:
        return FeasibilityReport(feasible=True, spectral_radius=0.0, pmin=np.zeros(0))
    F, u = _interference_system(inst, G, S)
    rho = spectral_radius(F)
    if not rho < 1.0 - RHO_MARGIN:
        return FeasibilityReport(feasible=False, spectral_radius=rho,
                                 diagnostic="spectral radius at or above one")
    try:
        pmin = np.linalg.solve(np.eye(S.size) - F, u)
    except np.linalg.LinAlgError as err:
        return FeasibilityReport(feasible=False, spectral_radius=rho,
                                 diagnostic=f"singular solve: {err}")
    if np.any(pmin > inst.pbar[S] * (1.0 + BUDGET_SLACK)):
        return FeasibilityReport(feasible=False, spectral_radius=rho, pmin=pmin,
                                 diagnostic="minimal power exceeds budget")
    return FeasibilityReport(feasible=True, spectral_radius=rho, pmin=pmin)


def feasibility_batch(inst: NetworkInstance, gains: np.ndarray, S):
    """Vectorized exact feasibility over a stack of gain matrices.

    Returns ``(feasible, pmin, rho)`` with shapes (T,), (T, |S|), (T,).
    Rows of ``pmin`` are valid only where ``feasible`` is True.
    """
    S = check_subset(S, inst.K)
    T = gains.shape[0]
    if S.size == 0:
        return np.ones(T, bool), np.zeros((T, 0)), np.zeros(T)
    g = gains[np.ix_(np.arange(T), S, S)]
    diag = np.diagonal(g, axis1=1, axis2=2)
    gamma = inst.gamma[S]
    F = gamma[None, :, None] * g / diag[:, :, None]
    idx = np.arange(S.size)
    F[:, idx, idx] = 0.0
    u = gamma[None, :] * inst.eta[S][None, :] / diag
    rho = np.max(np.abs(np.linalg.eigvals(F)), axis=1)
    ok = rho < 1.0 - RHO_MARGIN
    pmin = np.zeros((T, S.size))
    if ok.any():
        A = np.eye(S.size)[None] - F[ok]
        pmin[ok] = np.linalg.solve(A, u[ok][..., None])[..., 0]
    feas = ok & np.all(pmin <= inst.pbar[S][None, :] * (1.0 + BUDGET_SLACK), axis=1)
    return feas, pmin, rho


def supported_exact(inst: NetworkInstance, samples: GainSampleSet, S) -> bool:
    """True iff the subset is exactly feasible under every sample."""
    S = check_subset(S, inst.K)
    if S.size == 0:
        return True
    feas, _, _ = feasibility_batch(inst, samples.gains, S)
    return bool(np.all(feas))


def sinr(inst: NetworkInstance, gain_matrix: np.ndarray, p: np.ndarray, S=None) -> np.ndarray:
    """Per-link SINR at powers p (length K, or length |S| when S is given)."""
    if S is None:
        S = np.arange(inst.K, dtype=np.intp)
    else:
        S = check_subset(S, inst.K)
    g = gain_matrix[np.ix_(S, S)]
    p = np.asarray(p, dtype=float)
    signal = np.diagonal(g) * p
    interference = g @ p - signal
    return signal / (inst.eta[S] + interference)
