"""Reference oracles for small problems.

These deliberately share no machinery with the main solver: the global
stage is a plain grid scan, the local stage is projected subgradient
descent (primal) and supergradient ascent (dual) with Polyak steps, and
every returned value carries a duality-gap certificate.  Intended for
cross-checking on problems with a handful of variables; costs grow
exponentially with the variable count.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .formulation import NormalizedProblem, objective_value, supported_exact
from .network import GainSampleSet, NetworkInstance

_GRID_POINT_CAP = 20_000_000
_CHUNK = 250_000


@dataclass(frozen=True)
class OracleBound:
    """Two-sided enclosure of the optimal objective value."""

    value: float
    lower: float
    gap: float
    q: np.ndarray
    converged: bool


def _grid_axis(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def _objective_batch(prob: NormalizedProblem, Q: np.ndarray, shared: bool) -> np.ndarray:
    """Objective at a batch of points, shape (M, K) shared or (M, N, K)."""
    if shared:
        m = np.einsum("nkj,mj->mnk", prob.a, Q) - prob.c[None]
        power = prob.alpha * (Q @ prob.pbar)
    else:
        m = np.einsum("nkj,mnj->mnk", prob.a, Q) - prob.c[None]
        power = (prob.alpha / prob.N) * np.einsum("mnk,k->m", Q, prob.pbar)
    r = np.maximum(-m, 0.0) if prob.residual == "one_sided" else -m
    return np.sqrt(np.sum(r * r, axis=1)).sum(axis=1) + power


def _grid_scan(prob: NormalizedProblem, step: float, shared: bool):
    dims = prob.K if shared else prob.N * prob.K
    axis = _grid_axis(step)
    total = len(axis) ** dims
    if total > _GRID_POINT_CAP:
        raise ValueError(f"grid of {total} points exceeds the oracle cap; "
                         "coarsen the step or shrink the problem")
    best_val = np.inf
    best_q = None
    it = itertools.product(axis, repeat=dims)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            break
        Q = np.asarray(block)
        if not shared:
            Q = Q.reshape(len(block), prob.N, prob.K)
        vals = _objective_batch(prob, Q, shared)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_q = Q[i].copy()
    return best_q, best_val


def _primal_subgrad(prob, q, shared):
    m = prob.margins(q)
    r = np.maximum(-m, 0.0) if prob.residual == "one_sided" else -m
    nrm = np.linalg.norm(r, axis=0)
    w = np.divide(r, nrm[None, :], out=np.zeros_like(r), where=nrm[None, :] > 0)
    if shared:
        return -np.einsum("nk,nkj->j", w, prob.a) + prob.alpha * prob.pbar
    return -np.einsum("nk,nkj->nj", w, prob.a) + (prob.alpha / prob.N) * prob.pbar[None, :]


def _dual_value_supergrad(prob, lam, shared):
    base = float(np.sum(lam * prob.c))
    if shared:
        coef = prob.alpha * prob.pbar - np.einsum("nk,nkj->j", lam, prob.a)
        active = coef < 0.0
        val = base + float(np.sum(coef[active]))
        g = prob.c - np.einsum("nkj,j->nk", prob.a, active.astype(float))
    else:
        coef = (prob.alpha / prob.N) * prob.pbar[None, :] - np.einsum("nk,nkj->nj", lam, prob.a)
        active = (coef < 0.0).astype(float)
        val = base + float(np.sum(np.minimum(coef, 0.0)))
        g = prob.c - np.einsum("nj,nkj->nk", active, prob.a)
    return val, g


def _project_dual(prob, lam):
    if prob.residual == "one_sided":
        lam = np.maximum(lam, 0.0)
    nrm = np.linalg.norm(lam, axis=0)
    scale = np.where(nrm > 1.0, 1.0 / np.maximum(nrm, 1e-300), 1.0)
    return lam * scale[None, :]


def _drop_slack(prob, q, shared):
    """Exact power cleanup: a link whose own margins are all nonnegative
    can give back its smallest own margin without hurting anyone (the
    off-diagonal coefficients are nonpositive, so lower powers only raise
    the other margins).  One-sided residuals only."""
    if prob.residual != "one_sided":
        return q
    for _ in range(4):
        m = prob.margins(q)
        slack = np.min(m, axis=0) if shared else m
        drop = np.clip(slack, 0.0, None)
        if not np.any(drop > 1e-15):
            break
        q = np.clip(q - drop, 0.0, 1.0)
    return q


def _primal_polyak(prob, q, target, iters, shared, f_best, q_best):
    """Polyak subgradient descent aiming below ``target``; returns best seen.

    The trajectory itself is never modified (that would break the Fejer
    argument behind Polyak steps); each iterate is merely scored after an
    exact slack cleanup, and the cleaned point is recorded if better.
    """
    for _ in range(iters):
        f = objective_value(prob, q)
        q_sw = _drop_slack(prob, q, shared)
        f_sw = objective_value(prob, q_sw)
        if f_sw < f_best:
            f_best, q_best = f_sw, q_sw.copy()
        if f_best <= target:
            break
        g = _primal_subgrad(prob, q, shared)
        gg = float(np.vdot(g, g))
        if gg <= 1e-300:
            break
        q = np.clip(q - (f - target) / gg * g, 0.0, 1.0)
    return q, f_best, q_best


def _dual_polyak(prob, lam, target, iters, shared, d_best):
    """Polyak supergradient ascent aiming above ``target``; returns best seen."""
    for _ in range(iters):
        val, g = _dual_value_supergrad(prob, lam, shared)
        if val > d_best:
            d_best = val
        if d_best >= target:
            break
        gg = float(np.vdot(g, g))
        if gg <= 1e-300:
            break
        lam = _project_dual(prob, lam + (target - val) / gg * g)
    return lam, d_best


def certified_minimum(prob: NormalizedProblem, shared: bool = False,
                      grid_step: float = 0.05, rounds: int = 60,
                      iters_per_round: int = 800, tol: float = 1e-7) -> OracleBound:
    """Globally bound the optimal objective of the relaxation.

    Grid scan for a basin, then bisection on the optimal value: each
    round aims Polyak supergradient ascent (dual) and, failing that,
    Polyak subgradient descent (primal) at the midpoint of the current
    enclosure.  Strong duality holds, so for any midpoint away from the
    optimum one of the two sides can cross it and the enclosure width
    halves; rounds where neither crossed rerun with a doubled iteration
    budget.  Stops once the width falls below ``tol * max(1, |value|)``.
    """
    q, _ = _grid_scan(prob, grid_step, shared)
    q = _drop_slack(prob, q, shared)
    f_best = objective_value(prob, q)
    q_best = q.copy()
    lam = _project_dual(prob, np.maximum(-prob.margins(q_best), 0.0))
    d_best, _ = _dual_value_supergrad(prob, lam, shared)
    d_best = max(d_best, 0.0)  # objective is nonnegative on the box
    budget = iters_per_round

    for _ in range(rounds):
        target = tol * max(1.0, abs(f_best))
        if f_best - d_best <= target:
            break
        mid = 0.5 * (f_best + d_best)
        lam, d_best = _dual_polyak(prob, lam, mid, budget, shared, d_best)
        if d_best < mid:
            q, f_best, q_best = _primal_polyak(prob, q, mid, budget, shared,
                                               f_best, q_best)
            if f_best > mid:
                budget = min(budget * 2, 16 * iters_per_round)

    gap = f_best - d_best
    return OracleBound(value=f_best, lower=d_best, gap=gap, q=q_best,
                       converged=gap <= tol * max(1.0, abs(f_best)))


def max_admissible_exhaustive(inst: NetworkInstance, samples: GainSampleSet):
    """Largest subset feasible under every sample, by exhaustive search.

    Returns (size, subset) for the first maximizing subset in
    lexicographic order.  Cost is exponential in the number of links.
    """
    if inst.K > 16:
        raise ValueError("exhaustive search is limited to 16 links")
    links = range(inst.K)
    for size in range(inst.K, 0, -1):
        for S in itertools.combinations(links, size):
            subset = np.asarray(S, dtype=np.intp)
            if supported_exact(inst, samples, subset):
                return size, subset
    return 0, np.zeros(0, dtype=np.intp)
