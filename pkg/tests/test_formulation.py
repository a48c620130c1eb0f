"""Normalization, objective algebra, and exact feasibility oracles."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jpac.formulation import (NormalizedProblem, exact_feasibility,
                              feasibility_batch, normalize, objective_value,
                              sinr, spectral_radius, supported_exact)
from jpac.network import NetworkInstance, generate_instance, sample_gains


def manual_objective(prob, q):
    """Independent loop-based evaluation of the group-norm objective."""
    total = 0.0
    Q = q if q.ndim == 2 else np.broadcast_to(q, (prob.N, prob.K))
    for k in range(prob.K):
        sq = 0.0
        for n in range(prob.N):
            m = float(prob.a[n, k] @ Q[n]) - prob.c[n, k]
            r = max(-m, 0.0) if prob.residual == "one_sided" else -m
            sq += r * r
        total += np.sqrt(sq)
    if q.ndim == 2:
        total += prob.alpha / prob.N * sum(float(prob.pbar @ Q[n]) for n in range(prob.N))
    else:
        total += prob.alpha * float(prob.pbar @ q)
    return total


def test_normalize_coefficients(inst3, samples3, prob3):
    idx = np.arange(3)
    np.testing.assert_array_equal(prob3.a[:, idx, idx], 1.0)
    off = prob3.a.copy()
    off[:, idx, idx] = 0.0
    assert np.all(off <= 0.0)
    assert np.all(prob3.c > 0.0)
    assert prob3.alpha == pytest.approx(0.999 / float(np.sum(inst3.pbar)))
    # spot-check one off-diagonal coefficient against its definition
    n, k, j = 2, 0, 1
    g = samples3.gains
    expected = -(inst3.gamma[k] * g[n, k, j] * inst3.pbar[j]
                 / (g[n, k, k] * inst3.pbar[k]))
    assert prob3.a[n, k, j] == pytest.approx(expected, rel=1e-14)


def test_normalize_rejects_bad_fraction(inst3, samples3):
    with pytest.raises(ValueError):
        normalize(inst3, samples3, alpha_fraction=0.0)
    with pytest.raises(ValueError):
        normalize(inst3, samples3, alpha_fraction=1.0)


def test_normalized_problem_validation(prob3):
    with pytest.raises(ValueError):
        NormalizedProblem(K=2, N=1, a=np.ones((1, 2, 2)), c=np.ones((1, 3)),
                          pbar=np.ones(2), alpha=0.1, eta=np.ones(2))
    with pytest.raises(ValueError):
        NormalizedProblem(K=2, N=1, a=np.ones((1, 2, 2)), c=np.ones((1, 2)),
                          pbar=np.ones(2), alpha=0.7, eta=np.ones(2))
    with pytest.raises(ValueError):
        NormalizedProblem(K=2, N=1, a=np.ones((1, 2, 2)), c=np.ones((1, 2)),
                          pbar=np.ones(2), alpha=0.1, eta=np.ones(2),
                          residual="huber")
    assert not prob3.a.flags.writeable


def test_objective_matches_manual(prob3, rng):
    for _ in range(5):
        q_shared = rng.uniform(0.0, 1.0, prob3.K)
        q_adapt = rng.uniform(0.0, 1.0, (prob3.N, prob3.K))
        assert objective_value(prob3, q_shared) == pytest.approx(
            manual_objective(prob3, q_shared), rel=1e-12)
        assert objective_value(prob3, q_adapt) == pytest.approx(
            manual_objective(prob3, q_adapt), rel=1e-12)


def test_two_sided_dominates_one_sided(inst3, samples3, rng):
    one = normalize(inst3, samples3, residual="one_sided")
    two = normalize(inst3, samples3, residual="two_sided")
    q = rng.uniform(0.0, 1.0, (samples3.N, inst3.K))
    assert np.all(one.group_norms(q) <= two.group_norms(q) + 1e-15)


def test_normalization_identity(inst3, samples3, prob3, rng):
    # margins nonnegative exactly when per-link SINR meets target
    for n in range(samples3.N):
        q = rng.uniform(0.0, 1.0, inst3.K)
        s = sinr(inst3, samples3.gains[n], q * inst3.pbar)
        m = prob3.margins(q)[n]
        np.testing.assert_array_equal(m >= 0.0, s >= inst3.gamma)


def test_budget_scaling_leaves_objective_unchanged(inst3, samples3, rng):
    # scaling eta and pbar together rescales nothing in normalized space
    scale = 7.3
    scaled = NetworkInstance(K=inst3.K, gamma=inst3.gamma, eta=inst3.eta * scale,
                             pbar=inst3.pbar * scale, kappa=inst3.kappa,
                             dist=inst3.dist)
    p1 = normalize(inst3, samples3)
    p2 = normalize(scaled, samples3)
    np.testing.assert_allclose(p1.a, p2.a, rtol=1e-13)
    np.testing.assert_allclose(p1.c, p2.c, rtol=1e-13)
    q = rng.uniform(0.0, 1.0, (samples3.N, inst3.K))
    assert objective_value(p1, q) == pytest.approx(objective_value(p2, q), rel=1e-12)


@given(st.integers(0, 10_000))
def test_spectral_radius_matches_eigvals(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 7)
    F = rng.uniform(0.0, 1.0, (n, n))
    F[np.arange(n), np.arange(n)] = 0.0
    expected = float(np.max(np.abs(np.linalg.eigvals(F))))
    assert spectral_radius(F) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_spectral_radius_large_matrix_path():
    # above the dense-eig cutoff the power-iteration branch takes over
    rng = np.random.default_rng(99)
    F = rng.uniform(0.0, 1.0, (70, 70))
    F[np.arange(70), np.arange(70)] = 0.0
    expected = float(np.max(np.abs(np.linalg.eigvals(F))))
    assert spectral_radius(F) == pytest.approx(expected, rel=1e-8)


def two_link_instance(pbar):
    return NetworkInstance(K=2, gamma=np.ones(2), eta=np.ones(2),
                           pbar=np.asarray(pbar, dtype=float), kappa=np.inf,
                           dist=np.ones((2, 2)))


def test_exact_feasibility_closed_form():
    # gamma=1, eta=1, G=[[2,1],[1,2]] gives F=[[0,.5],[.5,0]], pmin=(1,1)
    G = np.array([[2.0, 1.0], [1.0, 2.0]])
    rep = exact_feasibility(two_link_instance([2.0, 2.0]), G, [0, 1])
    assert rep.feasible
    assert rep.spectral_radius == pytest.approx(0.5, rel=1e-12)
    np.testing.assert_allclose(rep.pmin, [1.0, 1.0], rtol=1e-12)

    tight = exact_feasibility(two_link_instance([0.9, 2.0]), G, [0, 1])
    assert not tight.feasible and "budget" in tight.diagnostic

    # gamma * g_off / g_diag = 1 puts the spectral radius exactly at one
    G_crit = np.array([[1.0, 1.0], [1.0, 1.0]])
    crit = exact_feasibility(two_link_instance([5.0, 5.0]), G_crit, [0, 1])
    assert not crit.feasible and crit.spectral_radius == pytest.approx(1.0)


def test_exact_feasibility_empty_subset(inst3, samples3):
    rep = exact_feasibility(inst3, samples3.gains[0], [])
    assert rep.feasible and rep.pmin.size == 0


def test_feasibility_batch_matches_loop(inst3, samples3):
    S = [0, 1, 2]
    feas, pmin, rho = feasibility_batch(inst3, samples3.gains, S)
    for n in range(samples3.N):
        rep = exact_feasibility(inst3, samples3.gains[n], S)
        assert feas[n] == rep.feasible
        assert rho[n] == pytest.approx(rep.spectral_radius, rel=1e-10)
        if rep.feasible:
            np.testing.assert_allclose(pmin[n], rep.pmin, rtol=1e-10)


def test_supported_exact_consistency(inst3, samples3):
    for S in ([], [0], [1, 2], [0, 1, 2]):
        expected = all(exact_feasibility(inst3, samples3.gains[n], S).feasible
                       for n in range(samples3.N))
        assert supported_exact(inst3, samples3, S) == expected


def test_pmin_sits_exactly_on_targets():
    inst = generate_instance(3, rng_seed=51)
    g = sample_gains(inst, 1, rng_seed=52).gains[0]
    rep = exact_feasibility(inst, g, [0, 1, 2])
    assert rep.feasible
    # minimal powers meet every target with equality
    np.testing.assert_allclose(sinr(inst, g, rep.pmin), inst.gamma, rtol=1e-10)
    # uniformly shrinking them loses every link (noise does not shrink)
    s = sinr(inst, g, 0.99 * rep.pmin)
    assert np.all(s < inst.gamma)
