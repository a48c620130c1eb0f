"""Deflation rounds, removal scoring, and the admission front-end."""

import numpy as np
import pytest

from jpac.deflation import (admission_control, constant_power_min,
                            perfect_csi_benchmark, removal_rule)
from jpac.formulation import (NormalizedProblem, exact_feasibility, normalize,
                              supported_exact)
from jpac.network import generate_instance, sample_gains, subset_instance, subset_samples


def toy_problem(a, c, pbar=None, alpha=None):
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    N, K = c.shape
    pbar = np.ones(K) if pbar is None else np.asarray(pbar, dtype=float)
    alpha = 0.5 / float(np.sum(pbar)) if alpha is None else alpha
    return NormalizedProblem(K=K, N=N, a=a, c=c, pbar=pbar, alpha=alpha,
                             eta=np.full(K, 1e-12))


def test_removal_rule_picks_heavy_interferer():
    # link 2 exchanges by far the most interference
    a = np.array([[[1.0, -0.1, -3.0],
                   [-0.1, 1.0, -3.0],
                   [-2.0, -2.0, 1.0]]])
    c = np.array([[0.5, 0.5, 0.5]])
    q = np.array([[1.0, 1.0, 1.0]])
    assert removal_rule(toy_problem(a, c), q) == 2


def test_removal_rule_ignores_self_coefficient():
    # no interference at all: the unit self-coefficient must not leak
    # into the footprint, so the tie goes to the larger violation
    a = np.eye(2)[None]
    c = np.array([[1.5, 1.2]])
    q = np.array([[1.0, 0.6]])
    # violations: 0.5 for link 0, 0.6 for link 1
    assert removal_rule(toy_problem(a, c), q) == 1


def test_removal_rule_tie_breaks_to_smaller_index():
    a = np.eye(2)[None]
    c = np.array([[1.5, 1.5]])
    q = np.array([[1.0, 1.0]])
    assert removal_rule(toy_problem(a, c), q) == 0


def test_removal_rule_eta_offset_breaks_tie():
    a = np.eye(2)[None]
    c = np.array([[1.5, 1.5]])
    q = np.array([[1.0, 1.0]])
    assert removal_rule(toy_problem(a, c), q, eta=np.array([0.0, 1.0])) == 1


def test_removal_rule_worst_sample_selection():
    # link 0 is clean on sample 0 but hammered on sample 1; the rule must
    # score it at its violated sample
    a = np.array([[[1.0, -0.05], [-0.05, 1.0]],
                  [[1.0, -4.00], [-0.05, 1.0]]])
    c = np.full((2, 2), 0.3)
    q = np.ones((2, 2))
    assert removal_rule(toy_problem(a, c), q) == 0


def test_constant_power_min_feasible_fixed_point():
    inst = generate_instance(2, rng_seed=71)
    prob = normalize(inst, sample_gains(inst, 4, rng_seed=72))
    feasible, q, iters = constant_power_min(prob)
    assert feasible
    assert np.all(prob.margins(q) >= -1e-9)
    # least fixed point: the requirement map reproduces q
    B = np.abs(prob.a).copy()
    idx = np.arange(prob.K)
    B[:, idx, idx] = 0.0
    target = np.max(prob.c + np.einsum("nkj,j->nk", B, q), axis=0)
    np.testing.assert_allclose(np.minimum(target, 1.0), q, atol=1e-10)
    assert iters >= 1


def test_constant_power_min_infeasible():
    # mutual interference too strong for any shared profile
    a = np.array([[[1.0, -2.0], [-2.0, 1.0]]])
    c = np.array([[0.4, 0.4]])
    feasible, q, _ = constant_power_min(toy_problem(a, c))
    assert not feasible


def test_admission_outcome_invariants(inst3, samples3):
    out = admission_control(inst3, samples3, mode="adaptive")
    assert out.mode == "adaptive"
    assert sorted(out.support.tolist()) == out.support.tolist()
    assert set(out.support) | set(out.removal_order) >= set(range(inst3.K))
    assert set(out.readmitted) <= set(out.removal_order)
    assert set(out.readmitted) <= set(out.support)
    assert out.n_solves == len(out.rounds)
    assert out.n_supported == out.support.size
    assert supported_exact(inst3, samples3, out.support)
    assert out.q_const is None


def test_admission_constant_mode_profile(inst3, samples3):
    out = admission_control(inst3, samples3, mode="constant")
    S = out.support
    if S.size:
        prob = normalize(subset_instance(inst3, S), subset_samples(samples3, S))
        assert np.all(prob.margins(out.q_const) >= -1e-9)
        np.testing.assert_allclose(out.p_const, out.q_const * inst3.pbar[S], rtol=1e-14)
        assert np.all(out.p_const <= inst3.pbar[S] * (1.0 + 1e-9))
    else:
        assert out.p_const.size == 0


def test_constant_support_is_adaptive_supported(inst3, samples3):
    # a single shared profile per subset is one admissible adaptive
    # profile, so constant-mode support must be adaptive-supportable
    out = admission_control(inst3, samples3, mode="constant")
    assert supported_exact(inst3, samples3, out.support)


def test_postprocess_only_adds(inst3, samples3):
    base = admission_control(inst3, samples3, mode="adaptive", postprocess=False)
    post = admission_control(inst3, samples3, mode="adaptive", postprocess=True)
    assert set(base.support) <= set(post.support)
    assert not base.readmitted


def test_fully_supportable_instance_needs_no_solve():
    # huge budgets and a single benign sample: all links admitted at once
    inst = generate_instance(2, rng_seed=71)
    boosted = subset_instance(inst, [0, 1])
    samples = sample_gains(inst, 1, rng_seed=72)
    out = admission_control(boosted, samples, mode="adaptive")
    if out.n_supported == 2:
        assert out.n_solves == 0
        assert out.removal_order == ()


def test_unknown_mode_rejected(inst3, samples3):
    with pytest.raises(ValueError):
        admission_control(inst3, samples3, mode="robust")


def test_perfect_csi_benchmark_feasible_by_construction(inst3):
    g = sample_gains(inst3, 1, rng_seed=73).gains[0]
    out, rep = perfect_csi_benchmark(inst3, g)
    if out.support.size:
        assert rep.feasible
        assert rep.pmin.shape == (out.support.size,)
    assert exact_feasibility(inst3, g, out.support).feasible
