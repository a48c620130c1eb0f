"""Tests for the estimator facade: sklearn protocol and prediction semantics."""

import numpy as np
import pytest
from sklearn.base import clone

from jpac.estimators import ChanceConstrainedAdmission
from jpac.formulation import sinr
from jpac.network import generate_instance, sample_gains


@pytest.fixture(scope="module")
def gain_data():
    inst = generate_instance(4, rng_seed=21)
    X = sample_gains(inst, 12, rng_seed=22).gains
    Xval = sample_gains(inst, 60, rng_seed=23).gains
    return X, Xval


@pytest.fixture(scope="module")
def fitted(gain_data):
    X, _ = gain_data
    return ChanceConstrainedAdmission().fit(X)


def test_get_params_round_trip():
    est = ChanceConstrainedAdmission(mode="constant", alpha_fraction=0.9)
    params = est.get_params()
    expected = {"gamma", "eta", "pbar", "mode", "alpha_fraction", "residual",
                "solver_config", "postprocess"}
    assert set(params) == expected
    assert params["mode"] == "constant"
    assert params["alpha_fraction"] == 0.9

    out = est.set_params(mode="adaptive", postprocess=False)
    assert out is est
    assert est.get_params()["mode"] == "adaptive"
    assert est.get_params()["postprocess"] is False

    with pytest.raises(ValueError):
        est.set_params(no_such_param=1)


def test_clone_is_unfitted(fitted):
    fresh = clone(fitted)
    assert fresh.get_params() == fitted.get_params()
    assert not hasattr(fresh, "support_")
    assert hasattr(fitted, "support_")


def test_fit_attributes(fitted, gain_data):
    X, _ = gain_data
    K = X.shape[1]
    assert fitted.n_links_ == K
    assert fitted.n_features_in_ == K
    assert fitted.instance_.K == K
    assert fitted.support_.dtype == np.intp
    assert np.array_equal(fitted.support_, np.sort(fitted.support_))
    assert np.array_equal(fitted.support_, fitted.outcome_.support)
    # subset evaluated against the training samples themselves
    assert fitted.support_.size >= 1


def test_default_budget_from_training_direct_gains(fitted, gain_data):
    X, _ = gain_data
    direct = np.median(np.diagonal(X, axis1=1, axis2=2), axis=0)
    gamma = fitted.instance_.gamma
    eta = fitted.instance_.eta
    np.testing.assert_allclose(fitted.instance_.pbar, 3.0 * gamma * eta / direct)


def test_get_support_mask_matches_indices(fitted):
    idx = fitted.get_support(indices=True)
    mask = fitted.get_support(indices=False)
    assert mask.dtype == bool
    assert mask.shape == (fitted.n_links_,)
    assert np.array_equal(np.flatnonzero(mask), idx)
    # returned indices are a copy, mutating them must not corrupt the fit
    idx[:] = 0
    assert np.array_equal(fitted.get_support(), fitted.support_)


def test_predict_and_score(fitted, gain_data):
    _, Xval = gain_data
    feas = fitted.predict(Xval)
    assert feas.dtype == bool
    assert feas.shape == (Xval.shape[0],)
    assert fitted.score(Xval) == pytest.approx(float(np.mean(feas)))


def test_predict_power_rows(fitted, gain_data):
    _, Xval = gain_data
    feas = fitted.predict(Xval)
    P = fitted.predict_power(Xval)
    assert P.shape == (Xval.shape[0], fitted.support_.size)
    assert np.all(np.isnan(P[~feas]))
    assert np.all(np.isfinite(P[feas]))
    assert np.all(P[feas] > 0)
    # minimal powers hit every SINR target with equality on the support
    S = fitted.support_
    gamma_S = fitted.instance_.gamma[S]
    for t in np.flatnonzero(feas)[:10]:
        s = sinr(fitted.instance_, Xval[t], P[t], S)
        np.testing.assert_allclose(s, gamma_S, rtol=1e-8)


def test_empty_support_vacuous_predictions(gain_data):
    X, Xval = gain_data
    est = ChanceConstrainedAdmission(pbar=1e-30).fit(X)
    assert est.support_.size == 0
    feas = est.predict(Xval)
    assert feas.all()
    assert est.score(Xval) == 1.0
    assert est.predict_power(Xval).shape == (Xval.shape[0], 0)


def test_constant_mode(gain_data):
    X, Xval = gain_data
    est = ChanceConstrainedAdmission(mode="constant").fit(X)
    p_const = est.outcome_.p_const
    assert p_const.shape == (est.support_.size,)
    feas = est.predict(Xval)
    P = est.predict_power(Xval)
    for t in range(Xval.shape[0]):
        if feas[t]:
            np.testing.assert_array_equal(P[t], p_const)
        else:
            assert np.all(np.isnan(P[t]))


def test_bad_inputs_raise(fitted, gain_data):
    X, Xval = gain_data
    with pytest.raises(ValueError):
        ChanceConstrainedAdmission().fit(X[0])
    with pytest.raises(ValueError):
        ChanceConstrainedAdmission().fit(-X)
    with pytest.raises(ValueError):
        ChanceConstrainedAdmission(mode="oracle").fit(X)
    with pytest.raises(ValueError):
        fitted.predict(Xval[:, :3, :3])
    fresh = ChanceConstrainedAdmission()
    with pytest.raises(Exception):
        fresh.predict(Xval)
