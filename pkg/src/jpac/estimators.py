"""Estimator-style facade over the admission pipeline.

Wraps instance construction, subset selection, and held-out validation
in the fit/predict/score idiom so the pipeline composes with generic
model-selection tooling.  X is always a stack of gain matrices, shape
(n_samples, n_links, n_links); there is no y.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .deflation import admission_control
from .formulation import feasibility_batch
from .network import GainSampleSet, NetworkInstance, db_to_linear
from .powerctl import meets_targets
from .validation import check_gain_samples


class ChanceConstrainedAdmission(BaseEstimator):
    """Select a link subset supportable under sampled channel gains.

    Parameters mirror the functional API.  ``gamma`` (SINR targets),
    ``eta`` (noise powers), and ``pbar`` (power budgets) accept scalars
    or per-link arrays; defaults are a 2 dB target, -90 dB noise, and
    budgets that give each link a 3x margin on its median direct gain
    from the training samples.

    After ``fit``, ``support_`` holds the admitted link indices and
    ``predict`` reports, per held-out gain matrix, whether that subset
    can meet every target within budget (adaptive mode) or whether the
    fitted constant powers do (constant mode).  ``score`` is the mean of
    ``predict``, i.e. one minus the empirical outage.
    """

    def __init__(self, gamma=None, eta=None, pbar=None, mode="adaptive",
                 alpha_fraction=0.999, residual="one_sided",
                 solver_config=None, postprocess=True):
        self.gamma = gamma
        self.eta = eta
        self.pbar = pbar
        self.mode = mode
        self.alpha_fraction = alpha_fraction
        self.residual = residual
        self.solver_config = solver_config
        self.postprocess = postprocess

    def _build_instance(self, X: np.ndarray) -> NetworkInstance:
        K = X.shape[1]
        gamma = db_to_linear(2.0) if self.gamma is None else self.gamma
        eta = db_to_linear(-90.0) if self.eta is None else self.eta
        if self.pbar is None:
            direct = np.median(np.diagonal(X, axis1=1, axis2=2), axis=0)
            gamma_v = np.broadcast_to(np.asarray(gamma, dtype=float), (K,))
            eta_v = np.broadcast_to(np.asarray(eta, dtype=float), (K,))
            pbar = 3.0 * gamma_v * eta_v / direct
        else:
            pbar = self.pbar
        return NetworkInstance(K=K, gamma=gamma, eta=eta, pbar=pbar, kappa=np.inf)

    def fit(self, X, y=None):
        """Run admission control on sampled gain matrices X (N, K, K)."""
        X = check_gain_samples(X)
        if self.mode not in ("adaptive", "constant"):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.instance_ = self._build_instance(X)
        samples = GainSampleSet(N=X.shape[0], gains=X)
        self.outcome_ = admission_control(
            self.instance_, samples, mode=self.mode,
            alpha_fraction=self.alpha_fraction, residual=self.residual,
            solver_config=self.solver_config, postprocess=self.postprocess)
        self.support_ = self.outcome_.support
        self.n_links_ = X.shape[1]
        self.n_features_in_ = X.shape[1]
        return self

    def get_support(self, indices: bool = True) -> np.ndarray:
        """Admitted links as indices, or as a boolean mask over all links."""
        check_is_fitted(self, "support_")
        if indices:
            return self.support_.copy()
        mask = np.zeros(self.n_links_, dtype=bool)
        mask[self.support_] = True
        return mask

    def predict(self, X) -> np.ndarray:
        """Per-draw feasibility of the fitted subset on new gains (T, K, K)."""
        check_is_fitted(self, "support_")
        X = check_gain_samples(X, self.n_links_)
        if self.support_.size == 0:
            return np.ones(X.shape[0], dtype=bool)
        if self.mode == "constant":
            return meets_targets(self.instance_, X, self.support_, self.outcome_.p_const)
        feas, _, _ = feasibility_batch(self.instance_, X, self.support_)
        return feas

    def predict_power(self, X) -> np.ndarray:
        """Supporting powers per draw, shape (T, |support|); NaN rows on outage.

        Adaptive mode returns the minimal per-draw powers, constant mode
        the fitted shared vector wherever it meets the targets.
        """
        check_is_fitted(self, "support_")
        X = check_gain_samples(X, self.n_links_)
        T = X.shape[0]
        if self.support_.size == 0:
            return np.zeros((T, 0))
        if self.mode == "constant":
            out = np.full((T, self.support_.size), np.nan)
            ok = meets_targets(self.instance_, X, self.support_, self.outcome_.p_const)
            out[ok] = self.outcome_.p_const
            return out
        feas, pmin, _ = feasibility_batch(self.instance_, X, self.support_)
        out = np.full((T, self.support_.size), np.nan)
        out[feas] = pmin[feas]
        return out

    def score(self, X, y=None) -> float:
        """Fraction of held-out draws on which the fitted subset survives."""
        return float(np.mean(self.predict(X)))
