"""scikit-learn compatible density estimator for the Modi family."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_sample, check_unit_interval
from .estimation import FitConfig, fit_mle
from .family import get_model


class ModiDistribution(DensityMixin, TransformerMixin, BaseEstimator):
    """Maximum-likelihood fit of one Modi-family lifetime model.

    Parameters
    ----------
    model : {"mlfr", "mr", "mw", "me", "mf"}
    n_starts, seed, max_iter, tol : optimizer settings passed to ``FitConfig``.
    beta_ref : float
        Value at which ``beta`` is reported; only ``alpha**beta`` is identified.
    zeta : float
        Wald intervals are built at level ``1 - zeta``.

    Attributes
    ----------
    fit_result_ : FitResult
    params_ : fitted parameter object
    theta_ : float
    loglik_ : float
    converged_ : bool
    n_features_in_ : int, always 1

    ``X`` is a 1-D array of lifetimes or a single-column 2-D array.
    ``transform`` returns the probability integral transform ``F(x)``.
    """

    def __init__(self, model="mlfr", n_starts=6, seed=0, max_iter=2000, tol=1e-10,
                 beta_ref=1.0, zeta=0.05):
        self.model = model
        self.n_starts = n_starts
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.beta_ref = beta_ref
        self.zeta = zeta

    def fit(self, X, y=None):
        x = check_sample(X)
        config = FitConfig(max_iter=self.max_iter, tol=self.tol, n_starts=self.n_starts,
                           seed=self.seed, beta_ref=self.beta_ref)
        res = fit_mle(self.model, x, config, zeta=self.zeta)
        self.fit_result_ = res
        self.params_ = res.params
        self.theta_ = res.theta_hat
        self.loglik_ = res.loglik
        self.converged_ = res.converged
        self.n_features_in_ = 1
        return self

    def _points(self, X):
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 2:
            if arr.shape[1] != 1:
                raise ValueError(f"expected a single feature column, got shape {arr.shape}")
            return check_array(arr)[:, 0]
        return check_array(arr.reshape(-1, 1))[:, 0]

    def score_samples(self, X):
        """Log-density of each observation."""
        check_is_fitted(self)
        return np.asarray(get_model(self.model).logpdf(self.params_, self._points(X)), dtype=float)

    def score(self, X, y=None):
        """Total log-likelihood of ``X``."""
        return float(np.sum(self.score_samples(X)))

    def transform(self, X):
        check_is_fitted(self)
        u = get_model(self.model).cdf(self.params_, self._points(X))
        return np.asarray(u, dtype=float).reshape(-1, 1)

    def inverse_transform(self, U):
        check_is_fitted(self)
        u = check_unit_interval(self._points(U), open_left=True)
        return np.asarray(get_model(self.model).ppf(self.params_, u), dtype=float).reshape(-1, 1)

    def sample(self, n_samples=1, random_state=None):
        """Draw ``n_samples`` lifetimes as an ``(n_samples, 1)`` array."""
        check_is_fitted(self)
        x = get_model(self.model).sample(self.params_, n_samples, seed=random_state)
        return np.asarray(x, dtype=float).reshape(-1, 1)

    def hazard(self, X):
        check_is_fitted(self)
        return np.asarray(get_model(self.model).hazard(self.params_, self._points(X)), dtype=float)
