"""Estimator-style wrappers for batch use in pipelines.

Each row of ``X`` is a scalar field on the wrapped space (shape
``(n_samples, n_points)``).
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import InvalidArgumentError
from .hopf_lax import hopf_lax
from .inequalities import lsi_check, lsi_constant_estimate


def _rows(X, space):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != space.n_points:
        raise InvalidArgumentError(
            f"expected {space.n_points} columns (one per point), got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("fields must be finite")
    return X


class HopfLaxTransformer(TransformerMixin, BaseEstimator):
    """Map each field ``g`` to ``Q_t g``.

    Parameters
    ----------
    space : MetricSpace
    t : float
    q : float
        Hamiltonian exponent of the power pair.
    """

    def __init__(self, space=None, t=1.0, q=2.0):
        self.space = space
        self.t = t
        self.q = q

    def fit(self, X=None, y=None):
        if self.space is None:
            raise InvalidArgumentError("HopfLaxTransformer needs a space")
        if X is not None:
            _rows(X, self.space)
        self.n_features_in_ = self.space.n_points
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _rows(X, self.space)
        out = np.empty_like(X)
        self.argmin_ = np.empty(X.shape, dtype=np.intp)
        for k, g in enumerate(X):
            res = hopf_lax(self.space, g, self.t, self.q)
            out[k] = res.u
            self.argmin_[k] = res.argmin
        return out


class LSIConstantEstimator(BaseEstimator):
    """Largest q-log-Sobolev constant consistent with a family of test functions.

    ``fit`` stores ``K_``; ``score`` returns the smallest LSI margin on new
    fields at that constant (non-negative when the estimate holds for them).
    """

    def __init__(self, space=None, mu=None, q=2.0):
        self.space = space
        self.mu = mu
        self.q = q

    def fit(self, X, y=None):
        X = _rows(X, self.space)
        self.K_ = lsi_constant_estimate(self.space, self.mu, list(X), self.q)
        return self

    def score(self, X, y=None):
        check_is_fitted(self, "K_")
        X = _rows(X, self.space)
        return min(lsi_check(self.space, self.mu, f, self.q, self.K_).margin for f in X)
