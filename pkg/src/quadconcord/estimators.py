"""Scikit-learn-style estimator wrappers.

Each concordance estimator is exposed as a fit-style estimator over an
(n_subjects, 2T) matrix of sequential differences, columns ordered
X_1..X_T, Y_1..Y_T.  After ``fit`` the computed rate is available as
``rate_`` and the full :class:`ConcordanceResult` as ``result_``, following
the convention of fit-only estimators such as covariance estimators.
``SequentialDifferencer`` turns raw (n, 2(T+1)) measurement series into that
difference matrix, so the estimators compose with pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .concordance import ccr, control1, control2, estimate_and_rate
from .exceptions import DataError
from .model import estimate_model
from .mvn import DEFAULT_MAX_EVALS, DEFAULT_TOL
from .series import AgreementSpec


def check_diff_matrix(X) -> np.ndarray:
    """Validate an (n, 2T) difference matrix: 2-D, finite, even column count."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_min_features=2)
    if X.shape[1] % 2 != 0:
        raise DataError(
            f"difference matrix needs an even number of columns (X block then "
            f"Y block), got {X.shape[1]}"
        )
    return X


class SequentialDifferencer(TransformerMixin, BaseEstimator):
    """Transform raw series [x*_1..x*_{T+1}, y*_1..y*_{T+1}] into differences.

    Input has shape (n, 2(T+1)); output has shape (n, 2T) with columns
    X_1..X_T, Y_1..Y_T where X_t = x*_{t+1} - x*_t.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_min_features=4)
        if X.shape[1] % 2 != 0:
            raise DataError(f"expected an even number of columns, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64, ensure_all_finite=True)
        if X.shape[1] != self.n_features_in_:
            raise DataError(
                f"expected {self.n_features_in_} columns, got {X.shape[1]}"
            )
        half = X.shape[1] // 2
        return np.hstack([np.diff(X[:, :half], axis=1), np.diff(X[:, half:], axis=1)])


class _ConcordanceEstimator(BaseEstimator):
    """Shared fit logic: validate, resolve the agreement spec, compute."""

    def _resolve_spec(self, T: int) -> AgreementSpec:
        m = getattr(self, "m", None)
        return AgreementSpec(T=T, m=T if m is None else m)

    def fit(self, X, y=None):
        X = check_diff_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.t_ = X.shape[1] // 2
        self.result_ = self._compute(X)
        self.rate_ = self.result_.value
        return self


class ConventionalConcordance(_ConcordanceEstimator):
    """Point-counting concordance rate with an exclusion square of half-width ``a``."""

    def __init__(self, a: float = 0.5):
        self.a = a

    def _compute(self, X):
        return ccr(X, self.a)


class PooledBinomialConcordance(_ConcordanceEstimator):
    """Binomial-tail rate (control1): pooled agreement probability, threshold m.

    ``m=None`` requires agreement at every time point (m = T).
    """

    def __init__(self, a: float = 0.5, m: int | None = None):
        self.a = a
        self.m = m

    def _compute(self, X):
        return control1(X, self.a, self._resolve_spec(X.shape[1] // 2))


class PerTimeBinomialConcordance(_ConcordanceEstimator):
    """Poisson-binomial-tail rate (control2): one agreement probability per time."""

    def __init__(self, a: float = 0.5, m: int | None = None):
        self.a = a
        self.m = m

    def _compute(self, X):
        return control2(X, self.a, self._resolve_spec(X.shape[1] // 2))


class ModelBasedConcordance(_ConcordanceEstimator):
    """Covariance-aware concordance rate under a fitted 2T-dim Gaussian model.

    Fitting estimates the model from all subjects and evaluates the
    conditional probability of at least m directional agreements given no
    point falls in the exclusion square.  Exposes ``model_`` after fit.
    """

    def __init__(
        self,
        a: float = 0.5,
        m: int | None = None,
        tol: float = DEFAULT_TOL,
        max_evals: int = DEFAULT_MAX_EVALS,
        seed: int = 0,
    ):
        self.a = a
        self.m = m
        self.tol = tol
        self.max_evals = max_evals
        self.seed = seed

    def _compute(self, X):
        self.model_ = estimate_model(X)
        return estimate_and_rate(
            X,
            self.a,
            self._resolve_spec(X.shape[1] // 2),
            tol=self.tol,
            max_evals=self.max_evals,
            seed=self.seed,
        )
