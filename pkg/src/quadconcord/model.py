"""Gaussian model for the stacked difference vector Z = (X_1..X_T, Y_1..Y_T)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, DegenerateModelError, EstimationError, CholeskyError
from .series import DiffSeries

SYMMETRY_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Mean vector and covariance of the 2T-dimensional difference vector.

    Coordinates are ordered X_1..X_T then Y_1..Y_T.  The covariance must be
    symmetric (absolute tolerance 1e-10) and strictly positive definite;
    positive semi-definite but singular matrices are rejected with
    :class:`DegenerateModelError`.
    """

    mean: np.ndarray
    cov: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).copy()
        cov = np.asarray(self.cov, dtype=np.float64).copy()
        if mean.ndim != 1:
            raise DataError(f"mean must be a vector, got shape {mean.shape}")
        dim = mean.size
        if dim < 2 or dim % 2 != 0:
            raise DataError(f"model dimension must be a positive even number 2T, got {dim}")
        if cov.shape != (dim, dim):
            raise DataError(f"cov must have shape ({dim}, {dim}), got {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise DataError("model parameters contain NaN or infinite values")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=SYMMETRY_ATOL):
            raise DataError(
                f"cov is not symmetric within {SYMMETRY_ATOL} "
                f"(max asymmetry {np.max(np.abs(cov - cov.T)):.3e})"
            )
        cov = (cov + cov.T) / 2.0
        from .mvn import cholesky  # deferred: mvn imports nothing from here

        try:
            chol = cholesky(cov)
        except CholeskyError as exc:
            eigvals = np.linalg.eigvalsh(cov)
            kind = "singular (positive semi-definite)" if eigvals.min() >= -1e-10 * max(
                cov.trace(), 1.0
            ) else "indefinite"
            raise DegenerateModelError(
                f"covariance is {kind}; Cholesky failed at pivot {exc.pivot} "
                f"(eigenvalues {np.array2string(eigvals, precision=3)})",
                eigenvalues=eigvals,
            ) from exc
        mean.flags.writeable = False
        cov.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    @property
    def n_diffs(self) -> int:
        """T, the number of difference time points."""
        return self.dim // 2


def stack_diffs(diffs) -> np.ndarray:
    """Stack per-subject differences into an (n, 2T) matrix, X block first.

    Accepts a list of :class:`DiffSeries` or an already-stacked (n, 2T) array.
    """
    if isinstance(diffs, np.ndarray):
        z = np.asarray(diffs, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] < 2 or z.shape[1] % 2 != 0:
            raise DataError(
                f"stacked differences must have shape (n, 2T), got {z.shape}"
            )
        if z.shape[0] < 1:
            raise EstimationError("no subjects provided")
        if not np.all(np.isfinite(z)):
            raise DataError("stacked differences contain NaN or infinite values")
        return z
    if not diffs:
        raise EstimationError("no subjects provided")
    T = diffs[0].n_diffs
    bad = [d.subject_id for d in diffs if d.n_diffs != T]
    if bad:
        raise DataError(
            f"all subjects must share the same number of differences T={T}; "
            f"mismatching subjects: {bad}"
        )
    return np.array([np.concatenate([d.x, d.y]) for d in diffs], dtype=np.float64)


def estimate_model(diffs) -> GaussianModel:
    """Sample mean and unbiased (divisor n-1) covariance of the stacked diffs.

    Accepts a list of :class:`DiffSeries` or an (n, 2T) array.  Requires
    n >= 2 subjects; warns when n < 2T+1 where the sample covariance is
    singular or nearly so.
    """
    z = stack_diffs(diffs)
    n, dim = z.shape
    if n < 2:
        raise EstimationError(f"need at least 2 subjects to estimate a covariance, got {n}")
    if n < dim + 1:
        warnings.warn(
            f"only {n} subjects for a {dim}-dimensional model; "
            f"at least {dim + 1} are recommended",
            stacklevel=2,
        )
    mean = z.mean(axis=0)
    centered = z - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianModel(mean=mean, cov=cov)
