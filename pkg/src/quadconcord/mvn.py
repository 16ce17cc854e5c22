"""Multivariate-normal machinery: Cholesky, rectangle probabilities, sampling.

``rect_prob`` estimates P(lower < Z < upper) for Z ~ N(mean, cov) with a
Genz-style separation-of-variables transform integrated by a randomly
shifted lattice rule.  The returned error is three times the standard error
over the random shifts, so it behaves like a 3-sigma bound.  Everything is
driven by explicit integer seeds through counter-based generators; repeated
calls with identical arguments return identical results.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import _sov
from ._rng import generator
from .exceptions import CholeskyError, ConfigError, DataError
from .model import GaussianModel

DEFAULT_TOL = 1e-6
DEFAULT_MAX_EVALS = 2**22
N_SHIFTS = 12
MAX_DIM = 32


@dataclass(frozen=True, eq=False)
class SignedRectangle:
    """Hyper-rectangle with +-inf bounds and an inclusion-exclusion weight."""

    lower: np.ndarray
    upper: np.ndarray
    weight: int = 1

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64).copy()
        upper = np.asarray(self.upper, dtype=np.float64).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError(
                f"bounds must be matching vectors, got {lower.shape} and {upper.shape}"
            )
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ConfigError("rectangle bounds must not be NaN")
        if np.any(lower > upper):
            raise ConfigError("rectangle requires lower <= upper in every coordinate")
        if self.weight not in (-1, 1):
            raise ConfigError(f"weight must be +1 or -1, got {self.weight}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    def bounds_key(self) -> bytes:
        """Byte signature of the bounds, used for memoization and seeding."""
        return self.lower.tobytes() + self.upper.tobytes()


@dataclass(frozen=True)
class ProbEstimate:
    """Probability estimate with a 3-sigma error bound and evaluation count."""

    value: float
    abs_error: float
    evaluations: int

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ConfigError(f"probability must lie in [0, 1], got {self.value}")
        if self.abs_error < 0.0:
            raise ConfigError("abs_error must be >= 0")


def cholesky(cov) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T == cov.

    Raises :class:`CholeskyError` naming the failing pivot (1-based) when the
    matrix is not positive definite.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DataError(f"expected a square matrix, got shape {cov.shape}")
    n = cov.shape[0]
    if n < 1:
        raise DataError("matrix dimension must be >= 1")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10):
        raise DataError("matrix is not symmetric within 1e-10")
    scale = max(float(np.max(np.abs(np.diag(cov)))), 1.0)
    L = np.zeros_like(cov)
    for k in range(n):
        pivot = cov[k, k] - L[k, :k] @ L[k, :k]
        if pivot <= scale * 1e-14:
            raise CholeskyError(
                f"matrix is not positive definite (pivot {k + 1} = {pivot:.3e})",
                pivot=k + 1,
            )
        L[k, k] = math.sqrt(pivot)
        if k + 1 < n:
            L[k + 1 :, k] = (cov[k + 1 :, k] - L[k + 1 :, :k] @ L[k, :k]) / L[k, k]
    return L


def _combine(value, err, est, e):
    # inverse-variance pooling of two independent estimates
    if err == np.inf:
        return est, e
    if e == 0.0:
        return est, 0.0
    w = err * err / (err * err + e * e)
    return value + w * (est - value), err * e / math.sqrt(err * err + e * e)


def rect_prob(
    model: GaussianModel,
    rect: SignedRectangle,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    seed: int = 0,
) -> ProbEstimate:
    """Estimate P(lower < Z < upper) for Z ~ N(model.mean, model.cov).

    Integration stops once the 3-sigma shift error drops to ``tol`` or the
    evaluation budget is spent; in the latter case ``evaluations`` equals
    ``max_evals`` exactly, flagging the truncation.  The rectangle's
    ``weight`` is not applied here; callers combine weighted terms.
    """
    if rect.dim != model.dim:
        raise ConfigError(
            f"rectangle dimension {rect.dim} does not match model dimension {model.dim}"
        )
    if model.dim > MAX_DIM:
        raise ConfigError(f"dimensions beyond {MAX_DIM} are not supported")
    if tol <= 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if max_evals < N_SHIFTS * _sov.LADDER[0]:
        raise ConfigError(f"max_evals too small; need at least {N_SHIFTS * _sov.LADDER[0]}")

    lo = rect.lower - model.mean
    hi = rect.upper - model.mean
    if np.any(lo == hi):
        return ProbEstimate(0.0, 0.0, 0)
    if np.all(np.isneginf(lo)) and np.all(np.isposinf(hi)):
        return ProbEstimate(1.0, 0.0, 0)

    cho, tlo, thi = _sov.ordered_cholesky(model.cov, lo, hi)
    d = model.dim
    seed64 = np.uint64(seed & (2**64 - 1))

    value = 0.0
    err = np.inf
    evals = 0
    idx = 0
    round_idx = 0
    ladder = _sov.LADDER
    while True:
        n_pts = ladder[idx]
        zvec = _sov.lattice_vector(d - 1, n_pts)
        batches = _sov._sov_batches(
            cho, tlo, thi, zvec, n_pts, N_SHIFTS, seed64, round_idx
        ).tolist()
        round_idx += 1
        est = math.fsum(batches) / N_SHIFTS
        var = math.fsum((b - est) ** 2 for b in batches) / (N_SHIFTS - 1)
        e = 3.0 * math.sqrt(var / N_SHIFTS)
        value, err = _combine(value, err, est, e)
        evals += N_SHIFTS * n_pts
        if err <= tol:
            break
        if evals >= max_evals:
            evals = max_evals
            break
        if idx < len(ladder) - 1:
            # error shrinks roughly like N^(-3/2); jump the ladder accordingly
            target = n_pts * (err / tol) ** (2.0 / 3.0)
            nxt = idx + 1
            while nxt < len(ladder) - 1 and ladder[nxt] < target and nxt - idx < 4:
                nxt += 1
            idx = nxt
    return ProbEstimate(min(max(value, 0.0), 1.0), err, evals)


def sample(model: GaussianModel, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` vectors from the model; bit-identical for identical inputs."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    gen = generator(seed)
    eps = gen.standard_normal((n, model.dim))
    return eps @ model._chol.T + model.mean


def rect_seed(base_seed: int, rect: SignedRectangle) -> int:
    """Per-rectangle integration seed, independent of evaluation order."""
    digest = hashlib.blake2b(
        rect.bounds_key(),
        digest_size=8,
        key=(base_seed & (2**64 - 1)).to_bytes(8, "little"),
    ).digest()
    return int.from_bytes(digest, "little")
