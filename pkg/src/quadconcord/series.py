"""Domain types for four-quadrant trending analysis.

A subject is measured by two methods (a gold standard and an experimental
technique) at T+1 time points.  The four-quadrant plot lives in the space of
sequential differences: the t-th point of subject i is
(x[t], y[t]) = (x_raw[t+1] - x_raw[t], y_raw[t+1] - y_raw[t]).
Points where both methods move in the same direction (upper-right, lower-left
quadrants) count as trend agreement; a central square of half-width ``a`` (the
exclusion zone) removes small differences attributable to measurement noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError


def _as_finite_vector(values, name: str, min_len: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_len:
        raise DataError(f"{name} needs at least {min_len} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    """Raw per-subject values of both methods over T+1 time points."""

    subject_id: str
    x_raw: np.ndarray
    y_raw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_raw", _as_finite_vector(self.x_raw, "x_raw", 2))
        object.__setattr__(self, "y_raw", _as_finite_vector(self.y_raw, "y_raw", 2))
        if self.x_raw.size != self.y_raw.size:
            raise DataError(
                f"subject {self.subject_id!r}: x_raw has {self.x_raw.size} values "
                f"but y_raw has {self.y_raw.size}"
            )

    @property
    def n_times(self) -> int:
        return int(self.x_raw.size)


@dataclass(frozen=True, eq=False)
class DiffSeries:
    """Per-subject sequential differences: the four-quadrant plot coordinates."""

    subject_id: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_finite_vector(self.x, "x", 1))
        object.__setattr__(self, "y", _as_finite_vector(self.y, "y", 1))
        if self.x.size != self.y.size:
            raise DataError(
                f"subject {self.subject_id!r}: x has {self.x.size} differences "
                f"but y has {self.y.size}"
            )

    @property
    def n_diffs(self) -> int:
        return int(self.x.size)


def compute_differences(series: MeasurementSeries) -> DiffSeries:
    """Sequential differences of both methods; output length is T = len - 1."""
    return DiffSeries(
        subject_id=series.subject_id,
        x=np.diff(series.x_raw),
        y=np.diff(series.y_raw),
    )


class Quadrant(enum.Enum):
    """Quadrant of a difference pair. A and B are the agreement quadrants."""

    A = "A"  # x >= 0, y >= 0
    B = "B"  # x < 0,  y < 0
    C = "C"  # x < 0,  y >= 0
    D = "D"  # x >= 0, y < 0

    @property
    def agrees(self) -> bool:
        return self in (Quadrant.A, Quadrant.B)


class PointCategory(enum.Enum):
    AGREE_OUTSIDE = "agree_outside"
    DISAGREE_OUTSIDE = "disagree_outside"
    EXCL_AGREE = "excl_agree"
    EXCL_DISAGREE = "excl_disagree"


@dataclass(frozen=True)
class PointClass:
    """Classification of one difference pair for a given exclusion half-width."""

    quadrant: Quadrant
    excluded: bool

    @property
    def agrees(self) -> bool:
        return self.quadrant.agrees

    @property
    def category(self) -> PointCategory:
        if self.agrees:
            return PointCategory.EXCL_AGREE if self.excluded else PointCategory.AGREE_OUTSIDE
        return PointCategory.EXCL_DISAGREE if self.excluded else PointCategory.DISAGREE_OUTSIDE


def classify_point(x_t: float, y_t: float, a: float) -> PointClass:
    """Classify one difference pair.

    Quadrants partition the plane by sign (>= 0 versus < 0 on each axis); the
    exclusion zone is the closed square ``|x| <= a and |y| <= a``.  Every
    (x, y, a) triple maps to exactly one class.
    """
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    if not (np.isfinite(x_t) and np.isfinite(y_t)):
        raise DataError("difference values must be finite")
    if x_t >= 0:
        quadrant = Quadrant.A if y_t >= 0 else Quadrant.D
    else:
        quadrant = Quadrant.C if y_t >= 0 else Quadrant.B
    excluded = abs(x_t) <= a and abs(y_t) <= a
    return PointClass(quadrant=quadrant, excluded=excluded)


def classify_arrays(x, y, a: float):
    """Vectorized classification.

    Returns ``(agrees, excluded)`` boolean arrays matching the convention of
    :func:`classify_point`.
    """
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    agrees = (x >= 0) == (y >= 0)
    excluded = (np.abs(x) <= a) & (np.abs(y) <= a)
    return agrees, excluded


@dataclass(frozen=True)
class AgreementSpec:
    """Agreement threshold: at least ``m`` concordant points out of ``T``."""

    T: int
    m: int

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if not (1 <= self.m <= self.T):
            raise ConfigError(f"m must satisfy 1 <= m <= T={self.T}, got {self.m}")
