"""Concordance-rate estimators for the four-quadrant plot.

Four estimators share one result type:

* ``ccr`` -- the conventional count ratio over individual plot points.
* ``control1`` -- binomial tail on a pooled per-point agreement probability.
* ``control2`` -- Poisson-binomial tail on per-time agreement probabilities.
* ``proposed_rate`` -- the model-based rate: the conditional probability,
  under a 2T-dimensional Gaussian, of at least m directional agreements given
  that no time point falls in the exclusion zone.

``ccr`` excludes individual points; the other three exclude whole subjects
(a subject is dropped as soon as any of its T points lies in the closed
exclusion square).  These different exclusion semantics are intentional.

``oracle_rate`` estimates the same conditional probability by brute-force
sampling and serves as an independent check on the enumeration and
integration machinery.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._rng import generator
from .exceptions import (
    AllMassExcludedError,
    ConfigError,
    NumericalInconsistencyError,
    UndefinedRateError,
)
from .model import GaussianModel, stack_diffs
from .mvn import (
    DEFAULT_MAX_EVALS,
    DEFAULT_TOL,
    ProbEstimate,
    SignedRectangle,
    rect_prob,
    rect_seed,
)
from .series import AgreementSpec, DiffSeries, Quadrant, classify_arrays

METHODS = ("ccr", "control1", "control2", "proposal", "oracle")


@dataclass(frozen=True)
class ConcordanceResult:
    """A concordance estimate in [0, 1] with its context.

    ``n_used``/``n_excluded`` count points for ``ccr``, subjects for the
    control estimators and retained/discarded draws for the oracle; they are
    ``None`` for the purely model-based proposal.  ``numeric_error`` is 0 for
    the closed-form estimators and a propagated 3-sigma bound otherwise.
    """

    value: float
    method: str
    m: int | None
    a: float
    n_used: int | None
    n_excluded: int | None
    numeric_error: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method tag {self.method!r}")
        if not (0.0 <= self.value <= 1.0):
            raise NumericalInconsistencyError(
                f"{self.method} value {self.value} outside [0, 1]"
            )
        if self.numeric_error < 0:
            raise ConfigError("numeric_error must be >= 0")


@dataclass(frozen=True)
class ControlStats:
    """Per-time agreement counts among subjects retained by subject-level exclusion."""

    k: tuple[int, ...]
    n_dag: tuple[int, ...]
    p_pooled: float | None
    p_t: tuple[float, ...] | None


def _as_matrices(diffs):
    z = stack_diffs(diffs)
    T = z.shape[1] // 2
    return z[:, :T], z[:, T:]


def ccr(diffs, a: float) -> ConcordanceResult:
    """Conventional concordance rate: agreeing points outside the exclusion
    square over all points outside it.  Excludes points, not subjects."""
    x, y = _as_matrices(diffs)
    agrees, excluded = classify_arrays(x, y, a)
    n_points = x.size
    n_excl = int(excluded.sum())
    n_outside = n_points - n_excl
    if n_outside == 0:
        raise UndefinedRateError(
            f"all {n_points} points fall inside the exclusion square (a={a})"
        )
    n_agree_outside = int((agrees & ~excluded).sum())
    return ConcordanceResult(
        value=n_agree_outside / n_outside,
        method="ccr",
        m=None,
        a=a,
        n_used=n_outside,
        n_excluded=n_excl,
    )


def control_stats(diffs, a: float) -> ControlStats:
    """Agreement counts after dropping every subject that touches the zone."""
    x, y = _as_matrices(diffs)
    agrees, excluded = classify_arrays(x, y, a)
    retained = ~excluded.any(axis=1)
    T = x.shape[1]
    n_ret = int(retained.sum())
    k = tuple(int(v) for v in agrees[retained].sum(axis=0)) if n_ret else (0,) * T
    n_dag = (n_ret,) * T
    if n_ret == 0:
        return ControlStats(k=k, n_dag=n_dag, p_pooled=None, p_t=None)
    return ControlStats(
        k=k,
        n_dag=n_dag,
        p_pooled=sum(k) / (n_ret * T),
        p_t=tuple(ki / n_ret for ki in k),
    )


def _check_spec(diffs, spec: AgreementSpec):
    if isinstance(diffs, np.ndarray):
        T = diffs.shape[1] // 2
    else:
        T = diffs[0].n_diffs if diffs else 0
    if spec.T != T:
        raise ConfigError(f"spec.T={spec.T} does not match data T={T}")


def control1(diffs, a: float, spec: AgreementSpec) -> ConcordanceResult:
    """Binomial tail at the pooled agreement probability p = sum(k) / sum(n_dag)."""
    _check_spec(diffs, spec)
    stats = control_stats(diffs, a)
    if sum(stats.n_dag) == 0:
        raise UndefinedRateError(
            f"every subject has a point inside the exclusion square (a={a})"
        )
    p = stats.p_pooled
    T, m = spec.T, spec.m
    value = sum(math.comb(T, s) * p**s * (1 - p) ** (T - s) for s in range(m, T + 1))
    n = diffs.shape[0] if isinstance(diffs, np.ndarray) else len(diffs)
    return ConcordanceResult(
        value=min(max(value, 0.0), 1.0),
        method="control1",
        m=m,
        a=a,
        n_used=stats.n_dag[0],
        n_excluded=n - stats.n_dag[0],
    )


def poisson_binomial_tail(probs, m: int) -> float:
    """P(at least m successes) for independent indicators with the given probs."""
    pmf = np.zeros(len(probs) + 1)
    pmf[0] = 1.0
    for p in probs:
        pmf[1:] = pmf[1:] * (1 - p) + pmf[:-1] * p
        pmf[0] *= 1 - p
    return float(pmf[m:].sum())


def control2(diffs, a: float, spec: AgreementSpec) -> ConcordanceResult:
    """Poisson-binomial tail on the per-time agreement probabilities p_t = k_t / n_t."""
    _check_spec(diffs, spec)
    stats = control_stats(diffs, a)
    if any(nd == 0 for nd in stats.n_dag):
        raise UndefinedRateError(
            f"every subject has a point inside the exclusion square (a={a})"
        )
    value = poisson_binomial_tail(stats.p_t, spec.m)
    n = diffs.shape[0] if isinstance(diffs, np.ndarray) else len(diffs)
    return ConcordanceResult(
        value=min(max(value, 0.0), 1.0),
        method="control2",
        m=spec.m,
        a=a,
        n_used=stats.n_dag[0],
        n_excluded=n - stats.n_dag[0],
    )


# ---------------------------------------------------------------------------
# model-based rate: pattern enumeration and inclusion-exclusion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadrantPattern:
    """One quadrant label per time point; A/B labels count as agreements."""

    labels: tuple[Quadrant, ...]

    def __post_init__(self):
        if not self.labels:
            raise ConfigError("pattern must have at least one label")

    @property
    def T(self) -> int:
        return len(self.labels)

    @property
    def agreement_count(self) -> int:
        return sum(1 for q in self.labels if q.agrees)


@functools.lru_cache(maxsize=64)
def _all_patterns_cached(T: int) -> tuple[QuadrantPattern, ...]:
    return tuple(
        QuadrantPattern(labels=combo)
        for combo in itertools.product(
            (Quadrant.A, Quadrant.B, Quadrant.C, Quadrant.D), repeat=T
        )
    )


def all_patterns(T: int) -> list[QuadrantPattern]:
    """All 4^T quadrant patterns, in a fixed deterministic order."""
    return list(_all_patterns_cached(T))


def _quadrant_box(label: Quadrant):
    inf = np.inf
    return {
        Quadrant.A: ((0.0, inf), (0.0, inf)),
        Quadrant.B: ((-inf, 0.0), (-inf, 0.0)),
        Quadrant.C: ((-inf, 0.0), (0.0, inf)),
        Quadrant.D: ((0.0, inf), (-inf, 0.0)),
    }[label]


def _exclusion_box(label: Quadrant, a: float):
    return {
        Quadrant.A: ((0.0, a), (0.0, a)),
        Quadrant.B: ((-a, 0.0), (-a, 0.0)),
        Quadrant.C: ((-a, 0.0), (0.0, a)),
        Quadrant.D: ((0.0, a), (-a, 0.0)),
    }[label]


@functools.lru_cache(maxsize=8192)
def _event_rectangles_cached(labels: tuple[Quadrant, ...], a: float) -> tuple[SignedRectangle, ...]:
    T = len(labels)
    rects = []
    for subset in itertools.product((False, True), repeat=T):
        lower = np.empty(2 * T)
        upper = np.empty(2 * T)
        for t, (label, in_sub) in enumerate(zip(labels, subset)):
            (xlo, xhi), (ylo, yhi) = (
                _exclusion_box(label, a) if in_sub else _quadrant_box(label)
            )
            lower[t], upper[t] = xlo, xhi
            lower[T + t], upper[T + t] = ylo, yhi
        rects.append(SignedRectangle(lower=lower, upper=upper, weight=(-1) ** sum(subset)))
    return tuple(rects)


def enumerate_event_rectangles(pattern: QuadrantPattern, a: float) -> list[SignedRectangle]:
    """Signed rectangles whose weighted probabilities sum to the probability
    that every (X_t, Y_t) lies in its pattern quadrant but outside that
    quadrant's exclusion sub-square.

    Puncturing each quadrant is an inclusion-exclusion over the subset S of
    time points forced into their sub-squares: 2^T rectangles of dimension 2T
    (X coordinates first), with weight (-1)^|S|.
    """
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    return list(_event_rectangles_cached(pattern.labels, float(a)))


def _cached_prob(model, rect, tol, max_evals, seed, cache) -> ProbEstimate:
    key = rect.bounds_key()
    est = cache.get(key)
    if est is None:
        est = rect_prob(model, rect, tol=tol, max_evals=max_evals, seed=rect_seed(seed, rect))
        cache[key] = est
    return est


def pattern_event_prob(
    model: GaussianModel,
    pattern: QuadrantPattern,
    a: float,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    seed: int = 0,
    _cache: dict | None = None,
) -> tuple[float, float]:
    """Probability (value, 3-sigma error) of one pattern's punctured-quadrant event."""
    cache = {} if _cache is None else _cache
    value = 0.0
    err = 0.0
    for rect in enumerate_event_rectangles(pattern, a):
        est = _cached_prob(model, rect, tol, max_evals, seed, cache)
        value += rect.weight * est.value
        err += est.abs_error
    return value, err


@functools.lru_cache(maxsize=1024)
def _exclusion_union_rectangles(T: int, a: float) -> tuple[SignedRectangle, ...]:
    """Inclusion-exclusion terms of P(union of per-time exclusion events)."""
    inf = np.inf
    rects = []
    for subset in itertools.product((False, True), repeat=T):
        size = sum(subset)
        if size == 0:
            continue
        lower = np.full(2 * T, -inf)
        upper = np.full(2 * T, inf)
        for t, inside in enumerate(subset):
            if inside:
                lower[t], upper[t] = -a, a
                lower[T + t], upper[T + t] = -a, a
        rects.append(SignedRectangle(lower=lower, upper=upper, weight=(-1) ** (size + 1)))
    return tuple(rects)


def denominator_prob(
    model: GaussianModel,
    a: float,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    seed: int = 0,
    _cache: dict | None = None,
) -> ProbEstimate:
    """P(no time point falls in the exclusion square) by inclusion-exclusion."""
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    cache = {} if _cache is None else _cache
    T = model.n_diffs
    value = 1.0
    err = 0.0
    evals = 0
    for rect in _exclusion_union_rectangles(T, float(a)):
        est = _cached_prob(model, rect, tol, max_evals, seed, cache)
        value -= rect.weight * est.value
        err += est.abs_error
        evals += est.evaluations
    if value <= 10 * tol:
        raise AllMassExcludedError(
            f"exclusion zone a={a} leaves probability mass {value:.3e} "
            f"(below 10 * tol = {10 * tol:.1e})"
        )
    return ProbEstimate(min(value, 1.0), err, evals)


def proposed_rate(
    model: GaussianModel,
    a: float,
    spec: AgreementSpec,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    seed: int = 0,
    _cache: dict | None = None,
) -> ConcordanceResult:
    """Model-based concordance rate: P(at least m agreements | no exclusion).

    The numerator sums the disjoint exact-count events over all quadrant
    patterns with agreement count >= m.  When most patterns qualify it is
    cheaper to subtract the complementary patterns from the denominator
    instead (the two forms are identical by completeness); the choice only
    affects which rectangles are integrated, not the estimand.
    """
    T = model.n_diffs
    if spec.T != T:
        raise ConfigError(f"spec.T={spec.T} does not match model T={T}")
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    cache = {} if _cache is None else _cache
    den = denominator_prob(model, a, tol=tol, max_evals=max_evals, seed=seed, _cache=cache)

    patterns = all_patterns(T)
    selected = [p for p in patterns if p.agreement_count >= spec.m]
    complement = [p for p in patterns if p.agreement_count < spec.m]
    use_complement = len(complement) < len(selected)

    num = den.value if use_complement else 0.0
    num_err = den.abs_error if use_complement else 0.0
    for pattern in complement if use_complement else selected:
        v, e = pattern_event_prob(
            model, pattern, a, tol=tol, max_evals=max_evals, seed=seed, _cache=cache
        )
        num += -v if use_complement else v
        num_err += e

    value = num / den.value
    propagated = (num_err + abs(value) * den.abs_error) / den.value
    if value < 0.0:
        if -value > propagated:
            raise NumericalInconsistencyError(
                f"numerator {num:.3e} is negative beyond the propagated error {propagated:.3e}"
            )
        value = 0.0
    elif value > 1.0:
        if value - 1.0 > propagated:
            raise NumericalInconsistencyError(
                f"rate {value:.6f} exceeds 1 beyond the propagated error {propagated:.3e}"
            )
        value = 1.0
    return ConcordanceResult(
        value=value,
        method="proposal",
        m=spec.m,
        a=a,
        n_used=None,
        n_excluded=None,
        numeric_error=propagated,
    )


def estimate_and_rate(
    diffs,
    a: float,
    spec: AgreementSpec,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    seed: int = 0,
) -> ConcordanceResult:
    """Fit the Gaussian model to the differences, then the model-based rate.

    All subjects enter the estimation; the exclusion zone acts only through
    the conditional probability, so n_used reports the full subject count.
    """
    from .model import estimate_model

    model = estimate_model(diffs)
    result = proposed_rate(model, a, spec, tol=tol, max_evals=max_evals, seed=seed)
    n = diffs.shape[0] if isinstance(diffs, np.ndarray) else len(diffs)
    return ConcordanceResult(
        value=result.value,
        method="proposal",
        m=result.m,
        a=result.a,
        n_used=n,
        n_excluded=0,
        numeric_error=result.numeric_error,
    )


def oracle_rate(
    model: GaussianModel,
    a: float,
    spec: AgreementSpec,
    n_draws: int = 10**6,
    seed: int = 0,
) -> ConcordanceResult:
    """Brute-force sampling estimate of the proposed rate.

    Draws subjects from the model, discards any draw with a point inside the
    closed exclusion square, and counts the fraction of retained draws with
    at least m sign agreements.  Independent of the integration machinery.
    """
    if n_draws < 10**4:
        raise ConfigError(f"n_draws must be >= 1e4, got {n_draws}")
    T = model.n_diffs
    if spec.T != T:
        raise ConfigError(f"spec.T={spec.T} does not match model T={T}")
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    gen = generator(seed)
    chol_t = model._chol.T
    retained = 0
    successes = 0
    chunk = 1_000_000
    remaining = n_draws
    while remaining > 0:
        size = min(chunk, remaining)
        remaining -= size
        z = gen.standard_normal((size, 2 * T)) @ chol_t + model.mean
        x, y = z[:, :T], z[:, T:]
        agrees, excluded = classify_arrays(x, y, a)
        keep = ~excluded.any(axis=1)
        retained += int(keep.sum())
        successes += int((agrees[keep].sum(axis=1) >= spec.m).sum())
    if retained < 100:
        raise AllMassExcludedError(
            f"only {retained} of {n_draws} draws fall outside the exclusion zone"
        )
    value = successes / retained
    se = math.sqrt(value * (1.0 - value) / retained)
    return ConcordanceResult(
        value=value,
        method="oracle",
        m=spec.m,
        a=a,
        n_used=retained,
        n_excluded=n_draws - retained,
        numeric_error=3.0 * se,
    )
