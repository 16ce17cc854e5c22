"""Analysis workflows over ingested datasets.

Mirrors the real-data protocol: pick a method pair, resolve the exclusion
half-width (fixed or as a quantile of the pooled absolute differences),
compute all four concordance estimators, and, for diagnosability, repeatedly
subsample subjects and score each estimator's ability to separate an
agreeing pair from disagreeing ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed, generator
from .concordance import ccr, control1, control2, estimate_and_rate
from .exceptions import (
    ConfigError,
    DataError,
    EstimationError,
    NumericalError,
)
from .io import Dataset
from .model import stack_diffs
from .mvn import DEFAULT_TOL
from .roc import roc_curve
from .series import AgreementSpec, DiffSeries, compute_differences


@dataclass(frozen=True)
class FixedExclusion:
    a: float

    def __post_init__(self):
        if self.a < 0:
            raise ConfigError(f"fixed exclusion half-width must be >= 0, got {self.a}")


@dataclass(frozen=True)
class QuantileExclusion:
    """Half-width set to the q-quantile of the pooled |differences| of a pair."""

    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ConfigError(
                f"exclusion quantile must lie strictly inside (0, 1), got {self.q}"
            )


@dataclass(frozen=True)
class AnalysisConfig:
    gold: str
    experimental: str
    a_mode: FixedExclusion | QuantileExclusion = QuantileExclusion(0.1)
    m: int | None = None  # None -> m = T (agreement at every time point)
    tol: float = DEFAULT_TOL
    seed: int = 0
    output: str | None = None


def pair_diffs(dataset: Dataset, gold: str, experimental: str) -> list[DiffSeries]:
    return [compute_differences(s) for s in dataset.measurement_pairs(gold, experimental)]


def resolve_exclusion(dataset: Dataset, pair, a_mode) -> float:
    """Fixed mode returns the value; quantile mode takes the type-7 linear
    quantile of the pooled {|x_it|} union {|y_it|} for the pair."""
    if isinstance(a_mode, FixedExclusion):
        return float(a_mode.a)
    if not isinstance(a_mode, QuantileExclusion):
        raise ConfigError(f"unknown exclusion mode {a_mode!r}")
    gold, experimental = pair
    diffs = pair_diffs(dataset, gold, experimental)
    pool = np.concatenate([np.abs(d.x) for d in diffs] + [np.abs(d.y) for d in diffs])
    if pool.size == 0:
        raise DataError("no differences available to resolve the exclusion quantile")
    return float(np.quantile(pool, a_mode.q, method="linear"))


def _result_entry(result):
    return {
        "value": result.value,
        "m": result.m,
        "a": result.a,
        "n_used": result.n_used,
        "n_excluded": result.n_excluded,
        "numeric_error": result.numeric_error,
    }


def _compute_estimators(z, a, spec, tol, seed):
    """All four estimators on stacked diffs; failures become error entries."""
    estimates = {}
    errors = {}
    for meth in ("ccr", "control1", "control2", "proposal"):
        try:
            if meth == "ccr":
                res = ccr(z, a)
            elif meth == "control1":
                res = control1(z, a, spec)
            elif meth == "control2":
                res = control2(z, a, spec)
            else:
                res = estimate_and_rate(z, a, spec, tol=tol, seed=seed)
            estimates[meth] = res
        except (NumericalError, EstimationError) as exc:
            errors[meth] = {"kind": type(exc).__name__, "message": str(exc)}
    return estimates, errors


def analyze(dataset: Dataset, config: AnalysisConfig) -> dict:
    """Full single-pair report: all four estimators plus diagnostics.

    Estimator failures are rendered as report entries under ``errors``
    rather than raised; the CLI maps a non-empty ``errors`` to a nonzero
    exit code.
    """
    T = dataset.t_diffs
    m = T if config.m is None else config.m
    spec = AgreementSpec(T=T, m=m)  # validates 1 <= m <= T
    pair = (config.gold, config.experimental)
    a = resolve_exclusion(dataset, pair, config.a_mode)
    diffs = pair_diffs(dataset, config.gold, config.experimental)
    z = stack_diffs(diffs)
    estimates, errors = _compute_estimators(
        z, a, spec, config.tol, derive_seed(config.seed, "analyze", *pair)
    )
    report = {
        "pair": {"gold": config.gold, "experimental": config.experimental},
        "n_subjects": dataset.n_subjects,
        "t_diffs": T,
        "m": m,
        "exclusion": {
            "mode": "fixed" if isinstance(config.a_mode, FixedExclusion) else "quantile",
            "a": a,
        },
        "tol": config.tol,
        "seed": config.seed,
        "estimates": {meth: _result_entry(res) for meth, res in estimates.items()},
        "errors": errors,
    }
    if isinstance(config.a_mode, QuantileExclusion):
        report["exclusion"]["q"] = config.a_mode.q
    return report


def subsample_auc(
    dataset: Dataset,
    pairs,
    k: int,
    iters: int,
    seed: int = 0,
    a_mode=QuantileExclusion(0.1),
    tol: float = DEFAULT_TOL,
) -> dict:
    """Repeated-subsample diagnosability of the four estimators.

    ``pairs`` is a list of ((gold, experimental), label) with at least one
    positive and one negative label.  Each iteration draws k subjects
    (shared by all pairs), computes the estimators at m = T, and the pooled
    scores are ranked against the pair labels via ROC.  Exclusion half-widths
    are resolved per pair on the full dataset, once.
    """
    if k < 2 or k > dataset.n_subjects:
        raise ConfigError(f"k must lie in [2, {dataset.n_subjects}], got {k}")
    if iters < 1:
        raise ConfigError(f"iters must be >= 1, got {iters}")
    pairs = [((str(g), str(e)), bool(label)) for (g, e), label in pairs]
    labels = {label for _, label in pairs}
    if labels != {True, False}:
        raise ConfigError("pairs must include at least one positive and one negative label")
    T = dataset.t_diffs
    spec = AgreementSpec(T=T, m=T)
    a_by_pair = {pair: resolve_exclusion(dataset, pair, a_mode) for pair, _ in pairs}
    matrices = {
        pair: stack_diffs(pair_diffs(dataset, *pair)) for pair, _ in pairs
    }
    subjects = np.array(dataset.subjects)
    methods = ("ccr", "control1", "control2", "proposal")
    scores = {meth: [] for meth in methods}
    score_labels = {meth: [] for meth in methods}
    failures = {meth: 0 for meth in methods}
    for it in range(iters):
        gen = generator(derive_seed(seed, "subsample", it))
        chosen = np.sort(gen.choice(subjects.size, size=k, replace=False))
        for pair, label in pairs:
            z = matrices[pair][chosen]
            estimates, errors = _compute_estimators(
                z,
                a_by_pair[pair],
                spec,
                tol,
                derive_seed(seed, "subsample", it, *pair),
            )
            for meth in methods:
                if meth in estimates:
                    scores[meth].append(estimates[meth].value)
                    score_labels[meth].append(label)
                else:
                    failures[meth] += 1
    report = {
        "k": k,
        "iters": iters,
        "m": T,
        "seed": seed,
        "pairs": [
            {"gold": g, "experimental": e, "label": label, "a": a_by_pair[(g, e)]}
            for (g, e), label in pairs
        ],
        "auc": {},
        "n_scores": {},
        "failures": failures,
        "curves": {},
    }
    for meth in methods:
        curve = roc_curve(zip(scores[meth], score_labels[meth]))
        report["auc"][meth] = curve.auc
        report["n_scores"][meth] = len(scores[meth])
        report["curves"][meth] = curve.points.tolist()
    return report
