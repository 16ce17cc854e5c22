"""Factorial Monte Carlo study of the concordance estimators.

The grid crosses 30 mean patterns with within-method covariance rho,
cross-method covariance rho_xy, agreement threshold m, exclusion half-width a
and subject count n (variances fixed at 1), T = 2 throughout.  Each cell is
replicated by sampling subjects from its exact Gaussian, re-estimating the
model, and measuring every estimator against the cell's true rate (the
model-based rate evaluated at the exact parameters).

Seeding is hierarchical and order-free -- cell seeds derive from
(base_seed, cell index), replication seeds from (cell seed, rep index) -- so
parallel runs reproduce sequential ones exactly.
"""

from __future__ import annotations

import concurrent.futures
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .concordance import ccr, control1, control2, estimate_and_rate, proposed_rate
from .exceptions import ConfigError, EstimationError, NumericalError
from .model import GaussianModel
from .mvn import sample
from .series import AgreementSpec

# Mean patterns (mu_X1, mu_X2, mu_Y1, mu_Y2), indexed 1..30.
MEAN_PATTERNS = {
    1: (-1.5, -1.5, 1.5, 1.5),
    2: (-0.5, -0.5, 0.5, 0.5),
    3: (-1.5, 1.5, 1.5, 1.5),
    4: (0.5, -0.5, 0.5, 0.5),
    5: (1.5, 1.5, 1.5, 1.5),
    6: (0.5, 0.5, 0.5, 0.5),
    7: (-0.5, -1.5, 0.5, 1.5),
    8: (0.5, -1.5, 0.5, 1.5),
    9: (-0.5, 1.5, 0.5, 1.5),
    10: (0.5, 1.5, 0.5, 1.5),
    11: (-1.5, -1.5, -1.5, -1.5),
    12: (-0.5, -0.5, -0.5, -0.5),
    13: (-1.5, 1.5, -1.5, -1.5),
    14: (0.5, -0.5, -0.5, -0.5),
    15: (1.5, 1.5, -1.5, -1.5),
    16: (0.5, 0.5, -0.5, -0.5),
    17: (-0.5, -1.5, -0.5, -1.5),
    18: (0.5, -1.5, -0.5, -1.5),
    19: (-0.5, 1.5, -0.5, -1.5),
    20: (0.5, 1.5, -0.5, -1.5),
    21: (-1.5, -1.5, -1.5, 1.5),
    22: (-0.5, -0.5, -0.5, 0.5),
    23: (-1.5, 1.5, -1.5, 1.5),
    24: (0.5, -0.5, -0.5, 0.5),
    25: (1.5, 1.5, -1.5, 1.5),
    26: (0.5, 0.5, -0.5, 0.5),
    27: (-0.5, -1.5, -0.5, 1.5),
    28: (0.5, -1.5, -0.5, 1.5),
    29: (-0.5, 1.5, -0.5, 1.5),
    30: (0.5, 1.5, -0.5, 1.5),
}

RHO_LEVELS = (0.0, 1.0 / 3.0, 2.0 / 3.0)
RHO_XY_LEVELS = (0.0, 1.0 / 3.0)
M_LEVELS = (1, 2)
A_LEVELS = (0.5, 1.0)
N_LEVELS = (15, 40)

TRUE_RATE_TOL = 1e-7
# Integration tolerance for per-replication proposal estimates.  The
# estimators under study carry sampling noise of order 1e-2, so 5e-4 of
# integration noise is statistically invisible while keeping the full grid
# affordable.
ESTIMATE_TOL = 5e-4

BIAS_METHODS = ("control1", "control2", "proposal")
ALL_METHODS = ("ccr", "control1", "control2", "proposal")


def pattern_label(mean) -> bool:
    """True (the "agreement" mark) iff the mean trends agree at both times."""
    x1, x2, y1, y2 = mean
    return ((x1 >= 0) == (y1 >= 0)) and ((x2 >= 0) == (y2 >= 0))


@dataclass(frozen=True)
class SimulationCell:
    """One grid cell: a mean pattern plus one level of every other factor."""

    index: int
    pattern: int
    mean: tuple[float, float, float, float]
    rho: float
    rho_xy: float
    m: int
    a: float
    n: int
    label: bool

    def factor_key(self):
        """Factors that determine the true rate (everything except n)."""
        return (self.pattern, self.rho, self.rho_xy, self.m, self.a)


def _check_levels(name, values, allowed):
    values = tuple(values)
    if not values:
        raise ConfigError(f"factor {name} must keep at least one level")
    bad = [v for v in values if not any(np.isclose(v, al) for al in allowed)]
    if bad:
        raise ConfigError(f"factor {name} has inadmissible levels {bad}; allowed: {allowed}")
    return values


def build_factor_grid(
    patterns=None,
    rho=None,
    rho_xy=None,
    m=None,
    a=None,
    n=None,
) -> list[SimulationCell]:
    """Cartesian product of the non-method factors (default 1440 cells).

    Overrides may only shrink a factor's level set; anything outside the
    admissible levels is a configuration error.
    """
    patterns = _check_levels("patterns", patterns or tuple(MEAN_PATTERNS), tuple(MEAN_PATTERNS))
    rho = _check_levels("rho", rho or RHO_LEVELS, RHO_LEVELS)
    rho_xy = _check_levels("rho_xy", rho_xy or RHO_XY_LEVELS, RHO_XY_LEVELS)
    m = _check_levels("m", m or M_LEVELS, M_LEVELS)
    a = _check_levels("a", a or A_LEVELS, A_LEVELS)
    n = _check_levels("n", n or N_LEVELS, N_LEVELS)
    cells = []
    idx = 0
    for pat in patterns:
        mean = MEAN_PATTERNS[int(pat)]
        label = pattern_label(mean)
        for r in rho:
            for rxy in rho_xy:
                for mm in m:
                    for aa in a:
                        for nn in n:
                            cells.append(
                                SimulationCell(
                                    index=idx,
                                    pattern=int(pat),
                                    mean=mean,
                                    rho=float(r),
                                    rho_xy=float(rxy),
                                    m=int(mm),
                                    a=float(aa),
                                    n=int(nn),
                                    label=label,
                                )
                            )
                            idx += 1
    return cells


def cell_covariance(rho: float, rho_xy: float) -> np.ndarray:
    """Assemble the 4x4 block covariance (unit variances)."""
    sx = np.array([[1.0, rho], [rho, 1.0]])
    sxy = np.full((2, 2), rho_xy)
    return np.block([[sx, sxy], [sxy, sx]])


def cell_model(cell: SimulationCell) -> GaussianModel:
    return GaussianModel(mean=np.array(cell.mean), cov=cell_covariance(cell.rho, cell.rho_xy))


_TRUE_RATE_CACHE: dict[tuple, float] = {}


def true_rate(cell: SimulationCell, tol: float = TRUE_RATE_TOL) -> float:
    """Model-based rate at the cell's exact parameters (integration tightened)."""
    key = cell.factor_key() + (tol,)
    value = _TRUE_RATE_CACHE.get(key)
    if value is None:
        model = cell_model(cell)
        spec = AgreementSpec(T=2, m=cell.m)
        seed = derive_seed("true_rate", *[repr(k) for k in key])
        shared: dict = {}
        value = proposed_rate(model, cell.a, spec, tol=tol, seed=seed, _cache=shared).value
        _TRUE_RATE_CACHE[key] = value
    return value


def _replicate_cell(cell, reps, base_seed, tol, methods):
    """Per-replication estimates for one cell; NaN marks a failed replication."""
    model = cell_model(cell)
    spec = AgreementSpec(T=2, m=cell.m)
    cell_seed = derive_seed(base_seed, cell.index)
    estimates = {meth: np.full(reps, np.nan) for meth in methods}
    failures: dict[str, Counter] = {meth: Counter() for meth in methods}
    for rep in range(reps):
        rep_seed = derive_seed(cell_seed, rep)
        z = sample(model, cell.n, seed=rep_seed)
        for meth in methods:
            try:
                if meth == "ccr":
                    estimates[meth][rep] = ccr(z, cell.a).value
                elif meth == "control1":
                    estimates[meth][rep] = control1(z, cell.a, spec).value
                elif meth == "control2":
                    estimates[meth][rep] = control2(z, cell.a, spec).value
                else:
                    estimates[meth][rep] = estimate_and_rate(
                        z, cell.a, spec, tol=tol, seed=derive_seed(rep_seed, "qmc")
                    ).value
            except (NumericalError, EstimationError) as exc:
                failures[meth][type(exc).__name__] += 1
    return estimates, failures


@dataclass(frozen=True)
class MethodSummary:
    median: float
    q1: float
    q3: float
    n_ok: int


@dataclass(frozen=True)
class CellSummary:
    """Quartiles of |estimate - true rate| per method, plus failure counts."""

    cell: SimulationCell
    true_value: float
    reps: int
    methods: dict[str, MethodSummary]
    failures: dict[str, dict[str, int]]


def _summarize(deviations: np.ndarray) -> MethodSummary:
    ok = deviations[~np.isnan(deviations)]
    if ok.size == 0:
        return MethodSummary(median=np.nan, q1=np.nan, q3=np.nan, n_ok=0)
    q1, med, q3 = np.percentile(ok, [25.0, 50.0, 75.0])
    return MethodSummary(median=float(med), q1=float(q1), q3=float(q3), n_ok=int(ok.size))


def run_cell(
    cell: SimulationCell,
    reps: int,
    base_seed: int,
    tol: float = ESTIMATE_TOL,
) -> CellSummary:
    """Replicate one cell and summarize each estimator's deviation quartiles."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    estimates, failures = _replicate_cell(cell, reps, base_seed, tol, BIAS_METHODS)
    truth = true_rate(cell)
    return CellSummary(
        cell=cell,
        true_value=truth,
        reps=reps,
        methods={
            meth: _summarize(np.abs(est - truth)) for meth, est in estimates.items()
        },
        failures={meth: dict(cnt) for meth, cnt in failures.items()},
    )


@dataclass(frozen=True, eq=False)
class GridRunResult:
    """Raw replication estimates for a whole grid, one row per cell."""

    cells: list[SimulationCell]
    reps: int
    true_rates: np.ndarray                 # (n_cells,)
    estimates: dict[str, np.ndarray]       # method -> (n_cells, reps); NaN = failed
    failures: dict[str, dict[str, int]]    # method -> error kind -> count

    def deviations(self, method: str) -> np.ndarray:
        return np.abs(self.estimates[method] - self.true_rates[:, None])

    def pooled_deviations(self, method: str, cell_mask=None) -> np.ndarray:
        dev = self.deviations(method)
        if cell_mask is not None:
            dev = dev[cell_mask]
        return dev[~np.isnan(dev)]

    def scored_labels(self, method: str):
        """(scores, labels) over all successful (cell, replication) records."""
        est = self.estimates[method]
        labels = np.repeat([c.label for c in self.cells], self.reps).reshape(est.shape)
        ok = ~np.isnan(est)
        return est[ok], labels[ok]


def _cell_task(args):
    cell, reps, base_seed, tol, methods = args
    return cell.index, _replicate_cell(cell, reps, base_seed, tol, methods)


def _true_rate_task(cell):
    return cell.factor_key(), true_rate(cell)


def _fill_true_rates(grid, threads):
    unique = {}
    for cell in grid:
        unique.setdefault(cell.factor_key(), cell)
    pending = [c for key, c in unique.items()
               if key + (TRUE_RATE_TOL,) not in _TRUE_RATE_CACHE]
    if threads > 1 and len(pending) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for key, value in pool.map(_true_rate_task, pending, chunksize=2):
                _TRUE_RATE_CACHE[key + (TRUE_RATE_TOL,)] = value
    else:
        for cell in pending:
            true_rate(cell)


def run_grid(
    grid: list[SimulationCell],
    reps: int,
    base_seed: int,
    tol: float = ESTIMATE_TOL,
    threads: int = 1,
    methods: tuple[str, ...] = ALL_METHODS,
    progress=None,
) -> GridRunResult:
    """Replicate every cell; results are identical for any thread count."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not grid:
        raise ConfigError("grid must contain at least one cell")
    n_cells = len(grid)
    estimates = {meth: np.full((n_cells, reps), np.nan) for meth in methods}
    failures: dict[str, Counter] = {meth: Counter() for meth in methods}
    order = {cell.index: row for row, cell in enumerate(grid)}

    def _store(index, payload):
        row = order[index]
        est, fail = payload
        for meth in methods:
            estimates[meth][row] = est[meth]
            failures[meth].update(fail[meth])

    tasks = [(cell, reps, base_seed, tol, methods) for cell in grid]
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for index, payload in pool.map(_cell_task, tasks, chunksize=4):
                _store(index, payload)
                if progress:
                    progress()
    else:
        for task in tasks:
            index, payload = _cell_task(task)
            _store(index, payload)
            if progress:
                progress()

    _fill_true_rates(grid, threads)
    true_rates = np.array([true_rate(cell) for cell in grid])
    return GridRunResult(
        cells=list(grid),
        reps=reps,
        true_rates=true_rates,
        estimates=estimates,
        failures={meth: dict(cnt) for meth, cnt in failures.items()},
    )


def evaluate_diagnosability(
    grid: list[SimulationCell],
    reps: int,
    base_seed: int,
    tol: float = ESTIMATE_TOL,
    threads: int = 1,
) -> GridRunResult:
    """Estimates for all four methods with the cells' labels attached.

    The returned result exposes ``scored_labels(method)`` ready for the roc
    module; failed replications are counted in ``failures`` and excluded.
    """
    return run_grid(grid, reps, base_seed, tol=tol, threads=threads, methods=ALL_METHODS)


FACTOR_NAMES = ("pattern", "rho", "rho_xy", "m", "a", "n")


def aggregate_by_factor(result: GridRunResult, factor: str):
    """Pooled deviation quartiles per level of one factor.

    Pools every replication-level |estimate - true| across all cells sharing
    the level (the alternative, aggregating per-cell medians, is noted in the
    docs as a sensitivity).
    """
    if factor not in FACTOR_NAMES:
        raise ConfigError(f"unknown factor {factor!r}; expected one of {FACTOR_NAMES}")
    levels = sorted({getattr(c, factor) for c in result.cells})
    table = {}
    for level in levels:
        mask = np.array([getattr(c, factor) == level for c in result.cells])
        table[level] = {
            meth: _summarize(result.pooled_deviations(meth, mask))
            for meth in result.estimates
            if meth in BIAS_METHODS
        }
    return table


def overall_summary(result: GridRunResult):
    """Pooled deviation quartiles per method over the whole grid."""
    return {
        meth: _summarize(result.pooled_deviations(meth))
        for meth in result.estimates
        if meth in BIAS_METHODS
    }
