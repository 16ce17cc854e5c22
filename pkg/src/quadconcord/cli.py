"""Command-line interface.

Subcommands: diff, ccr, proposed, controls, analyze, simulate, roc, plot,
subsample-auc.  Global flags --seed/--tol/--threads apply everywhere; a JSON
--config file may preset any option (explicit flags win).  All output is
deterministic given --seed, regardless of --threads.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from ._rng import derive_seed
from .exceptions import ConfigError, DataError, DegenerateLabelsError, NumericalError
from .io import ingest
from .model import stack_diffs
from .mvn import DEFAULT_TOL
from .roc import roc_curve
from .series import AgreementSpec
from .simulation import (
    ESTIMATE_TOL,
    FACTOR_NAMES,
    aggregate_by_factor,
    build_factor_grid,
    evaluate_diagnosability,
    overall_summary,
    _summarize,
)
from .workflow import (
    AnalysisConfig,
    FixedExclusion,
    QuantileExclusion,
    analyze,
    pair_diffs,
    resolve_exclusion,
    subsample_auc,
    _compute_estimators,
    _result_entry,
)


def _echo_json(payload, output):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except DataError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)

    return wrapped


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Base random seed.")
@click.option("--tol", type=float, default=None,
              help=f"Integration tolerance [default: {DEFAULT_TOL}; simulate uses "
                   f"{ESTIMATE_TOL} for replication estimates unless set].")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for simulate/subsample runs.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file presetting options per subcommand.")
@click.pass_context
def main(ctx, seed, tol, threads, config_path):
    """Trending-agreement statistics for method-comparison studies."""
    overrides = {}
    if config_path:
        try:
            overrides = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            click.echo(f"error: config file is not valid JSON: {exc}", err=True)
            sys.exit(2)
        if not isinstance(overrides, dict):
            click.echo("error: config file must contain a JSON object", err=True)
            sys.exit(2)
        ctx.default_map = overrides
        source = ctx.get_parameter_source
        if source("seed") == click.core.ParameterSource.DEFAULT and "seed" in overrides:
            seed = int(overrides["seed"])
        if tol is None and "tol" in overrides:
            tol = float(overrides["tol"])
        if source("threads") == click.core.ParameterSource.DEFAULT and "threads" in overrides:
            threads = int(overrides["threads"])
    ctx.obj = {"seed": seed, "tol": tol, "threads": threads}


def dataset_options(fn):
    fn = click.option("--input", "input_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="Dataset CSV.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["long", "wide"]),
                      default="long", show_default=True)(fn)
    fn = click.option("--gold", required=True, help="Gold-standard method id.")(fn)
    fn = click.option("--experimental", required=True, help="Experimental method id.")(fn)
    return fn


def exclusion_options(fn):
    fn = click.option("--a", "a_fixed", type=float, default=None,
                      help="Fixed exclusion half-width.")(fn)
    fn = click.option("--a-quantile", type=float, default=None,
                      help="Exclusion half-width as a quantile of pooled |differences|.")(fn)
    return fn


def _a_mode(a_fixed, a_quantile, default_quantile=0.1):
    if a_fixed is not None and a_quantile is not None:
        raise ConfigError("--a and --a-quantile are mutually exclusive")
    if a_fixed is not None:
        return FixedExclusion(a_fixed)
    if a_quantile is not None:
        return QuantileExclusion(a_quantile)
    return QuantileExclusion(default_quantile)


def _single_method_report(ctx, input_path, fmt, gold, experimental, a_fixed,
                          a_quantile, m, methods):
    dataset = ingest(input_path, fmt)
    T = dataset.t_diffs
    spec = AgreementSpec(T=T, m=T if m is None else m)
    a_mode = _a_mode(a_fixed, a_quantile)
    a = resolve_exclusion(dataset, (gold, experimental), a_mode)
    z = stack_diffs(pair_diffs(dataset, gold, experimental))
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else DEFAULT_TOL
    estimates, errors = _compute_estimators(
        z, a, spec, tol, derive_seed(ctx.obj["seed"], "analyze", gold, experimental)
    )
    report = {
        "pair": {"gold": gold, "experimental": experimental},
        "n_subjects": dataset.n_subjects,
        "t_diffs": T,
        "m": spec.m,
        "exclusion": {"mode": "fixed" if isinstance(a_mode, FixedExclusion) else "quantile",
                      "a": a},
        "seed": ctx.obj["seed"],
        "tol": tol,
        "estimates": {k: _result_entry(v) for k, v in estimates.items() if k in methods},
        "errors": {k: v for k, v in errors.items() if k in methods},
    }
    if isinstance(a_mode, QuantileExclusion):
        report["exclusion"]["q"] = a_mode.q
    return report


@main.command("diff")
@dataset_options
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Output CSV (default stdout).")
@click.pass_context
@cli_errors
def diff_cmd(ctx, input_path, fmt, gold, experimental, output):
    """Write per-subject sequential differences as CSV (subject,t,x,y)."""
    dataset = ingest(input_path, fmt)
    diffs = pair_diffs(dataset, gold, experimental)
    rows = [["subject", "t", "x", "y"]]
    for d in diffs:
        for t, (x, y) in enumerate(zip(d.x, d.y), start=1):
            rows.append([d.subject_id, t, repr(float(x)), repr(float(y))])
    text = "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("ccr")
@dataset_options
@exclusion_options
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@cli_errors
def ccr_cmd(ctx, input_path, fmt, gold, experimental, a_fixed, a_quantile, output):
    """Conventional concordance rate for one method pair."""
    report = _single_method_report(ctx, input_path, fmt, gold, experimental,
                                   a_fixed, a_quantile, None, ("ccr",))
    _echo_json(report, output)
    if report["errors"]:
        sys.exit(4)


@main.command("proposed")
@dataset_options
@exclusion_options
@click.option("-m", type=int, default=None, help="Minimum agreements [default: T].")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@cli_errors
def proposed_cmd(ctx, input_path, fmt, gold, experimental, a_fixed, a_quantile, m, output):
    """Model-based concordance rate for one method pair."""
    report = _single_method_report(ctx, input_path, fmt, gold, experimental,
                                   a_fixed, a_quantile, m, ("proposal",))
    _echo_json(report, output)
    if report["errors"]:
        sys.exit(4)


@main.command("controls")
@dataset_options
@exclusion_options
@click.option("-m", type=int, default=None, help="Minimum agreements [default: T].")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@cli_errors
def controls_cmd(ctx, input_path, fmt, gold, experimental, a_fixed, a_quantile, m, output):
    """Binomial (control1) and Poisson-binomial (control2) rates."""
    report = _single_method_report(ctx, input_path, fmt, gold, experimental,
                                   a_fixed, a_quantile, m, ("control1", "control2"))
    _echo_json(report, output)
    if report["errors"]:
        sys.exit(4)


@main.command("analyze")
@dataset_options
@exclusion_options
@click.option("-m", type=int, default=None, help="Minimum agreements [default: T].")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@cli_errors
def analyze_cmd(ctx, input_path, fmt, gold, experimental, a_fixed, a_quantile, m, output):
    """All four estimators with diagnostics for one method pair."""
    dataset = ingest(input_path, fmt)
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else DEFAULT_TOL
    config = AnalysisConfig(
        gold=gold,
        experimental=experimental,
        a_mode=_a_mode(a_fixed, a_quantile),
        m=m,
        tol=tol,
        seed=ctx.obj["seed"],
    )
    report = analyze(dataset, config)
    _echo_json(report, output)
    if report["errors"]:
        sys.exit(4)


@main.command("plot")
@dataset_options
@exclusion_options
@click.option("--output", required=True, type=click.Path(dir_okay=False),
              help="Output SVG path (companion CSV written alongside).")
@click.pass_context
@cli_errors
def plot_cmd(ctx, input_path, fmt, gold, experimental, a_fixed, a_quantile, output):
    """Render the four-quadrant plot for one method pair."""
    from .plotting import render_quadrant_plot

    dataset = ingest(input_path, fmt)
    a = resolve_exclusion(dataset, (gold, experimental), _a_mode(a_fixed, a_quantile))
    diffs = pair_diffs(dataset, gold, experimental)
    info = render_quadrant_plot(diffs, a, output)
    info["a"] = a
    _echo_json(info, None)


def _parse_levels(text, cast):
    if text is None:
        return None
    try:
        return tuple(cast(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse level list {text!r}: {exc}") from None


def _parse_rho(text):
    if text is None:
        return None
    mapping = {"0": 0.0, "1/3": 1.0 / 3.0, "2/3": 2.0 / 3.0}
    levels = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        levels.append(mapping[part] if part in mapping else float(part))
    return tuple(levels)


@main.command("simulate")
@click.option("--reps", type=int, default=100, show_default=True)
@click.option("--patterns", default=None, help="Comma list of mean patterns (1..30).")
@click.option("--rho", default=None, help="Comma list from {0, 1/3, 2/3}.")
@click.option("--rho-xy", default=None, help="Comma list from {0, 1/3}.")
@click.option("--m", "m_levels", default=None, help="Comma list from {1, 2}.")
@click.option("--a", "a_levels", default=None, help="Comma list from {0.5, 1.0}.")
@click.option("--n", "n_levels", default=None, help="Comma list from {15, 40}.")
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@cli_errors
def simulate_cmd(ctx, reps, patterns, rho, rho_xy, m_levels, a_levels, n_levels, output_dir):
    """Run the factorial simulation study and emit summary tables."""
    grid = build_factor_grid(
        patterns=_parse_levels(patterns, int),
        rho=_parse_rho(rho),
        rho_xy=_parse_rho(rho_xy),
        m=_parse_levels(m_levels, int),
        a=_parse_levels(a_levels, float),
        n=_parse_levels(n_levels, int),
    )
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else ESTIMATE_TOL
    seed = ctx.obj["seed"]
    threads = ctx.obj["threads"]
    click.echo(f"simulating {len(grid)} cells x {reps} replications "
               f"(threads={threads})", err=True)
    result = evaluate_diagnosability(grid, reps, seed, tol=tol, threads=threads)

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_cells_csv(out / "cells.csv", result)
    for factor in FACTOR_NAMES:
        _write_factor_csv(out / f"factor_{factor}.csv", result, factor)
    auc = {}
    auc_note = None
    try:
        for meth in result.estimates:
            scores, labels = result.scored_labels(meth)
            auc[meth] = roc_curve(zip(scores, labels)).auc
    except DegenerateLabelsError as exc:
        auc = {}
        auc_note = f"AUC unavailable: {exc}"
    with open(out / "auc.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "auc", "n_scores"])
        for meth in sorted(auc):
            writer.writerow([meth, repr(auc[meth]), result.scored_labels(meth)[0].size])
    report = {
        "n_cells": len(grid),
        "reps": reps,
        "seed": seed,
        "tol": tol,
        "overall": {
            meth: {"median": s.median, "q1": s.q1, "q3": s.q3, "n": s.n_ok}
            for meth, s in overall_summary(result).items()
        },
        "auc": auc,
        "failures": result.failures,
    }
    if auc_note:
        report["auc_note"] = auc_note
    _echo_json(report, out / "report.json")
    click.echo(f"wrote {out}/report.json", err=True)


def _write_cells_csv(path, result):
    methods = [m for m in ("control1", "control2", "proposal") if m in result.estimates]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["index", "pattern", "rho", "rho_xy", "m", "a", "n", "label", "true_rate"]
        for meth in methods:
            header += [f"{meth}_median", f"{meth}_q1", f"{meth}_q3", f"{meth}_n_ok"]
        writer.writerow(header)
        for row, cell in enumerate(result.cells):
            record = [cell.index, cell.pattern, repr(cell.rho), repr(cell.rho_xy),
                      cell.m, repr(cell.a), cell.n, int(cell.label),
                      repr(float(result.true_rates[row]))]
            for meth in methods:
                dev = result.deviations(meth)[row]
                s = _summarize(dev[~np.isnan(dev)])
                record += [repr(s.median), repr(s.q1), repr(s.q3), s.n_ok]
            writer.writerow(record)


def _write_factor_csv(path, result, factor):
    table = aggregate_by_factor(result, factor)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["factor", "level", "method", "median", "q1", "q3", "n"])
        for level in table:
            for meth, s in table[level].items():
                writer.writerow([factor, repr(level) if isinstance(level, float) else level,
                                 meth, repr(s.median), repr(s.q1), repr(s.q3), s.n_ok])


@main.command("roc")
@click.option("--scores", "scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV with header score,label (label 0/1 or true/false).")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@cli_errors
def roc_cmd(scores_path, output):
    """ROC curve and AUC for a scored-label file."""
    data = []
    with open(scores_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or [h.strip().lower() for h in rows[0]] != ["score", "label"]:
        raise DataError("scores file must have header 'score,label'")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            score = float(row[0])
        except ValueError:
            raise DataError(f"line {lineno}: score {row[0]!r} is not a number") from None
        lab = row[1].strip().lower()
        if lab in ("1", "true"):
            label = True
        elif lab in ("0", "false"):
            label = False
        else:
            raise DataError(f"line {lineno}: label {row[1]!r} not in 0/1/true/false")
        data.append((score, label))
    curve = roc_curve(data)
    _echo_json({"auc": curve.auc, "points": curve.points.tolist()}, output)


def _parse_pair(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"pair must be 'gold,experimental', got {text!r}")
    return tuple(parts)


@main.command("subsample-auc")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["long", "wide"]),
              default="long", show_default=True)
@click.option("--positive-pair", required=True,
              help="Comma pair labeled as agreeing, e.g. 'J,R'.")
@click.option("--negative-pair", "negative_pairs", multiple=True, required=True,
              help="Comma pair labeled as disagreeing (repeatable).")
@exclusion_options
@click.option("-k", type=int, default=10, show_default=True,
              help="Subjects per subsample.")
@click.option("--iters", type=int, default=1000, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@cli_errors
def subsample_auc_cmd(ctx, input_path, fmt, positive_pair, negative_pairs,
                      a_fixed, a_quantile, k, iters, output):
    """Subsample-and-classify AUC comparison of the four estimators."""
    dataset = ingest(input_path, fmt)
    pairs = [(_parse_pair(positive_pair), True)]
    pairs += [(_parse_pair(p), False) for p in negative_pairs]
    tol = ctx.obj["tol"] if ctx.obj["tol"] is not None else DEFAULT_TOL
    report = subsample_auc(
        dataset,
        pairs,
        k=k,
        iters=iters,
        seed=ctx.obj["seed"],
        a_mode=_a_mode(a_fixed, a_quantile),
        tol=tol,
    )
    _echo_json(report, output)


if __name__ == "__main__":
    main()
