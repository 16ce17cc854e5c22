"""Four-quadrant plot rendering (SVG plus a companion classification CSV)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .exceptions import ConfigError, DataError
from .series import classify_point

_STYLES = {
    "agree_outside": dict(marker="o", color="#c62828", label="agreement"),
    "disagree_outside": dict(marker="s", color="#1565c0", label="disagreement"),
    "excluded": dict(marker="x", color="#9e9e9e", label="excluded"),
}


def render_quadrant_plot(diffs, a: float, out_path) -> dict:
    """Scatter the difference pairs with the exclusion square and 45-degree line.

    Writes a deterministic SVG to ``out_path`` and a companion CSV (same stem,
    ``.csv`` suffix) with one (x, y, class) row per point.  Returns the two
    output paths and the per-class counts.
    """
    if a < 0:
        raise ConfigError(f"exclusion half-width a must be >= 0, got {a}")
    points = [
        (float(x), float(y), classify_point(x, y, a))
        for d in diffs
        for x, y in zip(d.x, d.y)
    ]
    if not points:
        raise DataError("no difference points to plot")

    out_path = Path(out_path)
    csv_path = out_path.with_suffix(".csv")
    counts = {"agree_outside": 0, "disagree_outside": 0, "excluded": 0}
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "class"])
        for x, y, cls in points:
            writer.writerow([repr(x), repr(y), cls.category.value])
            counts["excluded" if cls.excluded else
                   ("agree_outside" if cls.agrees else "disagree_outside")] += 1

    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    lim = max(max(abs(v) for v in xs + ys), a) * 1.15 or 1.0

    plt.rcParams["svg.hashsalt"] = "quadconcord"
    fig, ax = plt.subplots(figsize=(6, 6))
    for style_key, style in _STYLES.items():
        if style_key == "excluded":
            sel = [(x, y) for x, y, c in points if c.excluded]
        elif style_key == "agree_outside":
            sel = [(x, y) for x, y, c in points if c.agrees and not c.excluded]
        else:
            sel = [(x, y) for x, y, c in points if not c.agrees and not c.excluded]
        if sel:
            ax.scatter(*zip(*sel), s=28, **style)
    ax.plot([-lim, lim], [-lim, lim], linestyle=":", color="black", linewidth=1)
    if a > 0:
        square = plt.Rectangle(
            (-a, -a), 2 * a, 2 * a, fill=False, edgecolor="#616161", linewidth=1.2
        )
        ax.add_patch(square)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_xlabel("difference (gold standard)")
    ax.set_ylabel("difference (experimental)")
    ax.set_aspect("equal")
    ax.legend(loc="upper left", fontsize=8)
    try:
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise DataError(f"cannot write plot to {out_path}: {exc}") from exc
    finally:
        plt.close(fig)
    return {"svg": str(out_path), "csv": str(csv_path), "counts": counts}
