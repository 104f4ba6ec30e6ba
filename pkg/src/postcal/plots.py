"""Matplotlib figure emission for curves, per-label tables, and count bands."""

from __future__ import annotations

import datetime as dt
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .calibration import CI_Z, CurvePoint
from .events import EventBand, EventQueryResult
from .tagging import LabelCalibration, format_label

# Fixed hash salt keeps SVG element ids stable across runs.
_RC = {"svg.hashsalt": "postcal"}


def _save(fig, path) -> None:
    path = str(path)
    kwargs = {"metadata": {"Date": None}} if path.endswith(".svg") else {}
    with plt.rc_context(_RC):
        fig.savefig(path, **kwargs)
    plt.close(fig)


def reliability_plot(points: Sequence[CurvePoint], path, title: str = "Reliability") -> None:
    """Diagonal reference, one marker per bin, error bars of +/- 1.96 stderr.

    The bin markers live in an SVG group with id 'bin-points'.
    """
    q = [p.q_hat for p in points]
    p_hat = [p.p_hat for p in points]
    err = [CI_Z * p.stderr for p in points]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], linestyle="--", color="0.6", linewidth=1)
    ax.errorbar(q, p_hat, yerr=err, fmt="none", ecolor="tab:blue", elinewidth=1, capsize=2)
    ax.plot(q, p_hat, "o", color="tab:blue", markersize=4, gid="bin-points")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("mean predicted probability")
    ax.set_ylabel("empirical frequency")
    ax.set_title(title)
    _save(fig, path)


def label_error_plot(rows: Sequence[LabelCalibration], average: float, path) -> None:
    """Bar per label with its interval whisker, plus a trailing average bar."""
    names = [format_label(row.label) for row in rows] + ["average"]
    heights = [row.report.calib_err for row in rows] + [average]
    fig, ax = plt.subplots(figsize=(max(5, 0.6 * len(names)), 4))
    ax.bar(range(len(names)), heights, color=["tab:blue"] * len(rows) + ["tab:orange"])
    for x, row in enumerate(rows):
        ax.plot([x, x], [row.report.ci_lo, row.report.ci_hi], color="black", linewidth=1)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("calibration error")
    fig.tight_layout()
    _save(fig, path)


def event_band_plot(
    series_map: dict[str, tuple[list[EventQueryResult], list[EventBand]]],
    path,
    period: str = "quarter",
) -> None:
    """Posterior-mean line with a shaded 95% band, one color per country."""
    fig, ax = plt.subplots(figsize=(8, 4))
    for country, (series, bands) in series_map.items():
        dates: list[dt.date] = [result.period for result in series]
        means = [band.mean for band in bands]
        los = [band.ci_lo for band in bands]
        his = [band.ci_hi for band in bands]
        (line,) = ax.plot(dates, means, label=country)
        ax.fill_between(dates, los, his, color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_xlabel(f"period ({period})")
    ax.set_ylabel("documents")
    ax.legend()
    fig.autofmt_xdate()
    fig.tight_layout()
    _save(fig, path)
