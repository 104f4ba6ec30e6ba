"""Prediction-label pair extraction from chain marginals and per-label tables."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibration import (
    DEFAULT_BIN_SIZE,
    DEFAULT_CI_SAMPLES,
    DEFAULT_SEED,
    CalibReport,
    calibration_analysis,
)
from .chain import Marginals
from .errors import NoDataError, ParameterError, ValidationError

Label = str | tuple[str, str]


def format_label(label: Label) -> str:
    """Single tags print as-is; adjacent-tag pairs join with '+'."""
    if isinstance(label, tuple):
        return "+".join(label)
    return label


def extract_tag_prediction_pairs(
    marginals: Sequence[Marginals],
    gold: Sequence[Sequence[str]],
    tags: Sequence[str],
    labels: Sequence[Label],
) -> dict[Label, np.ndarray]:
    """Read off one (q, y) pair per position (or adjacent position) per label.

    A single-tag label emits the marginal probability of that tag at every
    token, paired with whether the gold tag matches; a tag-pair label does
    the same over consecutive token pairs.  Output arrays are concatenated
    across sentences in document order.
    """
    if len(marginals) != len(gold):
        raise ValidationError("marginals and gold sequences differ in length")
    tag_pos = {t: i for i, t in enumerate(tags)}
    for label in labels:
        names = label if isinstance(label, tuple) else (label,)
        for name in names:
            if name not in tag_pos:
                raise ParameterError(f"label {format_label(label)!r} is not in the tagset")

    out: dict[Label, list[np.ndarray]] = {label: [] for label in labels}
    for m, sent_gold in zip(marginals, gold):
        sent_gold = list(sent_gold)
        if m.single.shape[0] != len(sent_gold):
            raise ValidationError("marginals and gold tags are misaligned within a sentence")
        gold_arr = np.array(sent_gold)
        for label in labels:
            if isinstance(label, tuple):
                if len(sent_gold) < 2:
                    continue
                a, b = label
                q = m.pair[:, tag_pos[a], tag_pos[b]]
                y = (gold_arr[:-1] == a) & (gold_arr[1:] == b)
            else:
                q = m.single[:, tag_pos[label]]
                y = gold_arr == label
            out[label].append(np.column_stack([q, y.astype(float)]))
    return {
        label: np.concatenate(chunks) if chunks else np.empty((0, 2))
        for label, chunks in out.items()
    }


@dataclass(frozen=True)
class LabelCalibration:
    label: Label
    gold_count: int
    num_pairs: int
    report: CalibReport


def per_label_calibration(
    pairs_by_label: dict[Label, np.ndarray],
    bin_size: int = DEFAULT_BIN_SIZE,
    top_k: int = 10,
    num_samples: int = DEFAULT_CI_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[list[LabelCalibration], float]:
    """Calibration error per label for the top-K labels by gold frequency.

    Ranking ties break lexicographically on the printed label.  Returns the
    per-label rows plus the unweighted mean of their point estimates.
    """
    if top_k < 1:
        raise ParameterError("top_k must be at least 1")
    if not pairs_by_label:
        raise NoDataError("no labels to calibrate")
    counts = {label: int(np.asarray(arr)[:, 1].sum()) for label, arr in pairs_by_label.items()}
    ranked = sorted(counts, key=lambda label: (-counts[label], format_label(label)))
    if top_k > len(ranked):
        warnings.warn(
            f"top_k={top_k} exceeds the {len(ranked)} available labels; truncating",
            stacklevel=2,
        )
        top_k = len(ranked)
    rows = []
    for label in ranked[:top_k]:
        arr = pairs_by_label[label]
        report, _ = calibration_analysis(arr, bin_size=bin_size, num_samples=num_samples, seed=seed)
        rows.append(
            LabelCalibration(
                label=label,
                gold_count=counts[label],
                num_pairs=len(arr),
                report=report,
            )
        )
    average = float(np.mean([row.report.calib_err for row in rows]))
    return rows, average
