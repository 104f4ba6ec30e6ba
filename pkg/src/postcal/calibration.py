"""Calibration analysis for binary probabilistic predictions.

The central quantity is the root-mean-square gap between predicted
probabilities and empirical label frequencies, estimated by grouping
predictions into equal-count bins over the sorted prediction sequence.
A binomial normal approximation per bin drives a simulation-based 95%
confidence interval for that error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import NoDataError, ParameterError, ValidationError
from .rng import uniform_matrix

DEFAULT_BIN_SIZE = 5000
DEFAULT_CI_SAMPLES = 10000
DEFAULT_SEED = 42
CI_Z = 1.96
CROSS_ENTROPY_EPS = 1e-12


class PredictionPair(NamedTuple):
    """A prediction strength in [0, 1] paired with a binary outcome."""

    q: float
    y: int


class CurvePoint(NamedTuple):
    q_hat: float
    p_hat: float
    size: int
    stderr: float


@dataclass(frozen=True)
class BinSummary:
    """Mean prediction, empirical frequency, and count for one bin."""

    q_hat: float
    p_hat: float
    size: int


@dataclass(frozen=True)
class Binning:
    """Equal-count partition of a prediction sequence in sorted-q order.

    ``order`` is the stable argsort of the original sequence (ties keep
    input order) and ``boundaries`` holds T+1 offsets into that sorted
    sequence, so bin i covers sorted positions boundaries[i]:boundaries[i+1].
    """

    target_size: int
    order: np.ndarray
    boundaries: np.ndarray

    @property
    def num_bins(self) -> int:
        return len(self.boundaries) - 1

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def bins(self) -> list[np.ndarray]:
        """Index sets over the sorted sequence, in bin order."""
        return [np.arange(a, b) for a, b in zip(self.boundaries[:-1], self.boundaries[1:])]


@dataclass(frozen=True)
class CalibReport:
    """Calibration error with its simulation-based confidence interval."""

    calib_err: float
    calib_err_avg: float
    stderr: float
    ci_lo: float
    ci_hi: float
    num_samples: int
    seed: int


@dataclass(frozen=True)
class ScoreDecomposition:
    """Brier score split into calibration MSE plus refinement."""

    brier: float
    cross_entropy: float
    calib_mse: float
    refinement: float


def as_pair_arrays(pairs: Sequence | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Validate prediction pairs and return (q, y) float arrays."""
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        raise NoDataError("no prediction pairs")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("prediction pairs must be a sequence of (q, y) rows")
    q = arr[:, 0]
    y = arr[:, 1]
    if not np.all(np.isfinite(q)) or np.any(q < 0.0) or np.any(q > 1.0):
        raise ValidationError("prediction strengths must lie in [0, 1]")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be 0 or 1")
    return q, y


def sort_and_bin(pairs, target_size: int = DEFAULT_BIN_SIZE) -> Binning:
    """Partition pairs into contiguous equal-count bins of the sorted q sequence.

    Every bin has exactly ``target_size`` members except the last, which
    absorbs an undersized remainder from its successor and therefore has
    size in [target_size, 2*target_size - 1].  With fewer pairs than
    ``target_size`` a single low-confidence bin is produced and a warning
    is issued.
    """
    if not isinstance(target_size, (int, np.integer)) or target_size < 1:
        raise ParameterError(f"target bin size must be a positive integer, got {target_size!r}")
    q, _ = as_pair_arrays(pairs)
    n = len(q)
    order = np.argsort(q, kind="stable")
    boundaries = np.append(np.arange(0, n, target_size, dtype=np.int64), n)
    if len(boundaries) > 2 and boundaries[-1] - boundaries[-2] < target_size:
        boundaries = np.delete(boundaries, -2)
    if n < target_size:
        warnings.warn(
            f"only {n} pairs for target bin size {target_size}; "
            "reporting a single low-confidence bin",
            stacklevel=2,
        )
    return Binning(target_size=int(target_size), order=order, boundaries=boundaries)


def bin_stats(binning: Binning, pairs) -> list[BinSummary]:
    """Per-bin mean prediction and empirical label frequency.

    ``pairs`` must be the sequence the binning was built from.
    """
    q, y = as_pair_arrays(pairs)
    if len(q) != len(binning.order):
        raise ValidationError("binning was produced from a different pair sequence")
    q_sorted = q[binning.order]
    y_sorted = y[binning.order]
    starts = binning.boundaries[:-1]
    sizes = binning.sizes
    q_hat = np.add.reduceat(q_sorted, starts) / sizes
    p_hat = np.add.reduceat(y_sorted, starts) / sizes
    return [
        BinSummary(q_hat=float(qh), p_hat=float(ph), size=int(s))
        for qh, ph, s in zip(q_hat, p_hat, sizes)
    ]


def _summary_arrays(summaries: Sequence[BinSummary]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    q_hat = np.array([s.q_hat for s in summaries], dtype=float)
    p_hat = np.array([s.p_hat for s in summaries], dtype=float)
    sizes = np.array([s.size for s in summaries], dtype=float)
    return q_hat, p_hat, sizes


def calibration_error(summaries: Sequence[BinSummary], total: int) -> float:
    """Size-weighted RMS gap between mean prediction and label frequency:
    sqrt((1/N) * sum_i |B_i| * (q_hat_i - p_hat_i)^2)."""
    if total == 0:
        raise NoDataError("calibration error over zero pairs")
    q_hat, p_hat, sizes = _summary_arrays(summaries)
    if sizes.sum() != total:
        raise ParameterError("bin sizes do not sum to the stated total")
    return float(np.sqrt(np.sum(sizes * (q_hat - p_hat) ** 2) / total))


def calib_error_ci(
    summaries: Sequence[BinSummary],
    total: int,
    num_samples: int = DEFAULT_CI_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> CalibReport:
    """Simulation-based 95% confidence interval for the calibration error.

    Each simulation redraws every bin's empirical frequency from a normal
    with mean p_hat_i and variance p_hat_i * (1 - p_hat_i) / |B_i|, clips
    the draw to [0, 1], and recomputes the calibration error against the
    unchanged q_hat_i.  The reported interval is mean +/- 1.96 standard
    deviations (divisor S - 1) of the simulated errors.  Deterministic
    given (summaries, total, num_samples, seed).
    """
    if num_samples < 2:
        raise ParameterError("confidence interval needs at least 2 samples")
    if not summaries:
        raise NoDataError("no bin summaries")
    point = calibration_error(summaries, total)
    q_hat, p_hat, sizes = _summary_arrays(summaries)
    sigma = np.sqrt(p_hat * (1.0 - p_hat) / sizes)
    if np.all(sigma == 0.0):
        # every frequency is 0 or 1, so all simulations reproduce the point
        avg, sd = point, 0.0
    else:
        # One uniform per bin per simulation, mapped through the normal
        # inverse CDF; a fixed draw count keeps the counter stream aligned.
        z = ndtri(uniform_matrix(seed, num_samples, len(summaries)))
        with np.errstate(invalid="ignore"):
            draws = np.clip(p_hat + sigma * z, 0.0, 1.0)
        draws = np.where(sigma > 0.0, draws, p_hat)
        errs = np.sqrt(((q_hat - draws) ** 2 @ sizes) / total)
        avg = float(errs.mean())
        sd = float(errs.std(ddof=1))
    return CalibReport(
        calib_err=point,
        calib_err_avg=avg,
        stderr=sd,
        ci_lo=avg - CI_Z * sd,
        ci_hi=avg + CI_Z * sd,
        num_samples=int(num_samples),
        seed=int(seed),
    )


def brier_score(pairs) -> float:
    """Mean squared error between predictions and binary outcomes."""
    q, y = as_pair_arrays(pairs)
    return float(np.mean((y - q) ** 2))


def cross_entropy(pairs) -> float:
    """Average negative log likelihood, natural log.

    Predictions are clamped to [1e-12, 1 - 1e-12] so exact 0/1 predictions
    stay finite and reportable.
    """
    q, y = as_pair_arrays(pairs)
    qc = np.clip(q, CROSS_ENTROPY_EPS, 1.0 - CROSS_ENTROPY_EPS)
    return float(-np.mean(y * np.log(qc) + (1.0 - y) * np.log1p(-qc)))


def decomposition_by_unique_q(pairs) -> ScoreDecomposition:
    """Split the Brier score into calibration MSE and refinement.

    Pairs are grouped by exact prediction value; with group frequency p_g
    and weight n_g/N the calibration term is sum_g (n_g/N)(q_g - p_g)^2 and
    the refinement term is sum_g (n_g/N) p_g (1 - p_g).  Their sum equals
    the Brier score exactly.
    """
    q, y = as_pair_arrays(pairs)
    values, inverse, counts = np.unique(q, return_inverse=True, return_counts=True)
    positives = np.bincount(inverse, weights=y, minlength=len(values))
    p_bar = positives / counts
    weight = counts / len(q)
    calib_mse = float(np.sum(weight * (values - p_bar) ** 2))
    refinement = float(np.sum(weight * p_bar * (1.0 - p_bar)))
    return ScoreDecomposition(
        brier=brier_score(pairs),
        cross_entropy=cross_entropy(pairs),
        calib_mse=calib_mse,
        refinement=refinement,
    )


def fixed_width_binning(pairs, width: float) -> list[BinSummary]:
    """Summaries over equal-width intervals [k*width, (k+1)*width).

    The final interval is closed at 1.0, and empty intervals produce no
    summary.  Kept for comparison against adaptive binning; adaptive bins
    are the default everywhere else.
    """
    if not 0.0 < width <= 1.0:
        raise ParameterError(f"bin width must lie in (0, 1], got {width!r}")
    q, y = as_pair_arrays(pairs)
    num_bins = int(np.ceil(1.0 / width))
    while num_bins > 1 and (num_bins - 1) * width >= 1.0:
        num_bins -= 1
    idx = np.floor_divide(q, width).astype(np.int64)
    # Repair one-ulp drift from the float division against the literal
    # interval membership k*width <= q < (k+1)*width.
    idx = np.where(idx * width > q, idx - 1, idx)
    idx = np.where((idx + 1) * width <= q, idx + 1, idx)
    idx = np.minimum(idx, num_bins - 1)
    counts = np.bincount(idx, minlength=num_bins)
    q_sums = np.bincount(idx, weights=q, minlength=num_bins)
    y_sums = np.bincount(idx, weights=y, minlength=num_bins)
    return [
        BinSummary(q_hat=float(q_sums[k] / counts[k]), p_hat=float(y_sums[k] / counts[k]), size=int(counts[k]))
        for k in range(num_bins)
        if counts[k] > 0
    ]


def bin_standard_error(p_hat: float, size: int) -> float:
    """Binomial standard error sqrt(p(1-p)/n); at most 0.5/sqrt(n)."""
    return float(np.sqrt(p_hat * (1.0 - p_hat) / size))


def reliability_curve(summaries: Sequence[BinSummary]) -> list[CurvePoint]:
    """Curve points (q_hat, p_hat, size, stderr) ordered by q_hat.

    Points above the diagonal mark underconfidence (q < p), points below
    mark overconfidence.
    """
    if not summaries:
        raise NoDataError("no bin summaries")
    ordered = sorted(summaries, key=lambda s: s.q_hat)
    return [
        CurvePoint(s.q_hat, s.p_hat, s.size, bin_standard_error(s.p_hat, s.size))
        for s in ordered
    ]


def calibration_analysis(
    pairs,
    bin_size: int = DEFAULT_BIN_SIZE,
    num_samples: int = DEFAULT_CI_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[CalibReport, list[BinSummary]]:
    """Bin, summarize, and interval-estimate in one call."""
    binning = sort_and_bin(pairs, bin_size)
    summaries = bin_stats(binning, pairs)
    report = calib_error_ci(summaries, total=len(binning.order), num_samples=num_samples, seed=seed)
    return report, summaries
