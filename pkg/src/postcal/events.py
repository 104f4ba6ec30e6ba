"""Event-count time series with clustering-posterior credible intervals.

A document counts toward a country's series when at least one of its entity
clusters is affiliated with exactly that country and contains an attack
agent.  Clusterings are drawn from each document's antecedent posterior, so
re-evaluating the count over sample replicates yields a posterior over the
per-period series.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .coref import (
    Clustering,
    CorefDocument,
    antecedent_distributions,
    enumerate_clustering_distribution,
    sample_component_labels,
)
from .errors import ParameterError, ValidationError

DEFAULT_EVENT_SAMPLES = 100
BAND_Z = 1.96
UNCERTAIN_BOUNDS = (0.25, 0.75)


@dataclass(frozen=True)
class Mention:
    countries: frozenset[str]
    attack_agent: bool


@dataclass
class AnnotatedDocument:
    """Pre-annotated mentions plus the antecedent scores linking them."""

    doc_id: str
    date: dt.date
    mentions: tuple[Mention, ...]
    scores: CorefDocument

    def __post_init__(self) -> None:
        if len(self.mentions) != self.scores.num_mentions:
            raise ValidationError(
                f"document {self.doc_id!r} has {len(self.mentions)} mentions "
                f"but {self.scores.num_mentions} score rows"
            )


def entity_country_attack_match(
    entity: Iterable[int], mentions: Sequence[Mention], country: str
) -> bool:
    """True iff the entity carries the country, uniquely, and attacks.

    The three conjuncts: some mention lists ``country``; the union of
    country sets over the entity holds exactly one distinct country; and
    some mention is marked as an attack agent.
    """
    members = []
    for idx in entity:
        if not 1 <= idx <= len(mentions):
            raise ValidationError(f"unknown mention index {idx}")
        members.append(mentions[idx - 1])
    countries: set[str] = set()
    for m in members:
        countries.update(m.countries)
    return (
        country in countries
        and len(countries) == 1
        and any(m.attack_agent for m in members)
    )


def doc_attack_indicator(doc: AnnotatedDocument, country: str, clustering: Clustering) -> int:
    """1 iff any entity of the clustering satisfies the country-attack rule."""
    if clustering.num_mentions != len(doc.mentions):
        raise ValidationError("clustering does not partition this document's mentions")
    return int(
        any(
            entity_country_attack_match(entity, doc.mentions, country)
            for entity in clustering.entities
        )
    )


def document_indicator_matrix(
    corpus: Sequence[AnnotatedDocument],
    country: str,
    num_samples: int,
    seed: int,
) -> np.ndarray:
    """Indicator samples, shape (num_samples, num_documents).

    Document d draws its clusterings from the sub-stream (seed, d), so
    sample s is a corpus-wide replicate: every document is resolved once
    per sample index, and appending documents never disturbs the draws of
    earlier ones.  The clustering samples do not depend on the country.
    """
    if num_samples < 1:
        raise ParameterError("need at least one sample")
    matrix = np.zeros((num_samples, len(corpus)), dtype=np.uint8)
    for d, doc in enumerate(corpus):
        if doc.scores.num_mentions == 0:
            continue
        dists = antecedent_distributions(doc.scores)
        labels = sample_component_labels(dists, num_samples, seed, stream_path=(d,))
        unique_rows, inverse = np.unique(labels, axis=0, return_inverse=True)
        values = np.fromiter(
            (
                doc_attack_indicator(doc, country, Clustering.from_labels(row))
                for row in unique_rows
            ),
            dtype=np.uint8,
            count=len(unique_rows),
        )
        matrix[:, d] = values[inverse]
    return matrix


def period_start(day: dt.date, period: str) -> dt.date:
    """First day of the UTC calendar month or quarter containing ``day``."""
    if period == "month":
        return day.replace(day=1)
    if period == "quarter":
        first_month = 3 * ((day.month - 1) // 3) + 1
        return dt.date(day.year, first_month, 1)
    raise ParameterError(f"period must be 'month' or 'quarter', got {period!r}")


@dataclass(frozen=True)
class EventQueryResult:
    """Per-sample document counts for one country and period."""

    country: str
    period: dt.date
    samples: np.ndarray


@dataclass(frozen=True)
class EventBand:
    """Normal-approximation summary of count samples."""

    mean: float
    sd: float
    ci_lo: float
    ci_hi: float
    mc_stderr: float


def event_count_series(
    corpus: Sequence[AnnotatedDocument],
    country: str,
    num_samples: int = DEFAULT_EVENT_SAMPLES,
    seed: int = 42,
    period: str = "quarter",
    indicator_matrix: np.ndarray | None = None,
) -> list[EventQueryResult]:
    """Per-period count samples, periods ascending.

    Pass a precomputed ``indicator_matrix`` to share one set of clustering
    samples between the series and the uncertain-document report.
    """
    if num_samples < 2:
        raise ParameterError("event aggregation needs at least 2 samples")
    if indicator_matrix is None:
        indicator_matrix = document_indicator_matrix(corpus, country, num_samples, seed)
    keys = [period_start(doc.date, period) for doc in corpus]
    results = []
    for key in sorted(set(keys)):
        cols = [d for d, k in enumerate(keys) if k == key]
        samples = indicator_matrix[:, cols].sum(axis=1).astype(np.int64)
        results.append(EventQueryResult(country=country, period=key, samples=samples))
    return results


def posterior_band(result: EventQueryResult, z: float = BAND_Z) -> EventBand:
    """Mean, spread, and normal-approximation interval of the count samples.

    The interval is reported as-is even when it extends below zero; counts
    are bounded but the approximation is not clipped.
    """
    samples = np.asarray(result.samples, dtype=float)
    if len(samples) < 2:
        raise ParameterError("need at least 2 samples for a posterior band")
    mean = float(samples.mean())
    sd = float(samples.std(ddof=1))
    return EventBand(
        mean=mean,
        sd=sd,
        ci_lo=mean - z * sd,
        ci_hi=mean + z * sd,
        mc_stderr=sd / float(np.sqrt(len(samples))),
    )


def series_bands(series: Sequence[EventQueryResult], z: float = BAND_Z) -> list[EventBand]:
    """Bands for a whole series, warning once if any interval dips below zero."""
    bands = [posterior_band(result, z) for result in series]
    below = [s.period.isoformat() for s, b in zip(series, bands) if b.ci_lo < 0]
    if below:
        warnings.warn(
            "normal-approximation interval extends below zero for periods: " + ", ".join(below),
            stacklevel=2,
        )
    return bands


class FlaggedDocument(NamedTuple):
    doc_id: str
    country: str
    indicator_mean: float


def flag_uncertain_documents(
    corpus: Sequence[AnnotatedDocument],
    country: str,
    num_samples: int = DEFAULT_EVENT_SAMPLES,
    seed: int = 42,
    bounds: tuple[float, float] = UNCERTAIN_BOUNDS,
    indicator_matrix: np.ndarray | None = None,
) -> list[FlaggedDocument]:
    """Documents whose indicator posterior is far from settled.

    Surfaces documents whose per-document indicator mean falls inside
    ``bounds``; these are the cases where the clustering posterior alone
    decides whether the document counts.
    """
    lo, hi = bounds
    if not 0.0 <= lo <= hi <= 1.0:
        raise ParameterError("bounds must satisfy 0 <= lo <= hi <= 1")
    if indicator_matrix is None:
        indicator_matrix = document_indicator_matrix(corpus, country, num_samples, seed)
    means = indicator_matrix.mean(axis=0)
    return [
        FlaggedDocument(doc.doc_id, country, float(m))
        for doc, m in zip(corpus, means)
        if lo <= m <= hi
    ]


def exact_document_indicator_probability(doc: AnnotatedDocument, country: str) -> float:
    """Enumeration-exact P(indicator = 1); limited to small documents."""
    if doc.scores.num_mentions == 0:
        return 0.0
    dists = antecedent_distributions(doc.scores)
    total = 0.0
    for clustering, prob in enumerate_clustering_distribution(dists).items():
        if doc_attack_indicator(doc, country, clustering):
            total += prob
    return total


def exact_count_means(
    corpus: Sequence[AnnotatedDocument], country: str, period: str = "quarter"
) -> dict[dt.date, float]:
    """Enumeration-exact posterior mean of the count for each period."""
    means: dict[dt.date, float] = {}
    for doc in corpus:
        key = period_start(doc.date, period)
        means[key] = means.get(key, 0.0) + exact_document_indicator_probability(doc, country)
    return means
