"""Exact independent sampling of entity clusterings from antecedent scores.

Each mention chooses an antecedent (an earlier mention, or NEW to open a
fresh entity) from a locally normalized softmax over precomputed log-scores.
Connected components of the chosen links give an entity clustering, so
independent per-mention draws yield exact independent clustering samples.
Mentions are numbered from 1 in document order; choice 0 denotes NEW.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .calibration import (
    DEFAULT_BIN_SIZE,
    DEFAULT_CI_SAMPLES,
    DEFAULT_SEED,
    BinSummary,
    CalibReport,
    calibration_analysis,
)
from .errors import NoDataError, ParameterError, ValidationError
from .rng import blocks_for, stream, uniform_matrix

NEW = 0
MAX_ENUMERATION_MENTIONS = 12
DEFAULT_COREF_SAMPLES = 1000


@dataclass
class CorefDocument:
    """Per-mention unnormalized log-scores over antecedent options.

    Row i (0-based) scores the i+1 options of mention i+1: NEW first, then
    mentions 1..i.  All scores must be finite.
    """

    score_rows: list[np.ndarray]
    doc_id: str = ""

    def __post_init__(self) -> None:
        rows = [np.asarray(row, dtype=float) for row in self.score_rows]
        for i, row in enumerate(rows):
            if row.ndim != 1 or len(row) != i + 1:
                raise ValidationError(
                    f"score row for mention {i + 1} must have {i + 1} entries, got {row.shape}"
                )
            if not np.all(np.isfinite(row)):
                raise ValidationError(f"non-finite score in row for mention {i + 1}")
        self.score_rows = rows

    @property
    def num_mentions(self) -> int:
        return len(self.score_rows)


def synthetic_document(
    num_mentions: int,
    rng: np.random.Generator,
    loc: float = 0.0,
    scale: float = 1.0,
    doc_id: str = "",
) -> CorefDocument:
    """Random score rows from a configurable normal law, for tests and demos."""
    rows = [rng.normal(loc, scale, size=i + 1) for i in range(num_mentions)]
    return CorefDocument(score_rows=rows, doc_id=doc_id)


def antecedent_distributions(doc: CorefDocument) -> list[np.ndarray]:
    """Softmax each score row with a max shift; rows sum to one."""
    dists = []
    for row in doc.score_rows:
        shifted = np.exp(row - row.max())
        dists.append(shifted / shifted.sum())
    return dists


@dataclass(frozen=True)
class Clustering:
    """A partition of mentions 1..N into entities.

    Entities list their mentions in ascending order and are themselves
    ordered by smallest member.
    """

    entities: tuple[tuple[int, ...], ...]
    _member_root: dict[int, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        seen: dict[int, int] = {}
        for entity in self.entities:
            if not entity:
                raise ValidationError("entities must be nonempty")
            for m in entity:
                if m in seen:
                    raise ValidationError(f"mention {m} appears in two entities")
                seen[m] = entity[0]
        n = len(seen)
        if seen and set(seen) != set(range(1, n + 1)):
            raise ValidationError("entities must partition mentions 1..N")
        object.__setattr__(self, "_member_root", seen)

    @classmethod
    def from_sets(cls, groups: Sequence[Sequence[int]]) -> "Clustering":
        canonical = sorted(tuple(sorted(g)) for g in groups)
        return cls(entities=tuple(canonical))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Clustering":
        """Build from per-mention component labels (0-based positions)."""
        groups: dict[int, list[int]] = {}
        for pos, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(pos + 1)
        return cls.from_sets(list(groups.values()))

    @property
    def num_mentions(self) -> int:
        return len(self._member_root)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    def same_entity(self, i: int, j: int) -> bool:
        return self._member_root[i] == self._member_root[j]


class _UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def connected_components(choices: Sequence[int]) -> Clustering:
    """Entities induced by the links (i, a_i) for every non-NEW choice."""
    n = len(choices)
    uf = _UnionFind(n)
    for pos, choice in enumerate(choices):
        choice = int(choice)
        if choice != NEW:
            if not 1 <= choice <= pos:
                raise ValidationError(
                    f"mention {pos + 1} chose antecedent {choice}, outside 1..{pos}"
                )
            uf.union(pos, choice - 1)
    groups: dict[int, list[int]] = {}
    for pos in range(n):
        groups.setdefault(uf.find(pos), []).append(pos + 1)
    return Clustering.from_sets(list(groups.values()))


def _choice_matrix(dists: Sequence[np.ndarray], uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms (S, N) to antecedent choices via per-row inverse CDF."""
    out = np.empty(uniforms.shape, dtype=np.int64)
    for i, row in enumerate(dists):
        cdf = np.cumsum(row)
        out[:, i] = np.minimum(np.searchsorted(cdf, uniforms[:, i], side="right"), len(row) - 1)
    return out


def _labels_from_choices(choices: np.ndarray) -> np.ndarray:
    """Smallest-member component label (0-based) per mention and sample.

    Antecedent links always point to earlier mentions, so a single ascending
    pass resolves every mention to the NEW mention heading its chain.
    """
    num_samples, n = choices.shape
    labels = np.empty((num_samples, n), dtype=np.int64)
    rows = np.arange(num_samples)
    for i in range(n):
        parent = choices[:, i] - 1
        inherited = labels[rows, np.maximum(parent, 0)] if i > 0 else np.zeros(num_samples, np.int64)
        labels[:, i] = np.where(parent < 0, i, inherited)
    return labels


def sample_antecedent_vector(
    dists: Sequence[np.ndarray],
    seed: int,
    sample_index: int,
    stream_path: Sequence[int] = (),
) -> np.ndarray:
    """One antecedent choice per mention, deterministic in (seed, sample_index)."""
    if sample_index < 0:
        raise ParameterError("sample_index must be nonnegative")
    n = len(dists)
    gen = stream(seed, *stream_path, block_offset=sample_index * blocks_for(n))
    return _choice_matrix(dists, gen.random(n)[None, :])[0]


def sample_clustering(
    dists: Sequence[np.ndarray],
    seed: int,
    sample_index: int,
    stream_path: Sequence[int] = (),
) -> Clustering:
    """Clustering of one posterior sample."""
    return connected_components(sample_antecedent_vector(dists, seed, sample_index, stream_path))


def sample_component_labels(
    dists: Sequence[np.ndarray],
    num_samples: int,
    seed: int,
    stream_path: Sequence[int] = (),
) -> np.ndarray:
    """Component labels for ``num_samples`` posterior samples, shape (S, N).

    Row s matches ``sample_antecedent_vector(dists, seed, s, stream_path)``
    passed through connected components.
    """
    if num_samples < 1:
        raise ParameterError("need at least one sample")
    uniforms = uniform_matrix(seed, num_samples, len(dists), *stream_path)
    return _labels_from_choices(_choice_matrix(dists, uniforms))


@dataclass(frozen=True)
class PairwiseMarginals:
    """Estimated coreference probability for every unordered mention pair."""

    q: np.ndarray
    num_samples: int
    seed: int

    @property
    def num_mentions(self) -> int:
        return self.q.shape[0]

    def prob(self, i: int, j: int) -> float:
        """P(mentions i and j corefer), 1-based indices."""
        return float(self.q[i - 1, j - 1])

    def pairs(self) -> Iterator[tuple[int, int, float]]:
        """(i, j, q) for every unordered pair with i < j, 1-based."""
        n = self.num_mentions
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                yield i, j, float(self.q[i - 1, j - 1])


def pairwise_from_labels(labels: np.ndarray) -> np.ndarray:
    """Fraction of samples in which each mention pair shares a component."""
    n = labels.shape[1]
    q = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            q[i, j] = q[j, i] = float(np.mean(labels[:, i] == labels[:, j]))
    return q


def pairwise_marginals(
    dists: Sequence[np.ndarray],
    num_samples: int = DEFAULT_COREF_SAMPLES,
    seed: int = DEFAULT_SEED,
    stream_path: Sequence[int] = (),
) -> PairwiseMarginals:
    """Monte Carlo pairwise coreference marginals from clustering samples."""
    labels = sample_component_labels(dists, num_samples, seed, stream_path)
    return PairwiseMarginals(q=pairwise_from_labels(labels), num_samples=num_samples, seed=seed)


def enumerate_clustering_distribution(dists: Sequence[np.ndarray]) -> dict[Clustering, float]:
    """Exact clustering distribution by enumerating all antecedent vectors.

    The option space has prod_i i = N! outcomes, so documents beyond
    MAX_ENUMERATION_MENTIONS mentions are refused.
    """
    n = len(dists)
    if n > MAX_ENUMERATION_MENTIONS:
        raise ParameterError(
            f"exact enumeration is limited to {MAX_ENUMERATION_MENTIONS} mentions, got {n}"
        )
    masses: dict[Clustering, float] = {}
    for choices in itertools.product(*(range(i + 1) for i in range(n))):
        prob = 1.0
        for i, c in enumerate(choices):
            prob *= float(dists[i][c])
        if prob == 0.0:
            continue
        clustering = connected_components(choices)
        masses[clustering] = masses.get(clustering, 0.0) + prob
    return masses


def enumerate_pairwise_marginals(dists: Sequence[np.ndarray]) -> np.ndarray:
    """Exact pairwise coreference probabilities from full enumeration."""
    n = len(dists)
    q = np.eye(n)
    for clustering, prob in enumerate_clustering_distribution(dists).items():
        for entity in clustering.entities:
            for a, b in itertools.combinations(entity, 2):
                q[a - 1, b - 1] += prob
                q[b - 1, a - 1] += prob
    return q


def coref_pairwise_calibration(
    docs: Sequence[tuple[PairwiseMarginals, Clustering | None]],
    bin_size: int = DEFAULT_BIN_SIZE,
    num_samples: int = DEFAULT_CI_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[CalibReport, list[BinSummary]]:
    """Calibration of pairwise marginals against gold coreference labels.

    Every unordered mention pair of every document contributes one
    prediction-label pair; the combined set delegates to the standard
    calibration pipeline.
    """
    rows = []
    for pm, gold in docs:
        if gold is None:
            raise ValidationError("gold entities are required for coreference calibration")
        if gold.num_mentions != pm.num_mentions:
            raise ValidationError("gold clustering does not cover every scored mention")
        for i, j, q in pm.pairs():
            rows.append((q, 1.0 if gold.same_entity(i, j) else 0.0))
    if not rows:
        raise NoDataError("no mention pairs to calibrate")
    return calibration_analysis(
        np.array(rows), bin_size=bin_size, num_samples=num_samples, seed=seed
    )
