"""Linear-chain lattices, forward-backward marginals, and Dirichlet-MAP HMMs.

The lattice container holds arbitrary log-potentials, so the same inference
path serves HMM probabilities and externally trained chain models whose
potentials are imported from file.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError, TrainingError, ValidationError

UNKNOWN_WORD = "<unk>"


@dataclass
class TagLattice:
    """Per-position log-potentials over a tagset plus chain scores.

    emissions: (L, K) position scores; transitions: (K, K) adjacent-tag
    scores; start and stop: (K,) boundary scores.  All scores must be finite.
    """

    tags: tuple[str, ...]
    emissions: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    stop: np.ndarray

    def __post_init__(self) -> None:
        k = len(self.tags)
        self.emissions = np.asarray(self.emissions, dtype=float)
        self.transitions = np.asarray(self.transitions, dtype=float)
        self.start = np.asarray(self.start, dtype=float)
        self.stop = np.asarray(self.stop, dtype=float)
        if self.emissions.ndim != 2 or self.emissions.shape[0] < 1 or self.emissions.shape[1] != k:
            raise ValidationError("emission scores must have shape (length >= 1, num_tags)")
        if self.transitions.shape != (k, k) or self.start.shape != (k,) or self.stop.shape != (k,):
            raise ValidationError("transition/start/stop scores do not match the tagset size")
        for name, arr in (
            ("emission", self.emissions),
            ("transition", self.transitions),
            ("start", self.start),
            ("stop", self.stop),
        ):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite {name} scores")

    @property
    def length(self) -> int:
        return self.emissions.shape[0]


@dataclass
class Marginals:
    """Posterior tag marginals for one lattice.

    single[t, k] = P(y_t = k | x); pair[t, k, k'] = P(y_t = k, y_{t+1} = k' | x).
    """

    single: np.ndarray
    pair: np.ndarray
    log_partition: float


def forward_backward(lattice: TagLattice) -> Marginals:
    """Exact single and adjacent-pair posterior marginals in log space."""
    em = lattice.emissions
    tr = lattice.transitions
    length, k = em.shape
    alpha = np.empty((length, k))
    beta = np.empty((length, k))
    alpha[0] = lattice.start + em[0]
    for t in range(1, length):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + tr, axis=0) + em[t]
    log_z = float(logsumexp(alpha[-1] + lattice.stop))
    beta[-1] = lattice.stop
    for t in range(length - 2, -1, -1):
        beta[t] = logsumexp(tr + em[t + 1] + beta[t + 1], axis=1)
    single = np.exp(alpha + beta - log_z)
    pair = np.exp(
        alpha[:-1, :, None] + tr[None, :, :] + (em[1:] + beta[1:])[:, None, :] - log_z
    )
    return Marginals(single=single, pair=pair, log_partition=log_z)


@dataclass
class HMMModel:
    """HMM estimated by Dirichlet MAP with one pseudocount everywhere.

    ``log_transition`` is (K+2, K+2) with rows/columns ordered tags, start,
    stop; rows for the tags and the start state are proper distributions
    over the K tags plus stop.  ``log_emission`` is (K, V+1) whose final
    column carries the unknown-word pseudocount mass.
    """

    tags: tuple[str, ...]
    vocab: tuple[str, ...]
    log_transition: np.ndarray
    log_emission: np.ndarray
    pseudocount: float
    tag_index: dict[str, int]
    word_index: dict[str, int]

    @property
    def start_index(self) -> int:
        return len(self.tags)

    @property
    def stop_index(self) -> int:
        return len(self.tags) + 1

    def lattice(self, words: Sequence[str]) -> TagLattice:
        """Score a sentence; out-of-vocabulary words use the unknown column."""
        if len(words) == 0:
            raise ValidationError("cannot build a lattice for an empty sentence")
        k = len(self.tags)
        unk = len(self.vocab)
        cols = [self.word_index.get(w, unk) for w in words]
        emissions = self.log_emission[:, cols].T
        return TagLattice(
            tags=self.tags,
            emissions=emissions,
            transitions=self.log_transition[:k, :k],
            start=self.log_transition[self.start_index, :k],
            stop=self.log_transition[:k, self.stop_index],
        )


def train_hmm(sentences: Sequence[Sequence[tuple[str, str]]], pseudocount: float = 1.0) -> HMMModel:
    """Count transitions and emissions, then apply add-pseudocount MAP.

    Transition rows run over the K tags plus an explicit stop state, so
    P(next | tag) = (count + 1) / (count(tag) + K + 1) with the default
    pseudocount; the start state gets the same treatment.  Emission rows
    include one extra unknown-word column, P(w | tag) =
    (count + 1) / (count(tag) + V + 1).
    """
    sentences = [list(s) for s in sentences]
    if not sentences or all(len(s) == 0 for s in sentences):
        raise TrainingError("empty tagged corpus")
    if pseudocount <= 0:
        raise ParameterError("pseudocount must be positive")
    tags = tuple(sorted({t for sent in sentences for _, t in sent}))
    vocab = tuple(sorted({w for sent in sentences for w, _ in sent}))
    tag_index = {t: i for i, t in enumerate(tags)}
    word_index = {w: i for i, w in enumerate(vocab)}
    k = len(tags)
    v = len(vocab)
    start, stop = k, k + 1
    trans_counts = np.zeros((k + 2, k + 2))
    emit_counts = np.zeros((k, v + 1))
    for sent in sentences:
        if not sent:
            continue
        prev = start
        for word, tag in sent:
            ti = tag_index[tag]
            trans_counts[prev, ti] += 1
            emit_counts[ti, word_index[word]] += 1
            prev = ti
        trans_counts[prev, stop] += 1

    log_transition = np.full((k + 2, k + 2), -np.inf)
    # Valid targets are the K tags plus stop; every source row (tags and
    # start) normalizes over those K+1 options.
    targets = list(range(k)) + [stop]
    for source in list(range(k)) + [start]:
        row_total = trans_counts[source, :].sum()
        probs = (trans_counts[source, targets] + pseudocount) / (row_total + (k + 1) * pseudocount)
        log_transition[source, targets] = np.log(probs)

    emit_probs = (emit_counts + pseudocount) / (
        emit_counts.sum(axis=1, keepdims=True) + (v + 1) * pseudocount
    )
    return HMMModel(
        tags=tags,
        vocab=vocab,
        log_transition=log_transition,
        log_emission=np.log(emit_probs),
        pseudocount=float(pseudocount),
        tag_index=tag_index,
        word_index=word_index,
    )
