"""Counter-based random streams.

All randomized operations draw from Philox streams keyed by a user seed plus
an optional integer path (for example a document index).  Sample ``s`` of a
stream reads from a fixed counter offset, so any single sample can be
regenerated in isolation, and generating all samples in one bulk call yields
the same numbers regardless of evaluation order or parallel schedule.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

# Philox emits 64-bit words in counter blocks of four, and advance() moves
# the counter in whole blocks.  Per-sample offsets must be block aligned or
# bulk and per-sample generation would disagree.
WORDS_PER_BLOCK = 4


def blocks_for(num_draws: int) -> int:
    """Counter blocks consumed by ``num_draws`` uniform doubles."""
    return -(-num_draws // WORDS_PER_BLOCK)


def philox_key(seed: int, *path: int) -> int:
    """Derive a 128-bit Philox key from a seed and an integer path."""
    if seed < 0:
        raise ParameterError("seed must be a nonnegative integer")
    entropy = [int(seed)] + [int(p) for p in path]
    words = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


def stream(seed: int, *path: int, block_offset: int = 0) -> np.random.Generator:
    """Generator positioned ``block_offset`` counter blocks into the stream."""
    bit_gen = np.random.Philox(key=philox_key(seed, *path))
    if block_offset:
        bit_gen.advance(block_offset)
    return np.random.Generator(bit_gen)


def uniform_matrix(seed: int, num_samples: int, draws_per_sample: int, *path: int) -> np.ndarray:
    """Uniform draws of shape (num_samples, draws_per_sample).

    Row ``s`` equals the first ``draws_per_sample`` doubles of
    ``stream(seed, *path, block_offset=s * blocks_for(draws_per_sample))``.
    """
    width = blocks_for(draws_per_sample) * WORDS_PER_BLOCK
    u = stream(seed, *path).random(num_samples * width)
    return u.reshape(num_samples, width)[:, :draws_per_sample]
