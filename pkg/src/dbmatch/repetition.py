"""Random column-repetition channel: deletions and consecutive replicas."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import rng
from .dbgen import Database
from .errors import InvalidDistribution, SizeMismatch


@dataclass(frozen=True)
class RepetitionDistribution:
    """Distribution of per-column repetition counts over ``0..s_max``."""

    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution("probs must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidDistribution("probs must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidDistribution(f"probs sum to {p.sum()!r}, expected 1")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    @property
    def s_max(self) -> int:
        return len(self.probs) - 1

    def delta(self) -> float:
        return self.probs[0]


@dataclass(frozen=True)
class RepetitionPattern:
    s: tuple

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def total_width(self) -> int:
        return int(sum(self.s))

    def to_json(self) -> str:
        return json.dumps(list(self.s))

    @classmethod
    def from_json(cls, text: str) -> RepetitionPattern:
        values = json.loads(text)
        if not isinstance(values, list) or not all(isinstance(v, int) and v >= 0 for v in values):
            raise ValueError("pattern must be a JSON array of non-negative integers")
        return cls(tuple(values))


@dataclass(frozen=True)
class RepeatedDatabase:
    """Output of the channel; the generating pattern is deliberately not kept."""

    entries: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])


def sample_pattern(dist: RepetitionDistribution, n: int, seed: int) -> RepetitionPattern:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    draws = rng.uniforms(seed, n)
    s = rng.inverse_cdf(np.cumsum(dist.probs), draws)
    # guard against landing on a zero-probability tail entry through cdf rounding
    s = np.minimum(s, dist.s_max)
    return RepetitionPattern(tuple(int(x) for x in s))


def apply_repetitions(db: Database, pattern: RepetitionPattern) -> RepeatedDatabase:
    """Replace column ``j`` by ``s_j`` adjacent copies of itself (none if ``s_j = 0``)."""
    if pattern.n != db.cols:
        raise SizeMismatch(f"pattern length {pattern.n} for {db.cols} columns")
    cols = np.repeat(np.arange(db.cols), np.asarray(pattern.s, dtype=np.intp))
    return RepeatedDatabase(np.ascontiguousarray(db.entries[:, cols]), db.alphabet_size)
