"""Erasure reduction and row matching.

After the repetition pattern is known, the repeated database is turned into an
``m x n`` database in which deleted columns hold the erasure marker
:data:`ERASED` and surplus replicas are dropped.  Rows are then matched one at
a time against the original database.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .dbgen import Database, Permutation
from .detection import DetectedPattern
from .errors import InvalidEpsilon, PatternMismatch, SizeMismatch, WidthMismatch
from .markov_model import (
    MarkovParams,
    conditional_entropy_rate,
    joint_entropy_rate,
    output_entropy_rate,
    transition_power,
)
from .repetition import RepeatedDatabase

ERASED = 0
UNMATCHED = -1


class MatchMethod(str, enum.Enum):
    CONSISTENCY = "consistency"
    TYPICALITY = "typicality"


@dataclass(frozen=True)
class MatcherConfig:
    method: MatchMethod = MatchMethod.CONSISTENCY
    epsilon: float = 0.1
    delta_for_typicality: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", MatchMethod(self.method))
        if self.method is MatchMethod.TYPICALITY and not self.epsilon > 0:
            raise InvalidEpsilon(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class ReducedDatabase:
    entries: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        e = self.entries
        erased = e == ERASED
        col_all = erased.all(axis=0)
        col_any = erased.any(axis=0)
        if e.shape[0] > 0 and not np.array_equal(col_all, col_any):
            raise PatternMismatch("erasures must cover whole columns")
        e.setflags(write=False)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    def retained_columns(self) -> np.ndarray:
        if self.rows == 0:
            return np.arange(self.cols)
        return np.flatnonzero(self.entries[0] != ERASED)


@dataclass(frozen=True)
class MatchResult:
    """``assignment[l]`` is the original row matched to reduced row ``l``."""

    assignment: np.ndarray
    collisions: int
    misses: int


def reduce(repeated: RepeatedDatabase, pattern: DetectedPattern) -> ReducedDatabase:
    """Keep the first replica of each retained column; erase deleted ones.

    For a partially detected pattern, columns whose source is unknown are
    erased as well.
    """
    if not pattern.usable:
        raise PatternMismatch(f"pattern not recovered: {pattern.reason}")
    if pattern.recovered:
        width = int(np.sum(pattern.s_hat))
        if width != repeated.cols:
            raise PatternMismatch(f"pattern width {width} != repeated width {repeated.cols}")
    src = np.asarray(pattern.column_map, dtype=np.int64)
    if src.size != len(pattern.s_hat) or np.any(src >= repeated.cols):
        raise PatternMismatch("column map does not fit the repeated database")
    kept = src >= 0
    out = np.full((repeated.rows, src.size), ERASED, dtype=repeated.entries.dtype)
    out[:, kept] = repeated.entries[:, src[kept]]
    return ReducedDatabase(out, repeated.alphabet_size)


def _check_shapes(db1: Database, reduced: ReducedDatabase) -> None:
    if db1.cols != reduced.cols:
        raise WidthMismatch(f"widths differ: {db1.cols} vs {reduced.cols}")
    if db1.rows != reduced.rows:
        raise SizeMismatch(f"row counts differ: {db1.rows} vs {reduced.rows}")


def _row_keys(entries: np.ndarray, cols: np.ndarray) -> list[bytes]:
    proj = np.ascontiguousarray(entries[:, cols])
    width = proj.shape[1] * proj.itemsize
    if width == 0:
        return [b""] * proj.shape[0]
    return proj.view(np.dtype((np.void, width))).ravel().tolist()


def _hash_join(build_keys: list[bytes], build_rows: np.ndarray, probe_keys: list[bytes]):
    """Candidate count and first candidate row for every probe key.

    The dict lookup verifies the full key after hashing, so there are no
    false positives.
    """
    first: dict[bytes, int] = {}
    count: dict[bytes, int] = defaultdict(int)
    for key, row in zip(build_keys, build_rows.tolist()):
        if key not in first:
            first[key] = row
        count[key] += 1
    counts = np.fromiter((count.get(k, 0) for k in probe_keys), dtype=np.int64, count=len(probe_keys))
    firsts = np.fromiter((first.get(k, UNMATCHED) for k in probe_keys), dtype=np.int64, count=len(probe_keys))
    return counts, firsts


def _result(counts: np.ndarray, firsts: np.ndarray) -> MatchResult:
    assignment = np.where(counts == 1, firsts, UNMATCHED)
    return MatchResult(
        assignment,
        collisions=int(np.count_nonzero(counts > 1)),
        misses=int(np.count_nonzero(counts == 0)),
    )


def candidate_counts(db1: Database, reduced: ReducedDatabase) -> np.ndarray:
    """Number of original rows consistent with each reduced row."""
    _check_shapes(db1, reduced)
    cols = reduced.retained_columns()
    counts, _ = _hash_join(_row_keys(db1.entries, cols), np.arange(db1.rows), _row_keys(reduced.entries, cols))
    return counts


def match_consistency(db1: Database, reduced: ReducedDatabase) -> MatchResult:
    """Match each reduced row to the unique original row agreeing on all retained columns."""
    _check_shapes(db1, reduced)
    cols = reduced.retained_columns()
    counts, firsts = _hash_join(
        _row_keys(db1.entries, cols),
        np.arange(db1.rows),
        _row_keys(reduced.entries, cols),
    )
    return _result(counts, firsts)


def row_log2_probs(params: MarkovParams, entries: np.ndarray) -> np.ndarray:
    """``log2 p(x^n)`` of every row under the stationary chain."""
    x = entries.astype(np.intp) - 1
    logP = np.log2(transition_power(params, 1).entries)
    out = np.log2(params.u)[x[:, 0]]
    if x.shape[1] > 1:
        out = out + logP[x[:, :-1], x[:, 1:]].sum(axis=1)
    return out


def _channel_log2(kept: int, erased: int, delta: float) -> float:
    """``log2`` of ``(1-delta)^kept * delta^erased`` with ``0 * log 0 = 0``."""
    out = 0.0
    if kept:
        out += kept * math.log2(1 - delta) if delta < 1 else -math.inf
    if erased:
        out += erased * math.log2(delta) if delta > 0 else -math.inf
    return out


def erased_row_log2_probs(params: MarkovParams, reduced: ReducedDatabase, delta: float) -> np.ndarray:
    """``log2 p(y^n)`` of every erased row: chain marginal on retained columns times erasure odds."""
    cols = reduced.retained_columns()
    m, n = reduced.rows, reduced.cols
    kept, erased = cols.size, n - cols.size
    base = _channel_log2(kept, erased, delta)
    if kept == 0:
        return np.full(m, base, dtype=np.float64)
    y = reduced.entries[:, cols].astype(np.intp) - 1
    out = np.log2(params.u)[y[:, 0]] + base
    for t in range(1, kept):
        gap = int(cols[t] - cols[t - 1])
        logP = np.log2(transition_power(params, gap).entries)
        out = out + logP[y[:, t - 1], y[:, t]]
    return out


def match_typicality(
    db1: Database,
    reduced: ReducedDatabase,
    params: MarkovParams,
    config: MatcherConfig,
) -> MatchResult:
    """Match each reduced row to the unique jointly typical original row.

    A pair ``(x, y)`` qualifies when it is consistent on retained columns and
    ``-log2 p(x)/n``, ``-log2 p(y)/n`` and ``-log2 p(x, y)/n`` are each within
    ``epsilon`` of the corresponding entropy rate.  Weak typicality is used
    because rows are Markov.
    """
    _check_shapes(db1, reduced)
    if not config.epsilon > 0:
        raise InvalidEpsilon(f"epsilon must be > 0, got {config.epsilon}")
    n = db1.cols
    cols = reduced.retained_columns()
    delta = config.delta_for_typicality
    if delta is None:
        delta = 1.0 - cols.size / n
    eps = config.epsilon
    h_x = conditional_entropy_rate(params, 0)
    h_y = output_entropy_rate(params, delta)
    h_xy = joint_entropy_rate(params, delta)

    channel = _channel_log2(cols.size, n - cols.size, delta)
    lx = row_log2_probs(params, db1.entries)
    lxy = lx + channel
    ly = erased_row_log2_probs(params, reduced, delta)
    with np.errstate(invalid="ignore"):
        x_ok = (np.abs(-lx / n - h_x) < eps) & (np.abs(-lxy / n - h_xy) < eps)
        y_ok = np.abs(-ly / n - h_y) < eps

    typical_rows = np.flatnonzero(x_ok)
    counts, firsts = _hash_join(
        _row_keys(db1.entries[typical_rows], cols),
        typical_rows,
        _row_keys(reduced.entries, cols),
    )
    # an atypical output row has no typical partner at all
    counts[~y_ok] = 0
    return _result(counts, firsts)


def match_rows(db1: Database, reduced: ReducedDatabase, params: MarkovParams, config: MatcherConfig) -> MatchResult:
    if config.method is MatchMethod.TYPICALITY:
        return match_typicality(db1, reduced, params, config)
    return match_consistency(db1, reduced)


def evaluate(result: MatchResult, truth: Permutation) -> float:
    """Fraction of original rows ``i`` whose partner row is not assigned back to ``i``."""
    if result.assignment.shape[0] != truth.size:
        raise SizeMismatch(f"{result.assignment.shape[0]} assignments for {truth.size} rows")
    m = truth.size
    if m == 0:
        return 0.0
    wrong = result.assignment[truth.mapping] != np.arange(m)
    return float(np.count_nonzero(wrong)) / m
