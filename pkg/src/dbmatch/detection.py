"""Repetition-pattern recovery from collapsed column histograms.

Each column is summarized by one permutation-invariant number: how many of its
entries differ from a marked symbol.  Comparing the summaries of the original
columns with those of the repeated columns reveals which columns were deleted
and how often the others were copied.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import RowCountMismatch, SymbolOutOfRange

MARKED = 1
OTHER = 2


class DetectionStatus(str, enum.Enum):
    RECOVERED = "Recovered"
    PARTIAL = "Partial"
    DETECTION_ERROR = "DetectionError"


UNKNOWN = -2
DELETED = -1


@dataclass(frozen=True)
class HistogramVector:
    counts: np.ndarray
    row_count: int

    @property
    def size(self) -> int:
        return int(self.counts.shape[0])

    def has_duplicates(self) -> bool:
        return np.unique(self.counts).size < self.counts.size


@dataclass(frozen=True)
class DetectedPattern:
    """Result of :func:`detect_pattern`.

    ``column_map[j]`` is the index of the first replica of column ``j`` in the
    repeated database, :data:`DELETED` if the column was deleted, or
    :data:`UNKNOWN` if it could not be determined (``PARTIAL`` status only,
    where ``s_hat[j]`` may also be -1).  ``duplicates`` records whether the
    first histogram vector had repeated values.
    """

    s_hat: tuple
    status: DetectionStatus
    duplicates: bool = False
    reason: str = ""
    column_map: tuple = ()

    @property
    def recovered(self) -> bool:
        return self.status is DetectionStatus.RECOVERED

    @property
    def usable(self) -> bool:
        return self.status is not DetectionStatus.DETECTION_ERROR


def column_map_from_counts(s_hat) -> tuple:
    starts = np.concatenate(([0], np.cumsum(s_hat)[:-1])).astype(np.int64)
    return tuple(int(t) if c > 0 else DELETED for t, c in zip(starts, s_hat))


def _entries(db) -> np.ndarray:
    return np.asarray(getattr(db, "entries", db))


def collapse(db, marked_symbol: int = MARKED, alphabet_size: int | None = None) -> np.ndarray:
    """Map ``marked_symbol`` to 1 and every other symbol to 2."""
    k = alphabet_size if alphabet_size is not None else getattr(db, "alphabet_size", None)
    if marked_symbol < 1 or (k is not None and marked_symbol > k):
        raise SymbolOutOfRange(f"marked symbol {marked_symbol} not in 1..{k}")
    e = _entries(db)
    return np.where(e == marked_symbol, MARKED, OTHER).astype(np.uint8)


def column_histograms(collapsed) -> HistogramVector:
    """Count the entries equal to 2 in every column."""
    e = _entries(collapsed)
    counts = np.count_nonzero(e == OTHER, axis=0).astype(np.int64)
    return HistogramVector(counts, int(e.shape[0]))


def _strict(h1: np.ndarray, h2: np.ndarray) -> tuple[np.ndarray | None, str]:
    # one pass over h2: value -> [first index, count]; runs must be contiguous
    seen: dict[int, list[int]] = {}
    prev = None
    for t, v in enumerate(h2.tolist()):
        if v in seen:
            if v != prev:
                return None, f"value {v} is not contiguous in the repeated histograms"
            seen[v][1] += 1
        else:
            seen[v] = [t, 1]
        prev = v
    s_hat = np.zeros(h1.size, dtype=np.int64)
    last_first = -1
    for j, v in enumerate(h1.tolist()):
        hit = seen.pop(v, None)
        if hit is None:
            continue
        first, count = hit
        if first < last_first:
            return None, "blocks appear out of column order"
        last_first = first
        s_hat[j] = count
    if seen:
        return None, f"{len(seen)} repeated-histogram values have no source column"
    return s_hat, ""


def _align(h1: np.ndarray, h2: np.ndarray):
    """Every column fact shared by all expansions of ``h1`` that reproduce ``h2``.

    Column ``j`` repeated ``s`` times starting at position ``t`` of ``h2`` is a
    feasible option when the prefix ``h2[:t]`` can come from columns ``< j``,
    the suffix ``h2[t+s:]`` from columns ``> j``, and ``h2[t:t+s]`` all equal
    ``h1[j]``.  Returns ``(s_hat, column_map, n_solutions)`` with the count of
    consistent patterns capped at 2, or ``None`` when no pattern fits.
    """
    n, K = h1.size, h2.size
    a, b = h1.tolist(), h2.tolist()
    run = [0] * (K + 1)
    for t in range(K - 1, -1, -1):
        run[t] = run[t + 1] + 1 if t + 1 < K and b[t + 1] == b[t] else 1

    def spans(i, t):
        yield 0
        if t < K and b[t] == a[i]:
            yield from range(1, run[t] + 1)

    # ways[i][t]: number of ways (capped at 2) columns i.. produce h2[t:]
    ways = [[0] * (K + 1) for _ in range(n + 1)]
    ways[n][K] = 1
    for i in range(n - 1, -1, -1):
        row, nxt = ways[i], ways[i + 1]
        for t in range(K + 1):
            total = 0
            for s in spans(i, t):
                total += nxt[t + s]
                if total >= 2:
                    break
            row[t] = min(total, 2)
    if ways[0][0] == 0:
        return None

    # reach[i][t]: columns < i can produce h2[:t]
    reach = [[False] * (K + 1) for _ in range(n + 1)]
    reach[0][0] = True
    for i in range(n):
        for t in range(K + 1):
            if reach[i][t]:
                for s in spans(i, t):
                    reach[i + 1][t + s] = True

    s_hat, column_map = [], []
    for i in range(n):
        counts, sources = set(), set()
        for t in range(K + 1):
            if not reach[i][t]:
                continue
            for s in spans(i, t):
                if ways[i + 1][t + s]:
                    counts.add(s)
                    sources.add(t if s else DELETED)
        s_hat.append(counts.pop() if len(counts) == 1 else -1)
        column_map.append(sources.pop() if len(sources) == 1 else UNKNOWN)
    return tuple(s_hat), tuple(column_map), ways[0][0]


def detect_pattern(h1: HistogramVector, h2: HistogramVector, resolve_duplicates: bool = False) -> DetectedPattern:
    """Recover repetition counts by matching histogram values.

    Without duplicates in ``h1``, ``s_hat[j]`` is the number of times
    ``h1[j]`` occurs in ``h2``; the occurrences must form contiguous blocks in
    column order covering all of ``h2``, otherwise a detection error is
    declared.

    If ``h1`` has duplicates the default is a detection error.  With
    ``resolve_duplicates=True`` every expansion of ``h1`` that reproduces
    ``h2`` is considered instead: a unique one gives ``RECOVERED``, several
    give ``PARTIAL`` with the columns they disagree on marked unknown, none
    gives a detection error.  The true pattern is always among the
    candidates, so no column is ever assigned wrongly.
    """
    if h1.row_count != h2.row_count:
        raise RowCountMismatch(f"row counts differ: {h1.row_count} vs {h2.row_count}")
    a, b = np.asarray(h1.counts), np.asarray(h2.counts)
    n = a.size
    dup = h1.has_duplicates()
    failed = DetectionStatus.DETECTION_ERROR
    if dup and not resolve_duplicates:
        return DetectedPattern((0,) * n, failed, True, "duplicate column histograms")
    if not dup:
        s_hat, reason = _strict(a, b)
        if s_hat is None:
            return DetectedPattern((0,) * n, failed, False, reason)
        if int(s_hat.sum()) != b.size:
            return DetectedPattern((0,) * n, failed, False, "recovered widths do not add up")
        s_hat = tuple(int(x) for x in s_hat)
        return DetectedPattern(s_hat, DetectionStatus.RECOVERED, False, "", column_map_from_counts(s_hat))

    aligned = _align(a, b)
    if aligned is None:
        return DetectedPattern((0,) * n, failed, True, "no repetition pattern explains the repeated histograms")
    s_hat, column_map, solutions = aligned
    if solutions == 1:
        return DetectedPattern(s_hat, DetectionStatus.RECOVERED, True, "", column_map)
    return DetectedPattern(
        s_hat, DetectionStatus.PARTIAL, True, "histogram duplicates leave the pattern ambiguous", column_map
    )
