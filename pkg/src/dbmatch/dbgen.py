"""Seeded generation of Markov-row databases and row permutations.

Symbols are 1-based (``1..alphabet_size``) and stored as ``uint8``; the value
0 is reserved as the erasure marker used downstream.  Row ``i`` of a database
generated with seed ``s`` is drawn from its own SplitMix64 stream keyed by
``derive_seed(s, i)``: column ``j`` consumes output ``j`` of that stream.  A
database with more rows therefore extends, rather than replaces, a smaller one
built from the same seed.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .errors import DimensionOverflow, SizeMismatch
from .markov_model import MarkovParams, transition_power

DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3
SYMBOL_DTYPE = np.uint8
MAGIC = b"DBM1"
_HEADER = struct.Struct("<4sIIB")


@dataclass(frozen=True)
class Database:
    entries: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        if self.entries.ndim != 2:
            raise SizeMismatch(f"entries must be 2-D, got shape {self.entries.shape}")
        self.entries.setflags(write=False)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and np.array_equal(self.entries, other.entries)


@dataclass(frozen=True)
class Permutation:
    """Bijection on rows stored 0-based: row ``i`` is sent to ``mapping[i]``."""

    mapping: np.ndarray

    def __post_init__(self):
        self.mapping.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.mapping.shape[0])

    def inverse(self) -> Permutation:
        inv = np.empty_like(self.mapping)
        inv[self.mapping] = np.arange(self.size, dtype=self.mapping.dtype)
        return Permutation(inv)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return bool(np.array_equal(self.mapping, other.mapping))

    __hash__ = None

    def is_bijection(self) -> bool:
        return bool(np.array_equal(np.sort(self.mapping), np.arange(self.size)))


def check_budget(m: int, n: int, budget: int = DEFAULT_MEMORY_BUDGET) -> None:
    if m * n * np.dtype(SYMBOL_DTYPE).itemsize > budget:
        raise DimensionOverflow(f"{m} x {n} database exceeds memory budget of {budget} bytes")


def generate_database(
    params: MarkovParams,
    m: int,
    n: int,
    seed: int,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> Database:
    """Draw an ``m x n`` database with i.i.d. stationary Markov rows."""
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    check_budget(m, n, memory_budget)
    k = params.alphabet_size
    keys = rng.row_keys(seed, m)
    out = np.empty((m, n), dtype=SYMBOL_DTYPE)

    prev = rng.inverse_cdf(np.cumsum(params.u), rng.to_unit(rng.stream_bits(keys, 0)))
    out[:, 0] = prev + 1
    cdf = np.cumsum(transition_power(params, 1).entries, axis=1)
    for j in range(1, n):
        draws = rng.to_unit(rng.stream_bits(keys, j))
        if k <= 16:
            # inverse cdf as a count of crossed thresholds; same result as searchsorted
            nxt = np.zeros(m, dtype=np.intp)
            for c in range(k - 1):
                nxt += draws >= cdf[:, c][prev]
        else:
            nxt = np.empty(m, dtype=np.intp)
            for state in range(k):
                sel = prev == state
                if sel.any():
                    nxt[sel] = rng.inverse_cdf(cdf[state], draws[sel])
        out[:, j] = nxt + 1
        prev = nxt
    return Database(out, k)


def sample_permutation(m: int, seed: int) -> Permutation:
    """Uniform permutation of ``m`` rows: ranks of i.i.d. 64-bit stream outputs."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    bits = rng.stream_bits(rng.row_keys(seed, m), 0)
    # ties (probability ~ m^2 / 2^65) fall back to index order
    order = np.argsort(bits, kind="stable")
    mapping = np.empty(m, dtype=np.int64)
    mapping[order] = np.arange(m, dtype=np.int64)
    return Permutation(mapping)


def apply_permutation(db: Database, perm: Permutation) -> Database:
    """Move input row ``i`` to output row ``perm.mapping[i]``."""
    if perm.size != db.rows:
        raise SizeMismatch(f"permutation of size {perm.size} for {db.rows} rows")
    out = np.empty_like(db.entries)
    out[perm.mapping] = db.entries
    return Database(out, db.alphabet_size)


def write_binary(db: Database, path) -> None:
    """Write the headered ``DBM1`` format: magic, u32 m, u32 n, u8 alphabet, row-major bytes."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, db.rows, db.cols, db.alphabet_size))
        fh.write(np.ascontiguousarray(db.entries, dtype=np.uint8).tobytes())


def read_binary(path) -> Database:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for DBM1 header")
    magic, m, n, k = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if body.size != m * n:
        raise ValueError(f"expected {m * n} entry bytes, found {body.size}")
    return Database(body.reshape(m, n).copy(), int(k))


def write_csv(db: Database, path) -> None:
    """Debug export: one row per line, no header."""
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(db.entries.tolist())
