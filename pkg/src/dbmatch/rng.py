"""Counter-based random numbers built on SplitMix64.

Every random quantity in the package is a pure function of a 64-bit key and a
counter, so any row, column or trial can be regenerated independently and in
any order.  The stream for key ``k`` is the standard SplitMix64 sequence:
output ``c`` is ``finalize(k + (c + 1) * GOLDEN)``.

Seeds for sub-streams are derived with :func:`derive_seed`, which folds a
sequence of integers into one key::

    h = finalize(parts[0])
    for p in parts[1:]:
        h = finalize(h ^ finalize(p + GOLDEN))
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# stage tags used by the experiment harness
TAG_DATABASE = 1
TAG_PERMUTATION = 2
TAG_PATTERN = 3


def finalize(x: int) -> int:
    """SplitMix64 output function on a Python int."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def derive_seed(*parts: int) -> int:
    if not parts:
        raise ValueError("derive_seed needs at least one part")
    h = finalize(parts[0])
    for p in parts[1:]:
        h = finalize(h ^ finalize((p + GOLDEN) & MASK64))
    return h


def finalize_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`finalize` over a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def row_keys(seed: int, rows: int) -> np.ndarray:
    """Per-row stream keys ``derive_seed(seed, i)`` for ``i in range(rows)``."""
    h = np.uint64(finalize(seed))
    idx = np.arange(rows, dtype=np.uint64) + np.uint64(GOLDEN)
    return finalize_array(h ^ finalize_array(idx))


def stream_bits(keys: np.ndarray, counter: int) -> np.ndarray:
    """Output number ``counter`` of each SplitMix64 stream in ``keys``."""
    step = np.uint64(((counter + 1) * GOLDEN) & MASK64)
    return finalize_array(np.asarray(keys, dtype=np.uint64) + step)


def to_unit(bits: np.ndarray) -> np.ndarray:
    """Map 64-bit words to doubles in [0, 1) using the top 53 bits."""
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def uniforms(seed: int, count: int) -> np.ndarray:
    """The first ``count`` outputs of the stream keyed by ``seed``, as [0, 1) doubles."""
    keys = np.full(count, finalize(seed), dtype=np.uint64)
    steps = (np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN))
    return to_unit(finalize_array(keys + steps))


def inverse_cdf(cdf: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """0-based category index for each uniform draw given a cumulative table."""
    cdf = np.array(cdf, dtype=np.float64)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, draws, side="right")
