"""Capacity tables and the histogram-collision probe."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..dbgen import DEFAULT_MEMORY_BUDGET, generate_database
from ..detection import collapse, column_histograms
from ..markov_model import MarkovParams, matching_capacity
from .experiment import wilson_interval


@dataclass(frozen=True)
class CapacityRow:
    delta: float
    capacity_bits: float
    closed_form_bits: float
    terms_used: int
    tail_bound_bits: float
    agrees: bool


def capacity_table(markov: MarkovParams, delta_list, tolerance: float = 1e-10) -> list[CapacityRow]:
    rows = []
    for delta in delta_list:
        res = matching_capacity(markov, delta, tolerance)
        rows.append(
            CapacityRow(float(delta), res.capacity_bits, res.closed_form_bits, res.terms_used, res.tail_bound_bits, res.agrees)
        )
    return rows


def capacity_csv(rows: list[CapacityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "capacity_bits", "closed_form_bits", "terms_used", "tail_bound_bits", "agrees"])
    for r in rows:
        w.writerow(
            [
                f"{r.delta:.12g}",
                f"{r.capacity_bits:.12f}",
                f"{r.closed_form_bits:.12f}",
                r.terms_used,
                f"{r.tail_bound_bits:.3e}",
                "yes" if r.agrees else "NO",
            ]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class ProbeRow:
    n: int
    m: int
    trials: int
    duplicate_rate: float
    ci_lo: float
    ci_hi: float


def collision_probe(
    markov: MarkovParams,
    n_list,
    m_list,
    trials: int,
    seed: int,
    marked_symbol: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> list[ProbeRow]:
    """Estimate how often a fresh database has two equal column histograms.

    Trial ``t`` uses database seed ``derive_seed(seed, t, TAG_DATABASE)`` for
    every ``(n, m)``; one database of the largest size is drawn and each
    smaller size is its top-left block, which is exactly what a direct draw
    would give.
    """
    n_list, m_list = [int(x) for x in n_list], [int(x) for x in m_list]
    if not n_list or not m_list:
        raise ValueError("n_list and m_list must be non-empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_max, m_max = max(n_list), max(m_list)
    hits = np.zeros((len(n_list), len(m_list)), dtype=np.int64)
    k = markov.alphabet_size
    for t in range(trials):
        db = generate_database(markov, m_max, n_max, rng.derive_seed(seed, t, rng.TAG_DATABASE), memory_budget)
        collapsed = collapse(db, marked_symbol, k)
        for mi, m in enumerate(m_list):
            counts = column_histograms(collapsed[:m]).counts
            for ni, n in enumerate(n_list):
                head = counts[:n]
                hits[ni, mi] += np.unique(head).size < head.size
    rows = []
    for ni, n in enumerate(n_list):
        for mi, m in enumerate(m_list):
            rate = float(hits[ni, mi]) / trials
            lo, hi = wilson_interval(rate, trials)
            rows.append(ProbeRow(n, m, trials, rate, lo, hi))
    return rows


def probe_csv(rows: list[ProbeRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "trials", "duplicate_rate", "ci_lo", "ci_hi"])
    for r in rows:
        w.writerow([r.n, r.m, r.trials, f"{r.duplicate_rate:.6f}", f"{r.ci_lo:.6f}", f"{r.ci_hi:.6f}"])
    return buf.getvalue()
