"""Seeded Monte Carlo trials, sweeps and their aggregation.

Every trial is a pure function of ``(config, cell, trial_index)``.  Its three
random stages draw from seeds ``derive_seed(master_seed, trial_index, tag)``
with the tags in :mod:`dbmatch.rng`.  Seeds do not depend on the cell, so all
cells of a sweep share common random numbers, and a trial at a larger ``m``
extends the database of the same trial at a smaller ``m``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .. import rng
from ..dbgen import apply_permutation, generate_database, sample_permutation
from ..detection import UNKNOWN, collapse, column_histograms, column_map_from_counts, detect_pattern
from ..errors import DBMatchError, TrialError
from ..markov_model import matching_capacity
from ..matching import MatchMethod, evaluate, match_rows, reduce
from ..repetition import apply_repetitions, sample_pattern
from .config import Cell, ExperimentConfig

SUMMARY_HEADER = [
    "n",
    "m",
    "R_realized",
    "delta",
    "gamma",
    "capacity_bits",
    "trials",
    "detection_error_rate",
    "row_error_rate_mean",
    "row_error_rate_ci_lo",
    "row_error_rate_ci_hi",
]
CAPACITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    m: int
    delta: float
    seeds: dict
    true_pattern: tuple
    detection_status: str
    detection_duplicate: bool
    row_error_rate: float
    collisions: int
    misses: int
    wall_time_ms: float

    def to_json(self) -> str:
        """One JSON line; wall time is excluded so the line is reproducible."""
        d = dataclasses.asdict(self)
        d.pop("wall_time_ms")
        d["true_pattern"] = list(self.true_pattern)
        d["row_error_rate"] = round(self.row_error_rate, 6)
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class SummaryRow:
    n: int
    m: int
    R_realized: float
    delta: float
    gamma: float
    capacity_bits: float
    trials: int
    detection_error_rate: float
    row_error_rate_mean: float
    row_error_rate_ci_lo: float
    row_error_rate_ci_hi: float

    def csv_fields(self) -> list[str]:
        return [
            str(self.n),
            str(self.m),
            f"{self.R_realized:.6f}",
            f"{self.delta:.12g}",
            f"{self.gamma:.12g}",
            f"{self.capacity_bits:.12f}",
            str(self.trials),
            f"{self.detection_error_rate:.6f}",
            f"{self.row_error_rate_mean:.6f}",
            f"{self.row_error_rate_ci_lo:.6f}",
            f"{self.row_error_rate_ci_hi:.6f}",
        ]


@dataclass
class ExperimentResult:
    summary: list[SummaryRow]
    records: list[TrialRecord]

    def records_for(self, m: int, delta: float | None = None) -> list[TrialRecord]:
        return [r for r in self.records if r.m == m and (delta is None or r.delta == delta)]


def trial_seeds(master_seed: int, trial_index: int) -> dict:
    return {
        "database": rng.derive_seed(master_seed, trial_index, rng.TAG_DATABASE),
        "permutation": rng.derive_seed(master_seed, trial_index, rng.TAG_PERMUTATION),
        "pattern": rng.derive_seed(master_seed, trial_index, rng.TAG_PATTERN),
    }


def _run_cell_trial(config: ExperimentConfig, cell: Cell, trial_index: int) -> TrialRecord:
    start = time.perf_counter()
    seeds = trial_seeds(config.master_seed, trial_index)
    m, n = cell.m, config.n

    db1 = generate_database(config.markov, m, n, seeds["database"], config.memory_budget)
    theta = sample_permutation(m, seeds["permutation"])
    pattern = sample_pattern(cell.repetition, n, seeds["pattern"])
    db2 = apply_repetitions(apply_permutation(db1, theta), pattern)

    k = config.markov.alphabet_size
    h1 = column_histograms(collapse(db1, config.marked_symbol, k))
    h2 = column_histograms(collapse(db2, config.marked_symbol, k))
    detected = detect_pattern(h1, h2, resolve_duplicates=config.detection == "resolve")

    collisions = misses = 0
    if not detected.usable:
        error_rate = 1.0
    else:
        truth = column_map_from_counts(pattern.s)
        wrong = [j for j, (c, t) in enumerate(zip(detected.column_map, truth)) if c != UNKNOWN and c != t]
        if wrong or (detected.recovered and detected.s_hat != pattern.s):
            raise AssertionError(f"detection disagrees with the true pattern at columns {wrong}")
        matcher = config.matcher
        if matcher.method is MatchMethod.TYPICALITY and matcher.delta_for_typicality is None:
            matcher = dataclasses.replace(matcher, delta_for_typicality=cell.delta)
        result = match_rows(db1, reduce(db2, detected), config.markov, matcher)
        error_rate = evaluate(result, theta)
        collisions, misses = result.collisions, result.misses

    return TrialRecord(
        trial_index=trial_index,
        m=m,
        delta=cell.delta,
        seeds=seeds,
        true_pattern=pattern.s,
        detection_status=detected.status.value,
        detection_duplicate=detected.duplicates,
        row_error_rate=error_rate,
        collisions=collisions,
        misses=misses,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


def run_trial(config: ExperimentConfig, trial_index: int, cell_index: int = 0) -> TrialRecord:
    """Run the whole pipeline once for one sweep cell.

    A failed detection counts as a total failure (row error rate 1).  Module
    errors are re-raised as :class:`TrialError` carrying the trial index.
    """
    cell = config.cells()[cell_index]
    try:
        return _run_cell_trial(config, cell, trial_index)
    except DBMatchError as exc:
        raise TrialError(trial_index, exc) from exc


def _job(args):
    config, cell_index, trial_index = args
    return run_trial(config, trial_index, cell_index)


def wilson_interval(mean: float, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Wilson score interval treating ``mean`` as a proportion over ``trials``."""
    lo, hi = proportion_confint(mean * trials, trials, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def summarize(config: ExperimentConfig, cell: Cell, records: list[TrialRecord]) -> SummaryRow:
    ordered = sorted(records, key=lambda r: r.trial_index)
    rates = np.array([r.row_error_rate for r in ordered], dtype=np.float64)
    mean = float(math.fsum(rates.tolist()) / len(ordered))
    lo, hi = wilson_interval(mean, len(ordered))
    return SummaryRow(
        n=config.n,
        m=cell.m,
        R_realized=math.log2(cell.m) / config.n,
        delta=cell.delta,
        gamma=config.markov.gamma,
        capacity_bits=matching_capacity(config.markov, cell.delta, CAPACITY_TOLERANCE).capacity_bits,
        trials=len(ordered),
        detection_error_rate=sum(r.detection_duplicate for r in ordered) / len(ordered),
        row_error_rate_mean=mean,
        row_error_rate_ci_lo=lo,
        row_error_rate_ci_hi=hi,
    )


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every trial of every cell and aggregate per cell in trial order."""
    cells = config.cells()
    jobs = [(config, ci, t) for ci in range(len(cells)) for t in range(config.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_job(j) for j in jobs]
    summary = []
    for ci, cell in enumerate(cells):
        chunk = records[ci * config.trials:(ci + 1) * config.trials]
        summary.append(summarize(config, cell, chunk))
    return ExperimentResult(summary, records)


def summary_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write ``summary.csv``, ``trials.jsonl`` and ``timings.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out / "summary.csv",
        "trials": out / "trials.jsonl",
        "timings": out / "timings.csv",
    }
    paths["summary"].write_text(summary_csv(result.summary))
    paths["trials"].write_text("".join(r.to_json() + "\n" for r in result.records))
    with open(paths["timings"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "delta", "trial_index", "wall_time_ms"])
        for r in result.records:
            writer.writerow([r.m, f"{r.delta:.12g}", r.trial_index, f"{r.wall_time_ms:.3f}"])
    return paths
