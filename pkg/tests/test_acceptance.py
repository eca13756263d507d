"""Acceptance criteria, one test each; the terminal summary prints a pass/fail line per criterion."""

import time

import numpy as np
import pytest

from dbmatch.dbgen import Database, apply_permutation, generate_database, sample_permutation
from dbmatch.detection import collapse, column_histograms, detect_pattern
from dbmatch.harness.config import config_from_dict
from dbmatch.harness.experiment import run_experiment, summary_csv, trial_seeds
from dbmatch.markov_model import (
    closed_form_capacity,
    entropy_bits,
    gamma_lower_bound,
    matching_capacity,
    transition_power,
    validate_params,
)
from dbmatch.matching import ERASED, ReducedDatabase, match_consistency
from dbmatch.repetition import RepetitionDistribution, apply_repetitions, sample_pattern

GAMMAS = (0.0, 0.25, 0.5, 0.75, 0.9)
DELTAS = (0.0, 0.1, 0.3, 0.6, 0.9, 1.0)


def alphabets():
    for k in (2, 4, 8):
        yield np.full(k, 1.0 / k)
        skew = 2.0 ** -np.arange(k)
        yield skew / skew.sum()


def threshold_config(trials=200):
    return config_from_dict(
        {
            "markov": {"gamma": 0.0, "u": [0.5, 0.5]},
            "repetition": {"probs": [0.5, 0.5]},
            "n": 8,
            "growth_rates": [0.25, 0.5, 1.0, 1.5],
            "trials": trials,
            "master_seed": 20240917,
        }
    )


@pytest.fixture(scope="module")
def threshold_sweep():
    start = time.perf_counter()
    result = run_experiment(threshold_config())
    return result, time.perf_counter() - start


@pytest.mark.criterion(1, "series and closed-form capacity agree within 1e-9 on the grid, < 1 s")
def test_capacity_cross_check():
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    for u in alphabets():
        gammas = GAMMAS + (0.5 * gamma_lower_bound(u),)
        for gamma in gammas:
            params = validate_params(gamma, u)
            for delta in DELTAS:
                series = matching_capacity(params, delta, 1e-10).capacity_bits
                closed = closed_form_capacity(params, delta)
                worst = max(worst, abs(series - closed))
                cases += 1
    elapsed = time.perf_counter() - start
    assert cases == 6 * 6 * 6
    assert worst <= 1e-9, f"max disagreement {worst:.3e}"
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion(2, "gamma = 0 capacity equals (1 - delta) H(u) within 1e-12")
def test_iid_reduction():
    for u in alphabets():
        params = validate_params(0.0, u)
        for delta in DELTAS:
            got = matching_capacity(params, delta).capacity_bits
            assert abs(got - (1 - delta) * entropy_bits(u)) <= 1e-12, (u, delta, got)


@pytest.mark.criterion(3, "closed-form matrix powers match repeated multiplication within 1e-12, < 1 s")
def test_matrix_power_oracle():
    gen = np.random.default_rng(314159)
    start = time.perf_counter()
    for _ in range(100):
        k = int(gen.integers(2, 9))
        u = gen.dirichlet(np.ones(k)) + 1e-3
        u /= u.sum()
        gamma = float(gen.uniform(gamma_lower_bound(u) * 0.99, 0.99))
        params = validate_params(gamma, u)
        P = params.transition_matrix()
        acc = np.eye(k)
        for power in range(1, 51):
            acc = acc @ P
            np.testing.assert_allclose(transition_power(params, power).entries, acc, rtol=0, atol=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


def all_pairs_assignment(x, y):
    m = x.shape[0]
    out = np.full(m, -1)
    kept = y != ERASED
    for row in range(m):
        agree = np.all((x == y[row]) | ~kept[row], axis=1)
        cands = np.flatnonzero(agree)
        if cands.size == 1:
            out[row] = cands[0]
    return out


@pytest.mark.criterion(4, "hash-join consistency matcher equals all-pairs matching on 200 instances, < 10 s")
def test_matcher_oracle_equivalence():
    gen = np.random.default_rng(2718)
    start = time.perf_counter()
    for _ in range(200):
        m = int(gen.integers(1, 65))
        n = int(gen.integers(1, 17))
        k = int(gen.integers(2, 5))
        x = gen.integers(1, k + 1, size=(m, n)).astype(np.uint8)
        y = x[gen.permutation(m)].copy()
        y[:, gen.random(n) < gen.uniform(0, 0.8)] = ERASED
        res = match_consistency(Database(x, k), ReducedDatabase(y, k))
        np.testing.assert_array_equal(res.assignment, all_pairs_assignment(x, y))
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion(5, "duplicate-free trials recover S exactly; duplicate rate lower at m = 4096 than 256, < 2 min")
def test_detection_exactness_and_collision_trend():
    params = validate_params(0.5, [0.5, 0.5])
    dist = RepetitionDistribution((0.25, 0.5, 0.25))
    start = time.perf_counter()
    dup = {256: 0, 4096: 0}
    clean = wrong = 0
    for t in range(1000):
        seeds = trial_seeds(99, t)
        db1 = generate_database(params, 4096, 16, seeds["database"])
        theta = sample_permutation(4096, seeds["permutation"])
        pattern = sample_pattern(dist, 16, seeds["pattern"])
        db2 = apply_repetitions(apply_permutation(db1, theta), pattern)
        h1 = column_histograms(collapse(db1))
        dup[4096] += h1.has_duplicates()
        # same database seed at m = 256 is the top block of the larger one
        dup[256] += column_histograms(collapse(db1.entries[:256], 1, 2)).has_duplicates()
        if not h1.has_duplicates():
            clean += 1
            detected = detect_pattern(h1, column_histograms(collapse(db2)))
            wrong += not (detected.recovered and detected.s_hat == pattern.s)
    elapsed = time.perf_counter() - start
    assert clean > 0
    assert wrong == 0, f"{wrong} of {clean} duplicate-free trials misdetected"
    assert dup[4096] < dup[256], f"duplicate counts {dup}"
    assert elapsed < 120, f"took {elapsed:.1f} s"


@pytest.mark.criterion(6, "below capacity (n = 32, R = 0.5, C = 1.5) mean row error <= 0.02, < 5 min")
def test_below_capacity_matching():
    cfg = config_from_dict(
        {
            "markov": {"gamma": 0.0, "u": [0.25, 0.25, 0.25, 0.25]},
            "repetition": {"probs": [0.25, 0.5, 0.25]},
            "n": 32,
            "growth_rates": [0.5],
            "trials": 50,
            "master_seed": 6,
            "matcher": {"method": "consistency"},
        }
    )
    assert cfg.m_values == (65536,)
    start = time.perf_counter()
    (row,) = run_experiment(cfg).summary
    elapsed = time.perf_counter() - start
    assert row.capacity_bits == pytest.approx(1.5, abs=1e-12)
    assert row.row_error_rate_mean <= 0.02, f"mean row error {row.row_error_rate_mean:.4f}"
    assert elapsed < 300, f"took {elapsed:.1f} s"


@pytest.mark.criterion(7, "error non-decreasing in R, <= 0.1 at R = 0.25, >= 0.9 at R = 1.5, < 2 min")
def test_capacity_threshold_trend(threshold_sweep):
    result, elapsed = threshold_sweep
    rates = [row.row_error_rate_mean for row in result.summary]
    assert [row.m for row in result.summary] == [4, 16, 256, 4096]
    assert all(row.capacity_bits == pytest.approx(0.5, abs=1e-12) for row in result.summary)
    problems = []
    if not all(b >= a for a, b in zip(rates, rates[1:])):
        problems.append("not monotone")
    if rates[0] > 0.1:
        problems.append(f"R=0.25 error {rates[0]:.3f} > 0.1")
    if rates[-1] < 0.9:
        problems.append(f"R=1.5 error {rates[-1]:.3f} < 0.9")
    if elapsed >= 120:
        problems.append(f"took {elapsed:.1f} s")
    assert not problems, "; ".join(problems) + f"; rates {[round(r, 3) for r in rates]}"


@pytest.mark.criterion(8, "replica distribution leaves capacity (12 digits) and error rates (Wilson CIs overlap) unchanged, < 2 min")
def test_replica_irrelevance():
    base = {
        "markov": {"gamma": 0.25, "u": [0.5, 0.5]},
        "n": 16,
        "m_list": [64, 1024],
        "trials": 200,
        "master_seed": 8,
    }
    start = time.perf_counter()
    a = run_experiment(config_from_dict({**base, "repetition": {"probs": [0.3, 0.7]}})).summary
    b = run_experiment(config_from_dict({**base, "repetition": {"probs": [0.3, 0.35, 0.35]}})).summary
    elapsed = time.perf_counter() - start
    for ra, rb in zip(a, b):
        assert ra.m == rb.m
        assert f"{ra.capacity_bits:.12f}" == f"{rb.capacity_bits:.12f}"
        overlap = ra.row_error_rate_ci_lo <= rb.row_error_rate_ci_hi and rb.row_error_rate_ci_lo <= ra.row_error_rate_ci_hi
        assert overlap, (ra, rb)
    assert elapsed < 120, f"took {elapsed:.1f} s"


@pytest.mark.criterion(9, "re-running the threshold sweep gives a byte-identical summary.csv")
def test_determinism(threshold_sweep, tmp_path):
    first, _ = threshold_sweep
    again = run_experiment(threshold_config())
    parallel = run_experiment(threshold_config(), workers=4)
    texts = {summary_csv(r.summary).encode() for r in (first, again, parallel)}
    assert len(texts) == 1
