import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dbmatch.dbgen import Database, apply_permutation, generate_database, sample_permutation
from dbmatch.detection import (
    DELETED,
    UNKNOWN,
    DetectionStatus,
    HistogramVector,
    collapse,
    column_histograms,
    column_map_from_counts,
    detect_pattern,
)
from dbmatch.errors import RowCountMismatch, SymbolOutOfRange
from dbmatch.markov_model import validate_params
from dbmatch.repetition import RepetitionDistribution, apply_repetitions, sample_pattern


def hv(values, m=100):
    return HistogramVector(np.asarray(values, dtype=np.int64), m)


def expand(h1, s):
    return [v for v, c in zip(h1, s) for _ in range(c)]


def brute_force_patterns(h1, h2):
    """All repetition patterns whose expansion of h1 equals h2, by exhaustive search."""
    h2 = list(h2)
    out = []

    def walk(j, t, acc):
        if j == len(h1):
            if t == len(h2):
                out.append(tuple(acc))
            return
        s = 0
        while True:
            walk(j + 1, t + s, acc + [s])
            if t + s < len(h2) and h2[t + s] == h1[j]:
                s += 1
            else:
                return

    walk(0, 0, [])
    assert all(expand(h1, p) == h2 for p in out)
    return out


# collapse and histograms


def test_collapse_examples():
    np.testing.assert_array_equal(collapse(np.array([[1, 3, 2, 1]]), 1, 3), [[1, 2, 2, 1]])
    binary = np.array([[1, 2], [2, 2]], dtype=np.uint8)
    np.testing.assert_array_equal(collapse(binary, 1, 2), binary)
    np.testing.assert_array_equal(collapse(np.full((2, 3), 2), 2, 3), np.ones((2, 3)))


def test_collapse_other_marked_symbol():
    np.testing.assert_array_equal(collapse(np.array([[1, 3, 2]]), 3, 3), [[2, 1, 2]])


@pytest.mark.parametrize("marked", [0, 4])
def test_collapse_symbol_out_of_range(marked):
    with pytest.raises(SymbolOutOfRange):
        collapse(Database(np.ones((2, 2), dtype=np.uint8), 3), marked)


def test_histogram_examples():
    col = np.array([[1], [2], [2], [1], [2]])
    assert column_histograms(col).counts.tolist() == [3]
    assert column_histograms(np.ones((4, 2))).counts.tolist() == [0, 0]
    h = column_histograms(col)
    assert h.row_count == 5 and h.counts.dtype == np.int64


def test_histogram_permutation_invariant():
    params = validate_params(0.5, [0.2, 0.3, 0.5])
    for seed in range(20):
        db = generate_database(params, 300, 10, seed)
        shuffled = apply_permutation(db, sample_permutation(300, seed + 1000))
        np.testing.assert_array_equal(
            column_histograms(collapse(db)).counts, column_histograms(collapse(shuffled)).counts
        )


# detect_pattern, strict behaviour


def test_detect_hand_example():
    d = detect_pattern(hv([3, 5, 2]), hv([3, 3, 2]))
    assert d.status is DetectionStatus.RECOVERED
    assert d.s_hat == (2, 0, 1)
    assert d.column_map == (0, DELETED, 2)


def test_duplicates_are_a_detection_error():
    d = detect_pattern(hv([3, 3, 4]), hv([3, 4]))
    assert d.status is DetectionStatus.DETECTION_ERROR and d.duplicates and not d.usable


def test_all_deleted():
    d = detect_pattern(hv([4, 1]), hv([]))
    assert d.recovered and d.s_hat == (0, 0)


@pytest.mark.parametrize(
    "h1,h2",
    [
        ([1, 2, 3], [1, 2, 1]),  # value not contiguous
        ([1, 2, 3], [2, 1]),  # blocks out of order
        ([1, 2, 3], [1, 7]),  # value without source
    ],
)
def test_structural_violations(h1, h2):
    d = detect_pattern(hv(h1), hv(h2))
    assert d.status is DetectionStatus.DETECTION_ERROR and not d.duplicates


def test_row_count_mismatch():
    with pytest.raises(RowCountMismatch):
        detect_pattern(hv([1], 10), hv([1], 11))


def test_column_map_from_counts():
    assert column_map_from_counts((2, 0, 1, 3)) == (0, DELETED, 2, 3)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_distinct_histograms_recover_any_pattern(s, rnd):
    h1 = rnd.sample(range(1000), len(s))
    d = detect_pattern(hv(h1), hv(expand(h1, s)))
    assert d.recovered and d.s_hat == tuple(s)


# detect_pattern with duplicate resolution


def test_resolve_unique_despite_duplicates():
    # a 5 after the 2 must come from the third column
    d = detect_pattern(hv([5, 2, 5]), hv([5, 2]), resolve_duplicates=True)
    assert d.status is DetectionStatus.RECOVERED and d.s_hat == (1, 1, 0)
    d = detect_pattern(hv([5, 2, 5]), hv([5, 2, 5, 5]), resolve_duplicates=True)
    assert d.status is DetectionStatus.RECOVERED and d.s_hat == (1, 1, 2)


def test_resolve_partial_marks_unknown():
    d = detect_pattern(hv([5, 5, 2]), hv([5, 2]), resolve_duplicates=True)
    assert d.status is DetectionStatus.PARTIAL
    assert d.s_hat == (-1, -1, 1)
    assert d.column_map == (UNKNOWN, UNKNOWN, 1)
    assert d.usable and not d.recovered


def test_resolve_no_explanation():
    d = detect_pattern(hv([5, 2, 5]), hv([2, 2, 7]), resolve_duplicates=True)
    assert d.status is DetectionStatus.DETECTION_ERROR


@given(
    st.lists(st.integers(0, 3), min_size=1, max_size=6),
    st.lists(st.integers(0, 2), min_size=6, max_size=6),
)
def test_resolve_matches_brute_force(h1_small, s_full):
    h1 = h1_small
    s = s_full[: len(h1)]
    h2 = expand(h1, s)
    sols = brute_force_patterns(h1, h2)
    d = detect_pattern(hv(h1), hv(h2), resolve_duplicates=True)
    assert tuple(s) in sols
    maps = {column_map_from_counts(p) for p in sols}
    if len(sols) == 1:
        assert d.recovered and d.s_hat == sols[0]
        return
    if len(set(h1)) == len(h1):
        pytest.fail("distinct histograms must give a unique pattern")
    assert d.status is DetectionStatus.PARTIAL
    for j in range(len(h1)):
        counts = {p[j] for p in sols}
        sources = {cm[j] for cm in maps}
        assert d.s_hat[j] == (counts.pop() if len(counts) == 1 else -1)
        assert d.column_map[j] == (sources.pop() if len(sources) == 1 else UNKNOWN)


def test_resolve_rejects_inconsistent_brute_force_cases():
    gen = np.random.default_rng(3)
    for _ in range(300):
        h1 = gen.integers(0, 3, size=int(gen.integers(1, 5))).tolist()
        h2 = gen.integers(0, 3, size=int(gen.integers(0, 6))).tolist()
        sols = brute_force_patterns(h1, h2)
        d = detect_pattern(hv(h1), hv(h2), resolve_duplicates=True)
        if not sols:
            assert d.status is DetectionStatus.DETECTION_ERROR
        elif len(sols) == 1:
            assert d.recovered and d.s_hat == sols[0]
        else:
            assert d.status is DetectionStatus.PARTIAL


# model-driven properties


def _pipeline_histograms(params, dist, m, n, seed, shuffle=True):
    db1 = generate_database(params, m, n, seed)
    src = apply_permutation(db1, sample_permutation(m, seed + 1)) if shuffle else db1
    pattern = sample_pattern(dist, n, seed + 2)
    db2 = apply_repetitions(src, pattern)
    return column_histograms(collapse(db1)), column_histograms(collapse(db2)), pattern


def test_detection_invariant_to_row_shuffle():
    params = validate_params(0.5, [0.5, 0.5])
    dist = RepetitionDistribution((0.25, 0.5, 0.25))
    for seed in range(100):
        h1, h2a, pat = _pipeline_histograms(params, dist, 500, 12, seed, shuffle=True)
        _, h2b, _ = _pipeline_histograms(params, dist, 500, 12, seed, shuffle=False)
        for resolve in (False, True):
            assert detect_pattern(h1, h2a, resolve) == detect_pattern(h1, h2b, resolve)


def test_duplicate_free_trials_recover_truth():
    params = validate_params(0.5, [0.5, 0.5])
    dist = RepetitionDistribution((0.25, 0.5, 0.25))
    clean = 0
    for seed in range(0, 600, 3):
        h1, h2, pat = _pipeline_histograms(params, dist, 4096, 16, seed)
        d = detect_pattern(h1, h2)
        if not h1.has_duplicates():
            clean += 1
            assert d.recovered and d.s_hat == pat.s
    assert clean > 50


def test_resolved_columns_never_wrong():
    params = validate_params(0.0, [0.25] * 4)
    dist = RepetitionDistribution((0.25, 0.5, 0.25))
    for seed in range(100):
        h1, h2, pat = _pipeline_histograms(params, dist, 256, 32, seed)
        d = detect_pattern(h1, h2, resolve_duplicates=True)
        assert d.usable
        truth = column_map_from_counts(pat.s)
        for got, want in zip(d.column_map, truth):
            assert got == UNKNOWN or got == want
        if d.recovered:
            assert d.s_hat == pat.s
