import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceid.errors import EmptyRanks, FragmentTooLong, SizeTooLarge
from pieceid.evaluation import (
    CSV_COLUMNS,
    csv_row,
    fragment_lengths,
    linear_fit,
    metrics,
    plan_queries,
    run_fragment_experiment,
    run_identification_suite,
    run_piece_identification,
    run_scalability_experiment,
    write_csv,
)
from pieceid.synth import SynthConfig, generate_corpus

SMALL = dict(n_pieces=16, mean_score_len=60, mean_audio_len=75, min_len=40, pair_noise_sigma=3.0)


@pytest.fixture(scope="module")
def small():
    return generate_corpus(SynthConfig(seed=1, **SMALL))


def test_metrics_known_values():
    r = metrics([1, 2, 4], ks=(1, 2, 5), n_corpus=10)
    assert r.mrr == pytest.approx((1 + 1 / 2 + 1 / 4) / 3, abs=1e-15)
    assert r.recall_at == {1: (1, 1 / 3), 2: (2, 2 / 3), 5: (3, 1.0)}
    assert metrics([1, 1, 7]).median_rank == 1
    assert metrics([4, 1, 3, 2]).median_rank == 2  # lower median


def test_metrics_reference_fraction():
    ranks = [1] * 195 + [2] * 126
    r = metrics(ranks, ks=(1,), n_corpus=321)
    assert r.recall_at[1][0] == 195
    assert round(r.recall(1), 2) == 0.61


def test_metrics_errors():
    with pytest.raises(EmptyRanks):
        metrics([])
    with pytest.raises(ValueError):
        metrics([0, 1])
    with pytest.raises(ValueError):
        metrics([5], n_corpus=4)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.integers(1, n), min_size=1, max_size=60))))
def test_metric_invariants(case):
    n, ranks = case
    r = metrics(ranks, ks=tuple(range(1, n + 1)), n_corpus=n)
    fractions = [r.recall(k) for k in range(1, n + 1)]
    assert fractions == sorted(fractions)
    assert r.recall(n) == 1.0
    assert 1 / n - 1e-12 <= r.mrr <= 1.0
    assert (r.mrr == 1.0) == all(x == 1 for x in ranks)
    assert 1 <= r.median_rank <= n


def test_suite_equals_separate_runs(small, backend):
    suite = run_identification_suite(small)
    assert set(suite) == {(m, d) for m in ("vote", "dtw", "fingerprint") for d in ("a2s", "s2a")}
    for (method, direction), report in suite.items():
        alone = run_piece_identification(small, method, direction)
        assert report.ranks == alone.ranks
        assert report.mrr == alone.mrr
        assert report.method == method and report.direction == direction
        if method != "fingerprint":
            assert math.isnan(report.timing)
        assert alone.timing > 0


def test_identification_on_noiseless_corpus():
    cfg = SynthConfig(n_pieces=10, mean_score_len=50, mean_audio_len=50, min_len=30, pair_noise_sigma=0,
                      tempo_warp_range=(1, 1), repeat_fraction=0, degenerate_fraction=0)
    c = generate_corpus(cfg)
    for report in run_identification_suite(c).values():
        assert report.mrr == 1.0 and report.median_rank == 1


def test_fragment_full_length_matches_identification(small):
    shortest = min(len(p.audio) for p in small)
    (length, report), = run_fragment_experiment(small, [shortest], n_queries=200)
    assert length == shortest
    assert report.n_queries == 200 and report.method == "sdtw"


def test_fragment_short_queries_do_worse(small):
    res = dict(run_fragment_experiment(small, [1, 20], n_queries=300))
    assert res[1].mrr < res[20].mrr


def test_fragment_is_reproducible(small):
    a = run_fragment_experiment(small, [5, 9], n_queries=50, seed=3)
    b = run_fragment_experiment(small, [5, 9], n_queries=50, seed=3)
    assert [r.ranks for _, r in a] == [r.ranks for _, r in b]
    c = run_fragment_experiment(small, [5, 9], n_queries=50, seed=4)
    assert [r.ranks for _, r in a] != [r.ranks for _, r in c]


def test_fragment_too_long(small):
    with pytest.raises(FragmentTooLong):
        run_fragment_experiment(small, [10_000], n_queries=5)


def test_fragment_other_methods(small):
    (_, report), = run_fragment_experiment(small, [12], n_queries=20, method="vote")
    assert report.method == "vote" and report.n_queries == 20


def test_default_fragment_ladders():
    assert fragment_lengths("a2s") == [17, 37, 57, 77, 97, 117, 137, 157]
    per = SynthConfig().snippets_per_system
    assert fragment_lengths("s2a") == [k * per for k in range(1, 9)]


def test_query_plan_is_seeded():
    a = plan_queries(["a", "b", "c"], 20, np.random.default_rng(1))
    b = plan_queries(["a", "b", "c"], 20, np.random.default_rng(1))
    assert a.pieces == b.pieces and np.array_equal(a.where, b.where)


def test_scalability_single_candidate(small):
    (size, mrr, seconds, report), = run_scalability_experiment(small, [1], n_queries=10, repetitions=3,
                                                               length=20)
    assert size == 1 and mrr == 1.0 and seconds > 0
    assert report.n_queries == 30


def test_scalability_size_too_large(small):
    with pytest.raises(SizeTooLarge):
        run_scalability_experiment(small, [17], n_queries=2, repetitions=1, length=5)


def test_scalability_time_roughly_doubles():
    c = generate_corpus(SynthConfig(n_pieces=120, seed=2, mean_score_len=120, mean_audio_len=150, min_len=80))
    res = run_scalability_experiment(c, [60, 120], n_queries=40, repetitions=2, length=40)
    ratio = res[1][2] / res[0][2]
    assert 1.6 <= ratio <= 2.6, ratio


def test_scalability_reproducible_ranks(small):
    a = run_scalability_experiment(small, [8], n_queries=20, repetitions=2, length=10, seed=5)
    b = run_scalability_experiment(small, [8], n_queries=20, repetitions=2, length=10, seed=5)
    assert a[0][3].ranks == b[0][3].ranks and a[0][1] == b[0][1]


def test_linear_fit():
    slope, intercept, r2 = linear_fit([1, 2, 3], [3, 5, 7])
    assert slope == pytest.approx(2) and intercept == pytest.approx(1) and r2 == pytest.approx(1)


def test_csv_layout():
    r = metrics([1, 3, 12], n_corpus=20, method="dtw", direction="a2s", timing=0.5)
    text = write_csv([csv_row(r, "identify", 20)])
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1] == ["dtw", "a2s", "identify", "20", "3", "0.333333", "0.666667", "0.666667",
                       "0.472222", "3", "0.5"]
