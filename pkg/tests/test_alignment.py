import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceid import kernels
from pieceid.alignment import align, align_costs, dtw, rank_by_alignment, sdtw, sort_by_cost
from pieceid.embedding import Corpus, Piece, SnippetSequence, distance_matrix
from pieceid.errors import DimensionMismatch, EmptyCorpus

from oracles import brute_dtw, brute_sdtw, monotone_paths, path_cost


def _seq(rng, n, dim=4, modality="audio", pid="q"):
    return SnippetSequence.from_raw(rng.normal(size=(n, dim)), modality, pid)


def _check_path(path, n, m, subsequence):
    assert path[-1][0] == n - 1
    assert path[0][0] == 0
    if not subsequence:
        assert tuple(path[0]) == (0, 0) and tuple(path[-1]) == (n - 1, m - 1)
    steps = {tuple(s) for s in np.diff(path, axis=0)}
    assert steps <= {(1, 1), (1, 0), (0, 1)}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_dtw_matches_enumeration(n, m, seed):
    rng = np.random.default_rng(seed)
    q, d = _seq(rng, n), _seq(rng, m, modality="score")
    C = distance_matrix(q, d).tolist()
    r = dtw(q, d)
    assert r.cost == brute_dtw(C)
    assert abs(path_cost(C, r.path) - r.cost) < 1e-9
    assert r.normalized_cost == r.cost / len(r.path)
    _check_path(r.path, n, m, False)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_sdtw_matches_enumeration(n, m, seed):
    rng = np.random.default_rng(seed)
    q, d = _seq(rng, n), _seq(rng, m, modality="score")
    C = distance_matrix(q, d).tolist()
    r = sdtw(q, d)
    assert r.cost == brute_sdtw(C)
    assert abs(path_cost(C, r.path) - r.cost) < 1e-9
    assert r.match_span == (int(r.path[0][1]), int(r.path[-1][1]))
    _check_path(r.path, n, m, True)


def test_sdtw_finds_embedded_fragment():
    rng = np.random.default_rng(1)
    full = _seq(rng, 60, dim=16, modality="score", pid="x")
    frag = SnippetSequence(full.values[20:35], "audio", "x")
    r = sdtw(frag, full)
    assert r.cost == 0.0
    assert r.match_span == (20, 34)


def test_sdtw_never_costs_more_than_dtw():
    rng = np.random.default_rng(2)
    for _ in range(20):
        q, d = _seq(rng, 6), _seq(rng, 9)
        assert sdtw(q, d).cost <= dtw(q, d).cost


def test_self_alignment_is_diagonal():
    rng = np.random.default_rng(4)
    q = _seq(rng, 8)
    r = dtw(q, q)
    assert r.cost == 0.0
    assert [tuple(c) for c in r.path] == [(i, i) for i in range(8)]


def test_tie_order_prefers_diagonal_then_vertical():
    # all-zero costs: every predecessor ties, so the walk back takes the diagonal
    # until it hits the first column, then vertical steps
    C = np.zeros((4, 2))
    r = align_costs(C)
    assert [tuple(c) for c in r.path] == [(0, 0), (1, 0), (2, 0), (3, 1)]
    # swapping arguments: the same preference order seen from the other side
    rt = align_costs(C.T)
    assert [tuple(c) for c in rt.path] == [(0, 0), (0, 1), (0, 2), (1, 3)]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1), st.booleans())
def test_transposed_reuse_equals_swapped_problem(n, m, seed, ties):
    rng = np.random.default_rng(seed)
    C = rng.integers(0, 3, size=(n, m)).astype(float) if ties else rng.random((n, m))
    direct = align_costs(np.ascontiguousarray(C.T))
    reused = align_costs(C, transposed=True)
    assert direct.cost == reused.cost
    assert np.array_equal(direct.path, reused.path)
    assert direct.normalized_cost == reused.normalized_cost


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_dtw_is_symmetric_in_cost(n, m, seed):
    rng = np.random.default_rng(seed)
    q, d = _seq(rng, n), _seq(rng, m)
    assert dtw(q, d).cost == dtw(d, q).cost


def test_path_is_omitted_on_request():
    rng = np.random.default_rng(5)
    q, d = _seq(rng, 5), _seq(rng, 7)
    with_path, without = dtw(q, d), dtw(q, d, with_path=False)
    assert without.path is None
    assert without.path_length == with_path.path_length
    assert without.cost == with_path.cost


def test_align_modes_and_errors():
    rng = np.random.default_rng(6)
    q, d = _seq(rng, 5), _seq(rng, 7)
    assert align(q, d, "subsequence").kind == "subsequence"
    assert align(q, d).kind == "full"
    with pytest.raises(ValueError):
        align(q, d, "diagonal")
    with pytest.raises(DimensionMismatch):
        dtw(q, _seq(rng, 3, dim=5))


def test_enumeration_oracle_counts_paths():
    # Delannoy numbers: D(2,2) = 13
    assert sum(1 for _ in monotone_paths(3, 3)) == 13


def _corpus(rng, ids, n=12, dim=8):
    return Corpus([Piece(p, _seq(rng, n, dim, "score", p), _seq(rng, n + 3, dim, "audio", p)) for p in ids])


def test_rank_by_alignment_orders_ascending(backend):
    rng = np.random.default_rng(7)
    c = _corpus(rng, ["c", "a", "b"])
    q = c.view("b", "audio")
    rl = rank_by_alignment(q, c, "full", "a2s")
    costs = [s for _, s in rl.items]
    assert costs == sorted(costs)
    assert rl.truth_id == "b"
    for pid, cost in rl.items:
        assert cost == dtw(q, c.view(pid, "score")).normalized_cost


def test_rank_by_alignment_breaks_ties_by_id():
    rng = np.random.default_rng(8)
    s = _seq(rng, 6, modality="score", pid="x")
    a = _seq(rng, 6, modality="audio", pid="x")
    c = Corpus([Piece(p, SnippetSequence(s.values, "score", p), SnippetSequence(a.values, "audio", p))
                for p in ["z", "m", "b"]])
    rl = rank_by_alignment(a, c)
    assert rl.ids == ["b", "m", "z"]


def test_rank_by_alignment_empty_corpus():
    rng = np.random.default_rng(9)
    with pytest.raises(EmptyCorpus):
        rank_by_alignment(_seq(rng, 4), Corpus([]))


def test_sort_by_cost():
    assert sort_by_cost([("b", 1.0), ("a", 1.0), ("c", 0.5)]) == (("c", 0.5), ("a", 1.0), ("b", 1.0))
