import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceid.embedding import Corpus, Piece, SnippetSequence
from pieceid.errors import DimensionMismatch, EmptyCorpus, EmptyIndex, MissingView
from pieceid.ranking import RankedList, rank_of_truth
from pieceid.voting import SnippetIndex, build_index, nearest_snippet, tally_votes, vote_rank

from oracles import nearest_linear, votes_by_hand


def _corpus(seed, ids, dim=6, lengths=(5, 9)):
    rng = np.random.default_rng(seed)
    pieces = []
    for p in ids:
        s = SnippetSequence.from_raw(rng.normal(size=(int(rng.integers(*lengths)), dim)), "score", p)
        a = SnippetSequence.from_raw(rng.normal(size=(int(rng.integers(*lengths)), dim)), "audio", p)
        pieces.append(Piece(p, s, a))
    return Corpus(pieces)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_nearest_snippet_matches_linear_scan(seed, n_pieces):
    c = _corpus(seed, [f"p{k}" for k in range(n_pieces)][::-1])
    index = build_index(c, "score")
    pieces = {p.piece_id: p.score.values for p in c}
    rng = np.random.default_rng(seed + 1)
    for _ in range(5):
        x = rng.normal(size=6)
        x /= np.linalg.norm(x)
        pid, pos, d = nearest_snippet(x, index)
        ref = nearest_linear(x, pieces)
        assert (pid, pos) == ref[:2]
        assert abs(d - ref[2]) < 1e-15


def test_nearest_snippet_ties_go_to_lowest_id_then_position(backend):
    v = np.eye(3)
    dup = SnippetSequence.from_raw(np.stack([v[1], v[0], v[0]]), "score", "x")
    pieces = [Piece(p, SnippetSequence(dup.values, "score", p), None) for p in ("b", "a")]
    index = build_index(Corpus(pieces), "score")
    assert nearest_snippet(v[0], index) == ("a", 1, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_vote_rank_matches_hand_count(seed):
    c = _corpus(seed, ["d", "b", "c", "a"])
    index = build_index(c, "score")
    q = c.view("c", "audio")
    rl = vote_rank(q, index)
    expected = votes_by_hand(q.values, {p.piece_id: p.score.values for p in c})
    assert [pid for pid, _ in rl.items] == [pid for pid, _ in expected]
    assert [v for _, v in rl.items] == [v for _, v in expected]
    assert sum(v for _, v in rl.items) == len(q)


def test_vote_tie_break_by_mean_distance_then_id():
    piece = np.array([0, 0, 1, 1, 2, 2])
    dist = np.array([0.1, 0.3, 0.2, 0.2, 0.1, 0.3])
    # b and c tie on votes and mean distance, a has a lower mean
    assert tally_votes(piece, dist, ("c", "b", "a")) == (("a", 2.0), ("b", 2.0), ("c", 2.0))
    assert tally_votes(np.array([2, 1, 1]), np.array([0.0, 0.5, 0.5]), ("x", "y", "z")) == (("y", 2.0), ("z", 1.0))


def test_zero_vote_pieces_are_left_out_then_completed():
    c = _corpus(1, ["a", "b", "c"])
    index = build_index(c, "score")
    q = SnippetSequence(c.view("b", "score").values[:1], "audio", "b")
    rl = vote_rank(q, index)
    assert rl.ids == ["b"]
    assert rl.complete() == ["b", "a", "c"]


def test_noiseless_query_gets_all_votes_at_zero_distance():
    c = _corpus(2, ["a", "b", "c"])
    index = build_index(c, "score")
    q = SnippetSequence(c.view("c", "score").values, "audio", "c")
    rl = vote_rank(q, index)
    assert rl.items == (("c", float(len(q))),)
    assert rank_of_truth(rl) == 1


def test_build_index_errors():
    with pytest.raises(EmptyCorpus):
        build_index(Corpus([]), "score")
    c = Corpus([Piece("a", None, SnippetSequence.from_raw(np.eye(2), "audio", "a"))])
    with pytest.raises(MissingView):
        build_index(c, "score")
    with pytest.raises(EmptyIndex):
        SnippetIndex([], [0], np.zeros((0, 2)), "score")


def test_vote_rank_dimension_mismatch():
    c = _corpus(3, ["a"])
    with pytest.raises(DimensionMismatch):
        vote_rank(SnippetSequence.from_raw(np.ones((2, 4)), "audio", "q"), build_index(c, "score"))


def test_index_entry_lookup():
    c = _corpus(4, ["b", "a"])
    index = build_index(c, "audio")
    first_b = len(c.view("a", "audio"))
    assert index.entry(0) == ("a", 0)
    assert index.entry(first_b + 1) == ("b", 1)
