import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceid.embedding import Corpus, Piece, SnippetSequence
from pieceid.errors import BadLength, BadMagic, DimensionMismatch, EmptyIndex, InvalidConfig, MissingFile
from pieceid.fingerprint import (
    FingerprintIndex,
    FingerprintParams,
    build_fingerprint_index,
    build_fingerprints,
    fingerprint_rank,
    make_planes,
    offset_scores,
    pack_key,
    quantize,
)

from oracles import histogram_scores


def _corpus(seed, ids, dim=8, n=30):
    rng = np.random.default_rng(seed)
    return Corpus([Piece(p, SnippetSequence.from_raw(rng.normal(size=(n, dim)), "score", p),
                         SnippetSequence.from_raw(rng.normal(size=(n + 4, dim)), "audio", p))
                   for p in ids])


def test_default_params():
    p = FingerprintParams()
    assert (p.planes, p.fan_out, p.max_dt) == (16, 5, 10)


def test_invalid_params():
    with pytest.raises(InvalidConfig):
        FingerprintParams(planes=0)
    with pytest.raises(InvalidConfig):
        FingerprintParams(planes=40)


def test_quantize_sets_bit_when_dot_is_nonnegative():
    planes = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    # dot with plane 1 is exactly zero, which counts as set
    assert quantize(np.array([1.0, 0.0]), planes) == 0b1011
    assert quantize(np.array([-1.0, -1.0]) / np.sqrt(2), planes) == 0b1100


def test_quantize_is_scale_invariant():
    planes = make_planes(8, FingerprintParams())
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=8)
        assert quantize(v, planes) == quantize(v * 7.5, planes)


def test_fingerprints_pair_each_anchor_with_following_snippets():
    params = FingerprintParams(planes=4, fan_out=2, max_dt=10)
    planes = make_planes(3, params)
    seq = SnippetSequence.from_raw(np.random.default_rng(1).normal(size=(4, 3)), "score", "x")
    prints = build_fingerprints(seq, params, planes)
    codes = [quantize(v, planes) for v in seq.values]
    expected = [(int(pack_key(codes[a], codes[a + dt], dt, params)), a)
                for a in range(4) for dt in (1, 2) if a + dt < 4]
    assert prints == expected


def test_fan_out_is_capped_by_max_dt():
    params = FingerprintParams(planes=4, fan_out=5, max_dt=2)
    seq = SnippetSequence.from_raw(np.random.default_rng(2).normal(size=(10, 3)), "score", "x")
    prints = build_fingerprints(seq, params, make_planes(3, params))
    assert len(prints) == 9 + 8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_offset_scores_match_histogram_recount(seed):
    params = FingerprintParams(planes=3, fan_out=2, max_dt=4, seed=seed % 7)
    c = _corpus(seed, ["c", "a", "b"], dim=4, n=12)
    index = build_fingerprint_index(c, "score", params)
    q = c.view("a", "audio")
    db = {p.piece_id: build_fingerprints(p.score, params, index.planes) for p in c}
    expected = histogram_scores(build_fingerprints(q, params, index.planes), db)
    got = {index.piece_ids[k]: s for k, s in offset_scores(q, index).items()}
    assert got == expected


def test_self_query_scores_every_key():
    c = _corpus(3, ["a", "b", "c"])
    index = build_fingerprint_index(c, "score")
    q = SnippetSequence(c.view("b", "score").values, "audio", "b")
    rl = fingerprint_rank(q, index)
    assert rl.ids[0] == "b"
    assert rl.items[0][1] == len(build_fingerprints(q, index.params, index.planes))


def test_rank_ties_break_by_id():
    c = _corpus(4, ["a"])
    s = c.view("a", "score").values
    twins = Corpus([Piece(p, SnippetSequence(s, "score", p), None) for p in ("z", "m")])
    index = build_fingerprint_index(twins, "score")
    rl = fingerprint_rank(SnippetSequence(s, "audio", "q"), index)
    assert rl.ids == ["m", "z"]
    assert rl.items[0][1] == rl.items[1][1]


def test_rank_errors():
    c = _corpus(5, ["a"], n=1)  # one snippet: no pairs, no postings
    index = build_fingerprint_index(c, "score")
    with pytest.raises(EmptyIndex):
        fingerprint_rank(c.view("a", "audio"), index)
    c = _corpus(5, ["a"])
    with pytest.raises(DimensionMismatch):
        fingerprint_rank(SnippetSequence.from_raw(np.ones((5, 3)), "audio", "q"),
                         build_fingerprint_index(c, "score"))


def test_serialization_round_trip(tmp_path):
    c = _corpus(6, ["b", "a"])
    index = build_fingerprint_index(c, "score", FingerprintParams(seed=11))
    buf = index.to_bytes()
    again = FingerprintIndex.from_bytes(buf)
    assert again.to_bytes() == buf
    q = c.view("a", "audio")
    assert fingerprint_rank(q, again).items == fingerprint_rank(q, index).items
    path = tmp_path / "fp.bin"
    index.save(path)
    assert FingerprintIndex.load(path).to_bytes() == buf


def test_serialization_errors(tmp_path):
    buf = build_fingerprint_index(_corpus(7, ["a"]), "score").to_bytes()
    with pytest.raises(BadMagic):
        FingerprintIndex.from_bytes(b"XXXXXX" + buf[6:])
    with pytest.raises(BadLength):
        FingerprintIndex.from_bytes(buf[:-3])
    with pytest.raises(MissingFile):
        FingerprintIndex.load(tmp_path / "absent.bin")


def test_build_is_deterministic():
    c = _corpus(8, ["a", "b"])
    assert build_fingerprint_index(c, "audio").to_bytes() == build_fingerprint_index(c, "audio").to_bytes()
