import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceid import _kernels_py, kernels

compiled = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")


def _unit(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _bank(rng, lengths, d, dup_from=None):
    off = np.concatenate([[0], np.cumsum(lengths)]).astype(np.intp)
    bank = _unit(rng, int(off[-1]), d)
    if dup_from is not None:
        # repeated rows create exact ties in minima and paths
        k = min(len(dup_from), len(bank))
        bank[:k] = dup_from[:k]
    return bank, off


@compiled
@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(1, 40), st.lists(st.integers(1, 40), min_size=1, max_size=5),
       st.integers(0, 2**32 - 1), st.booleans(), st.booleans())
def test_scan_backends_agree_bit_for_bit(n, d, lengths, seed, subsequence, dup):
    from pieceid import _kernels
    rng = np.random.default_rng(seed)
    Q = _unit(rng, n, d)
    bank, off = _bank(rng, lengths, d, Q if dup else None)
    a = _kernels.scan(Q, bank, off, subsequence, both=not subsequence, mins=True,
                      prepared=_kernels.prepare_bank(bank, off))
    b = _kernels_py.scan(Q, bank, off, subsequence, both=not subsequence, mins=True)
    assert a.keys() == b.keys()
    for key in a:
        assert np.array_equal(a[key], b[key]), key


@compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_gram_and_align_agree(n, m, d, seed):
    from pieceid import _kernels
    rng = np.random.default_rng(seed)
    A, B = _unit(rng, n, d), _unit(rng, m, d)
    assert np.array_equal(_kernels.gram(A, B), _kernels_py.gram(A, B))
    for sub in (False, True):
        x = _kernels.align(A, B, sub, mins=True)
        y = _kernels_py.align(A, B, sub, mins=True)
        for u, v in zip(x, y):
            assert np.array_equal(u, v)
        D = x[0]
        end = _kernels.end_column(D, sub)
        assert end == _kernels_py.end_column(D, sub)
        for t in ((False, True) if not sub else (False,)):
            assert np.array_equal(_kernels.backtrack(D, end, sub, t), _kernels_py.backtrack(D, end, sub, t))
            assert _kernels.trace(D, end, sub, t) == _kernels_py.trace(D, end, sub, t)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_gram_is_orientation_free(n, m, d, seed):
    rng = np.random.default_rng(seed)
    A, B = _unit(rng, n, d), _unit(rng, m, d)
    assert np.array_equal(kernels.gram(A, B).T, kernels.gram(B, A))
    # any row block equals the product of just those rows
    if n > 1:
        assert np.array_equal(kernels.gram(A[1:], B), kernels.gram(A, B)[1:])


def test_fused_align_equals_accumulate_of_cost(backend):
    rng = np.random.default_rng(0)
    A, B = _unit(rng, 13, 7), _unit(rng, 21, 7)
    C = kernels.cost_from_gram(kernels.gram(A, B))
    for sub in (False, True):
        D, *_ = kernels.align(A, B, sub)
        assert np.array_equal(D, kernels.accumulate(C, sub))


def test_scan_equals_per_piece_align(backend):
    rng = np.random.default_rng(1)
    Q = _unit(rng, 9, 5)
    bank, off = _bank(rng, [4, 11, 7], 5)
    r = kernels.scan(Q, bank, off, True, mins=True)
    for k in range(3):
        B = bank[off[k]:off[k + 1]]
        D, rmin, rarg, cmin, carg = kernels.align(Q, B, True, mins=True)
        end = kernels.end_column(D, True)
        assert r["cost"][k] == D[-1, end]
        assert (r["length"][k], r["start"][k]) == kernels.trace(D, end, True)
        assert np.array_equal(r["rowmin"][k], rmin) and np.array_equal(r["rowarg"][k], rarg)
        assert np.array_equal(r["colmin"][off[k]:off[k + 1]], cmin)


def test_minima_take_first_index_on_ties(backend):
    C = np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 2.0]])
    v, a = kernels.min_cost(C, 1)
    assert list(a) == [1, 0]
    v, a = kernels.min_cost(C, 0)
    assert list(a) == [1, 0, 0]


def test_cost_from_gram_clips_and_snaps(backend):
    G = np.array([[1.0 + 1e-15, 1.0 - 1e-13, -1.0 - 1e-15, 0.25]])
    assert list(kernels.cost_from_gram(G)[0]) == [0.0, 0.0, 2.0, 0.75]


def test_scan_rejects_bad_offsets(backend):
    rng = np.random.default_rng(2)
    Q, bank = _unit(rng, 3, 4), _unit(rng, 5, 4)
    with pytest.raises(ValueError):
        kernels.scan(Q, bank, [0, 2, 2, 5])
    with pytest.raises(ValueError):
        kernels.scan(Q, bank, [0, 5], subsequence=True, both=True)


def test_use_backend_validates():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_workspace_reuses_buffers():
    ws = kernels.Workspace()
    a = ws.get("x", 10, 10)
    b = ws.get("x", 5, 4)
    assert a.base is b.base
    assert b.shape == (5, 4)
