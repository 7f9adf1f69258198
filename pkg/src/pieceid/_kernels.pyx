# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dot products, DTW/SDTW recurrence, backtracking and minimum scans.

Thin wrappers around ``_dtw.h``. ``_kernels_py`` implements the same
functions in numpy and produces identical values.
"""
import numpy as np


cdef extern from "_dtw.h" nogil:
    void pid_accumulate(const double *C, double *D, Py_ssize_t n, Py_ssize_t m, int subsequence)
    void pid_cost_from_gram(double *G, size_t k)
    Py_ssize_t pid_padded(Py_ssize_t m)
    size_t pid_work_size(Py_ssize_t m, Py_ssize_t d)
    void pid_gram(const double *A, Py_ssize_t n, const double *B, Py_ssize_t m, Py_ssize_t d,
                  double *out, Py_ssize_t ldo, double *work)
    void pid_align(const double *A, Py_ssize_t n, const double *B, Py_ssize_t m, Py_ssize_t d,
                   int subsequence, double *D, double *work,
                   double *rowmin, Py_ssize_t *rowarg, double *colmin, Py_ssize_t *colarg)
    void pid_min_cost(const double *C, Py_ssize_t n, Py_ssize_t m, int axis,
                      double *best, Py_ssize_t *arg)
    size_t pid_bank_size(const Py_ssize_t *off, Py_ssize_t npieces, Py_ssize_t d)
    void pid_transpose_bank(const double *bank, const Py_ssize_t *off, Py_ssize_t npieces,
                            Py_ssize_t d, double *tbank)
    void pid_scan(const double *Q, Py_ssize_t n, const double *bank, const Py_ssize_t *off,
                  const double *tbank, Py_ssize_t npieces, Py_ssize_t d, int subsequence,
                  double *D, double *work, double *cost, Py_ssize_t *len, Py_ssize_t *start, Py_ssize_t *len_t,
                  double *rowmin, Py_ssize_t *rowarg, double *colmin, Py_ssize_t *colarg)
    Py_ssize_t pid_last_row_argmin(const double *D, Py_ssize_t n, Py_ssize_t m)
    Py_ssize_t pid_backtrack(const double *D, Py_ssize_t n, Py_ssize_t m, Py_ssize_t end,
                             int subsequence, int transposed, Py_ssize_t *pi, Py_ssize_t *pj,
                             Py_ssize_t *start)


def _prepare(C, out):
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError("cost matrix must be 2-d and non-empty")
    if out is None:
        out = np.empty_like(C)
    elif out.shape != C.shape or out.dtype != np.float64 or not out.flags.c_contiguous:
        raise ValueError("out must be a C-contiguous float64 array shaped like the input")
    return C, out


def _rows(X, name):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-d array")
    return X


def work_size(Py_ssize_t m, Py_ssize_t d):
    """Doubles of scratch space ``align`` needs for a candidate of m rows."""
    return pid_work_size(m, d)


def gram(A, B):
    """(n, m) matrix of row dot products, each a sequential sum over the last axis."""
    A, B = _rows(A, "A"), _rows(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError("A and B differ in width")
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    if d == 0:
        return np.zeros((n, m))
    cdef Py_ssize_t mp = pid_padded(m)
    padded = np.empty((n, mp))
    work = np.empty(d * mp)
    cdef const double[:, ::1] av = A, bv = B
    cdef double[:, ::1] ov = padded
    cdef double[::1] wv = work
    with nogil:
        pid_gram(&av[0, 0], n, &bv[0, 0], m, d, &ov[0, 0], mp, &wv[0])
    return np.ascontiguousarray(padded[:, :m])


def align(A, B, bint subsequence, D=None, work=None, bint mins=False, bint accumulate=True):
    """Accumulated cosine-cost matrix of aligning the rows of A to the rows of B.

    Returns ``(D, rowmin, rowarg, colmin, colarg)``; the minima are None unless
    ``mins`` is set, and D is None when ``accumulate`` is False.
    """
    A, B = _rows(A, "A"), _rows(B, "B")
    if A.shape[1] != B.shape[1] or A.shape[1] == 0:
        raise ValueError("A and B must have the same non-zero width")
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    if accumulate:
        if D is None:
            D = np.empty((n, m))
        elif D.shape != (n, m) or D.dtype != np.float64 or not D.flags.c_contiguous:
            raise ValueError("D must be a C-contiguous float64 (n, m) array")
    else:
        D = None
    if work is None or work.size < work_size(m, d):
        work = np.empty(work_size(m, d))
    cdef const double[:, ::1] av = A, bv = B
    cdef double[::1] wv = work.reshape(-1)
    cdef double *dp = NULL
    cdef double[:, ::1] dv
    if D is not None:
        dv = D
        dp = &dv[0, 0]
    cdef double *rmin = NULL
    cdef double *cmin = NULL
    cdef Py_ssize_t *rarg = NULL
    cdef Py_ssize_t *carg = NULL
    cdef double[::1] rmv, cmv
    cdef Py_ssize_t[::1] rav, cav
    rowmin = rowarg = colmin = colarg = None
    if mins:
        rowmin, rowarg = np.empty(n), np.empty(n, dtype=np.intp)
        colmin, colarg = np.empty(m), np.empty(m, dtype=np.intp)
        rmv, rav, cmv, cav = rowmin, rowarg, colmin, colarg
        rmin, rarg, cmin, carg = &rmv[0], &rav[0], &cmv[0], &cav[0]
    with nogil:
        pid_align(&av[0, 0], n, &bv[0, 0], m, d, subsequence, dp, &wv[0],
                  rmin, rarg, cmin, carg)
    return D, rowmin, rowarg, colmin, colarg


def _offsets(bank, offsets):
    off = np.ascontiguousarray(offsets, dtype=np.intp)
    P = off.shape[0] - 1
    if P < 1 or off[0] != 0 or off[P] != bank.shape[0] or np.any(np.diff(off) < 1):
        raise ValueError("offsets must run from 0 to len(bank) in positive steps")
    return off


def prepare_bank(bank, offsets):
    """Every piece of the bank transposed and padded, ready to pass to :func:`scan`."""
    bank = _rows(bank, "bank")
    off = _offsets(bank, offsets)
    cdef Py_ssize_t P = off.shape[0] - 1, d = bank.shape[1]
    cdef const double[:, ::1] bv = bank
    cdef const Py_ssize_t[::1] ov = off
    out = np.zeros(max(<Py_ssize_t>pid_bank_size(&ov[0], P, d), 1))
    cdef double[::1] tv = out
    with nogil:
        pid_transpose_bank(&bv[0, 0], &ov[0], P, d, &tv[0])
    return out


def scan(Q, bank, offsets, bint subsequence, bint both=False, bint mins=False,
         bint accumulate=True, prepared=None):
    """Align Q against every piece of a concatenated bank.

    Piece k owns rows ``offsets[k]:offsets[k+1]`` of ``bank``. Returns a dict
    with ``cost``, ``length`` and ``start`` per piece (and ``length_t``, the
    path length of the piece-vs-Q problem, when ``both`` is set). With
    ``mins`` it also holds ``rowmin``/``rowarg`` (pieces x len(Q)) and
    ``colmin``/``colarg`` (one per bank row).
    """
    Q, bank = _rows(Q, "Q"), _rows(bank, "bank")
    off = _offsets(bank, offsets)
    cdef Py_ssize_t n = Q.shape[0], d = Q.shape[1], P = off.shape[0] - 1, k
    if bank.shape[1] != d or d == 0:
        raise ValueError("Q and bank must have the same non-zero width")
    cdef const Py_ssize_t[::1] ov = off
    cdef const double *tp = NULL
    cdef const double[::1] tv
    if prepared is not None:
        tv = prepared
        if tv.shape[0] < <Py_ssize_t>pid_bank_size(&ov[0], P, d):
            raise ValueError("prepared bank does not match the bank")
        tp = &tv[0]
    if both and subsequence:
        raise ValueError("the reverse path length is only defined for full DTW")
    cdef Py_ssize_t longest = int(np.max(np.diff(off)))
    out = {}
    D = np.empty(n * longest) if accumulate else None
    work = np.empty(pid_work_size(longest, d))
    cdef const double[:, ::1] qv = Q, bv = bank
    cdef double[::1] wv = work, dv, cv, rmv, cmv
    cdef Py_ssize_t[::1] lv, sv, ltv, rav, cav
    cdef double *dp = NULL
    cdef double *cp = NULL
    cdef double *rmin = NULL
    cdef double *cmin = NULL
    cdef Py_ssize_t *lp = NULL
    cdef Py_ssize_t *sp = NULL
    cdef Py_ssize_t *ltp = NULL
    cdef Py_ssize_t *rarg = NULL
    cdef Py_ssize_t *carg = NULL
    if accumulate:
        dv = D
        dp = &dv[0]
        out["cost"], out["length"], out["start"] = (np.empty(P), np.empty(P, dtype=np.intp),
                                                    np.empty(P, dtype=np.intp))
        cv, lv, sv = out["cost"], out["length"], out["start"]
        cp, lp, sp = &cv[0], &lv[0], &sv[0]
        if both:
            out["length_t"] = np.empty(P, dtype=np.intp)
            ltv = out["length_t"]
            ltp = &ltv[0]
    if mins:
        out["rowmin"], out["rowarg"] = np.empty((P, n)), np.empty((P, n), dtype=np.intp)
        out["colmin"], out["colarg"] = np.empty(bank.shape[0]), np.empty(bank.shape[0], dtype=np.intp)
        rmv, rav = out["rowmin"].reshape(-1), out["rowarg"].reshape(-1)
        cmv, cav = out["colmin"], out["colarg"]
        rmin, rarg, cmin, carg = &rmv[0], &rav[0], &cmv[0], &cav[0]
    with nogil:
        pid_scan(&qv[0, 0], n, &bv[0, 0], &ov[0], tp, P, d, subsequence, dp, &wv[0],
                 cp, lp, sp, ltp, rmin, rarg, cmin, carg)
    return out


def accumulate(C, bint subsequence, out=None):
    """Accumulated cost matrix of a (n, m) local cost matrix."""
    C, out = _prepare(C, out)
    cdef const double[:, ::1] cv = C
    cdef double[:, ::1] dv = out
    with nogil:
        pid_accumulate(&cv[0, 0], &dv[0, 0], cv.shape[0], cv.shape[1], subsequence)
    return out


def cost_from_gram(G, out=None):
    """Cosine distances from unit-vector dot products; ``out`` may be ``G`` itself."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    if out is None:
        out = G.copy()
    elif out is not G:
        if out.shape != G.shape or out.dtype != np.float64 or not out.flags.c_contiguous:
            raise ValueError("out must be a C-contiguous float64 array shaped like G")
        out[...] = G
    cdef double[::1] ov = out.reshape(-1)
    if ov.shape[0]:
        with nogil:
            pid_cost_from_gram(&ov[0], ov.shape[0])
    return out


def min_cost(C, int axis):
    """Smallest entry along ``axis`` of a cost matrix and the first index attaining it."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError("expected a non-empty 2-d array")
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    k = C.shape[0] if axis == 1 else C.shape[1]
    best = np.empty(k, dtype=np.float64)
    arg = np.empty(k, dtype=np.intp)
    cdef const double[:, ::1] cv = C
    cdef double[::1] bv = best
    cdef Py_ssize_t[::1] av = arg
    with nogil:
        pid_min_cost(&cv[0, 0], cv.shape[0], cv.shape[1], axis, &bv[0], &av[0])
    return best, arg


def end_column(D, bint subsequence):
    """Column where the optimal path ends."""
    cdef const double[:, ::1] dv = np.ascontiguousarray(D, dtype=np.float64)
    if not subsequence:
        return dv.shape[1] - 1
    return int(pid_last_row_argmin(&dv[0, 0], dv.shape[0], dv.shape[1]))


def trace(D, Py_ssize_t end, bint subsequence, bint transposed=False):
    """``(path_length, start_column)`` of the optimal path ending at ``end``."""
    cdef const double[:, ::1] dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t length, start
    with nogil:
        length = pid_backtrack(&dv[0, 0], dv.shape[0], dv.shape[1], end,
                               subsequence, transposed, NULL, NULL, &start)
    return int(length), int(start)


def backtrack(D, Py_ssize_t end, bint subsequence, bint transposed=False):
    """Optimal path as an (L, 2) int array, first cell first."""
    cdef const double[:, ::1] dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t cap = dv.shape[0] + dv.shape[1] - 1, length, start
    rows = np.empty(cap, dtype=np.intp)
    cols = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[::1] rv = rows, cv = cols
    with nogil:
        length = pid_backtrack(&dv[0, 0], dv.shape[0], dv.shape[1], end,
                               subsequence, transposed, &rv[0], &cv[0], &start)
    return np.stack([rows[:length][::-1], cols[:length][::-1]], axis=1)
