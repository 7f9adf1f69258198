"""Pure numpy versions of the compiled kernels.

Dot products accumulate one embedding coordinate at a time, the order the
compiled code uses. The recurrence is swept along anti-diagonals, which
keeps every cell's inputs identical to the row-major compiled sweep. Values
therefore match the compiled backend bit for bit.
"""
import numpy as np


ZERO_SNAP = 1e-12


def cosine_from_gram(G):
    """Cosine distances from unit-vector dot products: 1 - g in [0, 2], tiny values snapped to 0."""
    d = np.clip(1.0 - np.asarray(G, dtype=np.float64), 0.0, 2.0)
    return np.where(d < ZERO_SNAP, 0.0, d)


def gram(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("A and B must be non-empty 2-d arrays")
    if A.shape[1] != B.shape[1]:
        raise ValueError("A and B differ in width")
    G = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        G += np.multiply.outer(A[:, k], B[:, k])
    return G


def work_size(m, d):
    return 0


def align(A, B, subsequence, D=None, work=None, mins=False, accumulate=True):
    C = cost_from_gram(gram(A, B))
    out = _accumulate(C, subsequence, D) if accumulate else None
    if not mins:
        return out, None, None, None, None
    return (out,) + min_cost(C, 1) + min_cost(C, 0)


def prepare_bank(bank, offsets):
    return None  # nothing to precompute without the compiled layout


def scan(Q, bank, offsets, subsequence, both=False, mins=False, accumulate=True, prepared=None):
    off = np.asarray(offsets, dtype=np.intp)
    P = len(off) - 1
    if both and subsequence:
        raise ValueError("the reverse path length is only defined for full DTW")
    out = {}
    if accumulate:
        out["cost"], out["length"], out["start"] = np.empty(P), np.empty(P, np.intp), np.empty(P, np.intp)
        if both:
            out["length_t"] = np.empty(P, np.intp)
    if mins:
        out["rowmin"], out["rowarg"] = np.empty((P, len(Q))), np.empty((P, len(Q)), np.intp)
        out["colmin"], out["colarg"] = np.empty(len(bank)), np.empty(len(bank), np.intp)
    for k in range(P):
        B = bank[off[k]:off[k + 1]]
        D, rmin, rarg, cmin, carg = align(Q, B, subsequence, mins=mins, accumulate=accumulate)
        if mins:
            out["rowmin"][k], out["rowarg"][k] = rmin, rarg
            out["colmin"][off[k]:off[k + 1]], out["colarg"][off[k]:off[k + 1]] = cmin, carg
        if accumulate:
            end = end_column(D, subsequence)
            out["cost"][k] = D[-1, end]
            out["length"][k], out["start"][k] = trace(D, end, subsequence)
            if both:
                out["length_t"][k] = trace(D, end, subsequence, True)[0]
    return out


def accumulate(C, subsequence, out=None):
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError("cost matrix must be 2-d and non-empty")
    n, m = C.shape
    # padded with a virtual row/column; the start cells see a zero-cost diagonal
    P = np.full((n + 1, m + 1), np.inf)
    if subsequence:
        P[0, :] = 0.0
    else:
        P[0, 0] = 0.0
    for s in range(n + m - 1):
        i = np.arange(max(0, s - m + 1), min(n - 1, s) + 1)
        j = s - i
        best = np.minimum(np.minimum(P[i, j], P[i, j + 1]), P[i + 1, j])
        P[i + 1, j + 1] = C[i, j] + best
    if out is None:
        return np.ascontiguousarray(P[1:, 1:])
    out[...] = P[1:, 1:]
    return out


def cost_from_gram(G, out=None):
    C = cosine_from_gram(G)
    if out is None:
        return C
    out[...] = C
    return out


def min_cost(C, axis):
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("expected a non-empty 2-d array")
    arg = np.argmin(C, axis=axis)  # first occurrence on ties
    return np.take_along_axis(C, np.expand_dims(arg, axis), axis).squeeze(axis), arg.astype(np.intp)


_accumulate = accumulate


def end_column(D, subsequence):
    D = np.asarray(D)
    if not subsequence:
        return D.shape[1] - 1
    return int(np.argmin(D[-1]))


def _walk(D, end, subsequence, transposed):
    i, j = D.shape[0] - 1, end
    cells = [(i, j)]
    while not (i == 0 and (subsequence or j == 0)):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = D[i - 1, j - 1], D[i - 1, j], D[i, j - 1]
            step, best = 0, diag
            order = ((2, left), (1, up)) if transposed else ((1, up), (2, left))
            for candidate, value in order:
                if value < best:
                    step, best = candidate, value
            if step == 0:
                i, j = i - 1, j - 1
            elif step == 1:
                i -= 1
            else:
                j -= 1
        cells.append((i, j))
    return cells


def trace(D, end, subsequence, transposed=False):
    cells = _walk(np.asarray(D), end, subsequence, transposed)
    return len(cells), cells[-1][1]


def backtrack(D, end, subsequence, transposed=False):
    cells = _walk(np.asarray(D), end, subsequence, transposed)
    return np.array(cells[::-1], dtype=np.intp).reshape(-1, 2)
