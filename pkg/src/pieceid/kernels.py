"""Backend selection for the alignment recurrence.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Both backends return identical values.
"""
import logging
import threading

import numpy as np

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
    log.debug("compiled kernels unavailable, using numpy fallback")

BACKENDS = ("cython", "python") if _compiled is not None else ("python",)

_active = _compiled if _compiled is not None else _kernels_py


def backend():
    """Name of the active backend."""
    return "python" if _active is _kernels_py else "cython"


def use_backend(name):
    """Switch the process-wide backend to ``"cython"`` or ``"python"``."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall the package")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def accumulate(C, subsequence=False, out=None):
    """Accumulated cost of local cost matrix ``C`` (rows are the query)."""
    return _active.accumulate(C, subsequence, out)


def gram(A, B):
    """Row dot products of A and B, summed coordinate by coordinate.

    Each entry depends only on its two rows, so ``gram(A, B).T == gram(B, A)``
    exactly and any sub-block equals the product of the matching rows.
    """
    return _active.gram(A, B)


def align(A, B, subsequence=False, D=None, work=None, mins=False, accumulate=True):
    """Accumulated cosine-cost matrix for aligning rows of A to rows of B.

    Costs are computed strip by strip and never stored as a full matrix.
    Returns ``(D, rowmin, rowarg, colmin, colarg)``; minima are None unless
    ``mins`` is set (row minima run over B, column minima over A).
    """
    return _active.align(A, B, subsequence, D, work, mins, accumulate)


def scan(Q, bank, offsets, subsequence=False, both=False, mins=False, accumulate=True,
         prepared=None):
    """Align Q against every piece of a concatenated candidate bank in one call.

    ``prepared`` is an optional :func:`prepare_bank` result for the same bank
    and backend. See ``_kernels.scan`` for the returned fields.
    """
    return _active.scan(Q, bank, offsets, subsequence, both, mins, accumulate, prepared)


def prepare_bank(bank, offsets):
    """Backend-specific precomputed layout of a bank, reusable across scans."""
    return _active.prepare_bank(bank, offsets)


def work_size(m, d):
    return _active.work_size(m, d)


def cost_from_gram(G, out=None):
    """Cosine distances from unit-vector dot products (pass ``out=G`` to convert in place)."""
    return _active.cost_from_gram(G, out)


def min_cost(C, axis):
    """``(values, indices)`` of the smallest entry along ``axis``; first index on ties."""
    return _active.min_cost(C, axis)


def end_column(D, subsequence=False):
    return _active.end_column(D, subsequence)


def trace(D, end, subsequence=False, transposed=False):
    """``(path_length, start_column)`` of the optimal path ending in column ``end``."""
    return _active.trace(D, end, subsequence, transposed)


def backtrack(D, end, subsequence=False, transposed=False):
    return _active.backtrack(D, end, subsequence, transposed)


class Workspace:
    """Reusable scratch matrices.

    Allocating fresh multi-megabyte arrays for every candidate costs page
    faults that can dwarf the arithmetic, so hot loops borrow views of
    buffers that only ever grow. A view is valid until the next request for
    the same slot.
    """

    def __init__(self):
        self._slots = {}

    def get(self, slot, n, m):
        buf = self._slots.get(slot)
        if buf is None or buf.size < n * m:
            buf = np.empty(max(n * m, 1 << 16))
            self._slots[slot] = buf
        return buf[:n * m].reshape(n, m)


_local = threading.local()


def workspace() -> Workspace:
    """Per-thread workspace."""
    ws = getattr(_local, "ws", None)
    if ws is None:
        ws = _local.ws = Workspace()
    return ws
