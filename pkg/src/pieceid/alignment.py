"""Full and subsequence DTW over cosine-distance cost matrices.

Steps are (1,1), (1,0) and (0,1) with unit weights. When several
predecessors tie, the path prefers the diagonal, then the vertical step
(advance the query), then the horizontal one (advance the candidate).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .embedding import Corpus, SnippetSequence, candidate_modality
from .errors import DimensionMismatch, EmptySequence
from .ranking import RankedList

KINDS = ("full", "subsequence")


@dataclass(frozen=True)
class AlignmentResult:
    cost: float
    normalized_cost: float
    path: Optional[np.ndarray]  # (L, 2) rows of (query index, candidate index)
    path_length: int
    kind: str
    match_span: tuple  # candidate (start, end), inclusive


def _check(q, d):
    for s in (q, d):
        if s is None or len(s) == 0:
            raise EmptySequence("cannot align an empty sequence")
    if q.dim != d.dim:
        raise DimensionMismatch(f"dims {q.dim} and {d.dim} differ")


def _finish(D, subsequence, with_path, transposed=False) -> AlignmentResult:
    end = kernels.end_column(D, subsequence)
    cost = float(D[-1, end])
    if with_path:
        path = kernels.backtrack(D, end, subsequence, transposed)
        length, start = len(path), int(path[0, 1])
    else:
        path = None
        length, start = kernels.trace(D, end, subsequence, transposed)
    kind = "subsequence" if subsequence else "full"
    if transposed:
        if path is not None:
            path = np.ascontiguousarray(path[:, ::-1])
        span = (0, D.shape[0] - 1)
    else:
        span = (start, end)
    return AlignmentResult(cost, cost / length, path, length, kind, span)


def align_costs(C: np.ndarray, subsequence: bool = False, with_path: bool = True,
                transposed: bool = False) -> AlignmentResult:
    """Align directly on a local cost matrix ``C`` (rows are the query).

    ``transposed=True`` returns the result for ``C.T`` instead (full DTW
    only). Swapping the arguments of full DTW just transposes the accumulated
    matrix, so only the backtrack's tie order changes.
    """
    if transposed and subsequence:
        raise ValueError("transposed reuse only applies to full DTW")
    return _finish(kernels.accumulate(C, subsequence), subsequence, with_path, transposed)


def align_values(q: np.ndarray, c: np.ndarray, subsequence: bool = False,
                 with_path: bool = True) -> AlignmentResult:
    """Align unit-row matrices without materializing the distance matrix."""
    ws = kernels.workspace()
    n, m = len(q), len(c)
    D, *_ = kernels.align(q, c, subsequence, D=ws.get("acc", n, m),
                          work=ws.get("work", 1, kernels.work_size(m, q.shape[1])))
    return _finish(D, subsequence, with_path)


def scan_costs(q: np.ndarray, bank: np.ndarray, offsets, subsequence: bool = False,
               both: bool = False, prepared=None):
    """Normalized alignment costs of ``q`` against every piece of a stacked bank.

    With ``both`` (full DTW only) also returns the costs of each piece aligned
    against ``q``; the accumulated matrix is shared, only the path differs.
    """
    r = kernels.scan(q, bank, offsets, subsequence, both=both, prepared=prepared)
    forward = r["cost"] / r["length"]
    if both:
        return forward, r["cost"] / r["length_t"]
    return forward


def dtw(q: SnippetSequence, d: SnippetSequence, with_path: bool = True) -> AlignmentResult:
    """Minimum-cost alignment with both endpoints anchored."""
    _check(q, d)
    return align_values(q.values, d.values, False, with_path)


def sdtw(fragment: SnippetSequence, full: SnippetSequence, with_path: bool = True) -> AlignmentResult:
    """Align the whole fragment to the best contiguous region of ``full``.

    The match may start at any column of ``full`` for free; it ends at the
    leftmost column with minimal accumulated cost in the last row.
    """
    _check(fragment, full)
    return align_values(fragment.values, full.values, True, with_path)


def align(q, d, mode: str = "full", with_path: bool = True) -> AlignmentResult:
    if mode not in KINDS:
        raise ValueError(f"mode must be one of {KINDS}, got {mode!r}")
    return (sdtw if mode == "subsequence" else dtw)(q, d, with_path)


def sort_by_cost(scored) -> tuple:
    """Ascending cost, ties by piece_id."""
    return tuple(sorted(scored, key=lambda item: (item[1], item[0])))


def rank_by_alignment(q: SnippetSequence, corpus: Corpus, mode: str = "full",
                      direction: str = "a2s") -> RankedList:
    """Score every piece's candidate view against ``q`` by normalized alignment cost."""
    corpus.require_nonempty()
    if mode not in KINDS:
        raise ValueError(f"mode must be one of {KINDS}, got {mode!r}")
    side = candidate_modality(direction)
    ids, offsets, bank = corpus.bank(side)
    if q.dim != bank.shape[1]:
        raise DimensionMismatch(f"dims {q.dim} and {bank.shape[1]} differ")
    costs = scan_costs(q.values, bank, offsets, mode == "subsequence", prepared=corpus.prepared(side))
    truth = q.piece_id if q.piece_id in corpus else None
    return RankedList(sort_by_cost(zip(ids, costs.tolist())), q.piece_id, truth, ids)
