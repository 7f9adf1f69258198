"""Snippet voting: every query snippet votes for the piece of its nearest database snippet."""
from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels
from .embedding import (
    Corpus,
    EmbeddingVector,
    SnippetSequence,
    _readonly,
    candidate_modality,
    normalize,
)
from .errors import DimensionMismatch, EmptyIndex
from .ranking import RankedList


class SnippetIndex:
    """Flat, immutable store of one modality's snippets across a corpus.

    Entries are kept in (piece_id, position) order so that the first minimum
    found by a scan is also the tie-break winner.
    """

    def __init__(self, piece_ids, offsets, vectors, modality):
        self.piece_ids = tuple(piece_ids)
        self.offsets = _readonly(np.asarray(offsets, dtype=np.intp))
        self.vectors = _readonly(np.ascontiguousarray(vectors, dtype=np.float64))
        self.modality = modality
        if not self.piece_ids:
            raise EmptyIndex("index has no pieces")
        self._prepared = {}

    def prepared(self):
        """Kernel-side layout of the vectors for the active backend (cached)."""
        key = kernels.backend()
        if key not in self._prepared:
            self._prepared[key] = kernels.prepare_bank(self.vectors, self.offsets)
        return self._prepared[key]

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def block(self, k: int) -> np.ndarray:
        """Snippets of the k-th piece (in index order)."""
        return self.vectors[self.offsets[k]:self.offsets[k + 1]]

    def entry(self, e: int) -> tuple:
        k = int(np.searchsorted(self.offsets, e, side="right")) - 1
        return self.piece_ids[k], int(e - self.offsets[k])

    def __eq__(self, other):
        return (isinstance(other, SnippetIndex) and self.piece_ids == other.piece_ids
                and self.modality == other.modality
                and np.array_equal(self.offsets, other.offsets)
                and self.vectors.tobytes() == other.vectors.tobytes())

    __hash__ = None


def build_index(corpus: Corpus, modality: str) -> SnippetIndex:
    ids, offsets, vectors = corpus.bank(modality)
    return SnippetIndex(ids, offsets, vectors, modality)


def _check_dim(n, index):
    if n != index.dim:
        raise DimensionMismatch(f"query dim {n} does not match index dim {index.dim}")


def nearest_snippet(x, index: SnippetIndex) -> tuple:
    """``(piece_id, position, distance)`` of the closest indexed snippet."""
    v = normalize(x) if not isinstance(x, EmbeddingVector) else x
    _check_dim(v.dim, index)
    piece, pos, dist = _nearest(v.values[None, :], index)
    k = int(piece[0])
    return index.piece_ids[k], int(pos[0]), float(dist[0])


def nearest_from_minima(rowmin: np.ndarray, rowarg: np.ndarray):
    """Combine per-piece minima (pieces x snippets) into overall winners.

    The first piece holding the smallest distance wins, matching index order.
    """
    piece = rowmin.argmin(axis=0)
    cols = np.arange(rowmin.shape[1])
    return piece, rowarg[piece, cols], rowmin[piece, cols]


def _nearest(Q: np.ndarray, index: SnippetIndex):
    """Per row of Q: index of the winning piece, position inside it, distance."""
    r = kernels.scan(Q, index.vectors, index.offsets, mins=True, accumulate=False,
                     prepared=index.prepared())
    return nearest_from_minima(r["rowmin"], r["rowarg"])


def tally_votes(piece: np.ndarray, dist: np.ndarray, piece_ids) -> tuple:
    """Ranked ``(piece_id, votes)`` from per-snippet winners.

    Ties in vote count go to the lower mean nearest-neighbor distance, then piece_id.
    """
    n = len(piece_ids)
    votes = np.bincount(piece, minlength=n)
    total = np.bincount(piece, weights=dist, minlength=n)
    rows = []
    for k in np.flatnonzero(votes):
        rows.append((-int(votes[k]), total[k] / votes[k], piece_ids[k]))
    rows.sort()
    return tuple((pid, float(-v)) for v, _, pid in rows)


def vote_rank(q: SnippetSequence, index: SnippetIndex, truth_id: Optional[str] = None) -> RankedList:
    """Rank pieces by the number of query snippets whose nearest neighbor they own."""
    _check_dim(q.dim, index)
    piece, _, dist = _nearest(q.values, index)
    if truth_id is None and q.piece_id in index.piece_ids:
        truth_id = q.piece_id
    return RankedList(tally_votes(piece, dist, index.piece_ids), q.piece_id, truth_id,
                      index.piece_ids)


def vote_rank_corpus(q: SnippetSequence, corpus: Corpus, direction: str = "a2s") -> RankedList:
    return vote_rank(q, build_index(corpus, candidate_modality(direction)))
