"""Embedding vectors, snippet sequences, corpora and the cosine distance.

Vectors are stored unit-normalized in float64. Once normalized, the cosine
distance is ``1 - <a, b>``; results are clipped to [0, 2] and values below
``ZERO_SNAP`` are set to exactly 0 so that self-comparisons cost nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from . import kernels
from ._kernels_py import ZERO_SNAP
from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyCorpus,
    EmptySequence,
    MissingView,
    ZeroVector,
)

MODALITIES = ("score", "audio")
DIRECTIONS = ("a2s", "s2a")
TAGS = ("has_repeats", "degenerate")

MIN_NORM = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def query_modality(direction: str) -> str:
    """Modality of the query side: audio for a2s, score for s2a."""
    if direction == "a2s":
        return "audio"
    if direction == "s2a":
        return "score"
    raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def candidate_modality(direction: str) -> str:
    return "score" if query_modality(direction) == "audio" else "audio"


def _unit_rows(values) -> np.ndarray:
    a = np.array(values, dtype=np.float64, ndmin=2)
    norms = np.linalg.norm(a, axis=1)
    bad = np.flatnonzero(~(norms >= MIN_NORM))
    if bad.size:
        raise ZeroVector(f"row {int(bad[0])} has norm {norms[bad[0]]:.3g}, cannot normalize")
    return a / norms[:, None]


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """One snippet's position in the shared space. Always unit length."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(_unit_rows(self.values)[0]))

    @classmethod
    def _unit(cls, values: np.ndarray) -> "EmbeddingVector":
        # rows of a SnippetSequence are already normalized; skip renormalizing
        v = object.__new__(cls)
        object.__setattr__(v, "values", values)
        return v

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, EmbeddingVector) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


def normalize(v) -> EmbeddingVector:
    """Unit-length copy of ``v``; raises ZeroVector for a (near) zero vector."""
    if isinstance(v, EmbeddingVector):
        return v
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("expected a 1-d vector")
    return EmbeddingVector(a)


def cosine_distance(a, b) -> float:
    a, b = normalize(a), normalize(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim} differ")
    # same summation order as distance_matrix, so the two agree exactly
    return float(kernels.cost_from_gram(kernels.gram(a.values[None], b.values[None]))[0, 0])


@dataclass(frozen=True, eq=False)
class SnippetSequence:
    """Temporally ordered unit embeddings of one view of one piece (or a fragment of it).

    ``start`` records where a fragment was cut from its source sequence.
    """

    values: np.ndarray
    modality: str
    piece_id: str
    start: int = 0

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        a = np.asarray(self.values)
        if a.ndim != 2 or a.shape[0] == 0:
            raise EmptySequence(f"sequence for {self.piece_id!r} is empty")
        if a.dtype != np.float64 or a.flags.writeable or not a.flags.c_contiguous:
            a = _readonly(np.ascontiguousarray(a, dtype=np.float64))
        object.__setattr__(self, "values", a)

    @classmethod
    def from_raw(cls, values, modality: str, piece_id: str, start: int = 0) -> "SnippetSequence":
        """Normalize every row of ``values`` and wrap them."""
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] == 0:
            raise EmptySequence(f"sequence for {piece_id!r} is empty")
        return cls(_readonly(_unit_rows(a)), modality, piece_id, start)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i) -> EmbeddingVector:
        return EmbeddingVector._unit(self.values[i])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def slice(self, start: int, length: int) -> "SnippetSequence":
        return SnippetSequence(self.values[start:start + length], self.modality,
                               self.piece_id, self.start + start)

    def __eq__(self, other):
        return (isinstance(other, SnippetSequence) and self.modality == other.modality
                and self.piece_id == other.piece_id and self.start == other.start
                and np.array_equal(self.values, other.values))

    __hash__ = None


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, SnippetSequence):
        return x.values
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] == 0:
        raise EmptySequence("expected a non-empty (n, dim) array")
    return a


def distance_matrix(q, d) -> np.ndarray:
    """N x M cosine distances between the rows of ``q`` and ``d``.

    ``distance_matrix(q, d).T`` equals ``distance_matrix(d, q)`` exactly.
    """
    a, b = _as_matrix(q), _as_matrix(d)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"dims {a.shape[1]} and {b.shape[1]} differ")
    G = kernels.gram(a, b)
    return kernels.cost_from_gram(G, out=G)


@dataclass(frozen=True, eq=False)
class Piece:
    piece_id: str
    score: Optional[SnippetSequence] = None
    audio: Optional[SnippetSequence] = None
    tags: frozenset = field(default_factory=frozenset)

    def view(self, modality: str) -> SnippetSequence:
        seq = self.score if modality == "score" else self.audio if modality == "audio" else None
        if modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {modality!r}")
        if seq is None:
            raise MissingView(f"piece {self.piece_id!r} has no {modality} view")
        return seq

    def __eq__(self, other):
        return (isinstance(other, Piece) and self.piece_id == other.piece_id
                and self.score == other.score and self.audio == other.audio
                and self.tags == other.tags)

    __hash__ = None


class Corpus:
    """Ordered collection of pieces sharing one embedding dimension.

    Pieces keep the order they were given in; nothing re-sorts them.
    """

    def __init__(self, pieces: Iterable[Piece], dim: Optional[int] = None):
        self.pieces = tuple(pieces)
        seen = set()
        for p in self.pieces:
            if p.piece_id in seen:
                raise DuplicateId(f"duplicate piece id {p.piece_id!r}")
            seen.add(p.piece_id)
            for seq in (p.score, p.audio):
                if seq is None:
                    continue
                if dim is None:
                    dim = seq.dim
                elif seq.dim != dim:
                    raise DimensionMismatch(
                        f"piece {p.piece_id!r} has dim {seq.dim}, corpus dim is {dim}")
        self.dim = dim
        self._by_id = {p.piece_id: p for p in self.pieces}
        self._banks = {}

    def __len__(self) -> int:
        return len(self.pieces)

    def __iter__(self) -> Iterator[Piece]:
        return iter(self.pieces)

    def __contains__(self, piece_id) -> bool:
        return piece_id in self._by_id

    def __eq__(self, other):
        return isinstance(other, Corpus) and self.pieces == other.pieces

    __hash__ = None

    @property
    def ids(self) -> tuple:
        return tuple(p.piece_id for p in self.pieces)

    def get(self, piece_id: str) -> Piece:
        try:
            return self._by_id[piece_id]
        except KeyError:
            raise KeyError(f"no piece {piece_id!r} in corpus") from None

    def view(self, piece_id: str, modality: str) -> SnippetSequence:
        return self.get(piece_id).view(modality)

    def subset(self, piece_ids: Iterable[str]) -> "Corpus":
        """Corpus restricted to ``piece_ids``, in the original corpus order."""
        wanted = set(piece_ids)
        missing = wanted - set(self._by_id)
        if missing:
            raise KeyError(f"unknown piece ids: {sorted(missing)[:5]}")
        return Corpus([p for p in self.pieces if p.piece_id in wanted], self.dim)

    def bank(self, modality: str) -> tuple:
        """``(piece_ids, offsets, vectors)``: one view of every piece stacked in piece_id order.

        Piece k owns rows ``offsets[k]:offsets[k+1]``. Cached, since a corpus never changes.
        """
        if modality not in self._banks:
            self.require_nonempty()
            pieces = sorted(self.pieces, key=lambda p: p.piece_id)
            blocks = [p.view(modality).values for p in pieces]
            offsets = _readonly(np.concatenate([[0], np.cumsum([len(b) for b in blocks])]).astype(np.intp))
            self._banks[modality] = (tuple(p.piece_id for p in pieces), offsets,
                                     _readonly(np.concatenate(blocks)))
        return self._banks[modality]

    def prepared(self, modality: str):
        """Kernel-side layout of :meth:`bank` for the active backend (cached)."""
        key = (modality, kernels.backend())
        if key not in self._banks:
            _, offsets, vectors = self.bank(modality)
            self._banks[key] = kernels.prepare_bank(vectors, offsets)
        return self._banks[key]

    def require_nonempty(self):
        if not self.pieces:
            raise EmptyCorpus("corpus has no pieces")
