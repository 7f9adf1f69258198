"""Landmark-style hashing over embedding sequences.

Each snippet is reduced to a P-bit code by the signs of its projections on P
seeded random hyperplanes. An anchor snippet is paired with up to F following
snippets no more than T positions away; the key packs
``(anchor code, target code, time delta)``. A candidate's score is the height
of the tallest bin in its histogram of ``db anchor - query anchor`` offsets.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .embedding import Corpus, SnippetSequence, _readonly, candidate_modality
from .errors import BadLength, BadMagic, DimensionMismatch, EmptyIndex, InvalidConfig, MissingFile
from .ranking import RankedList

MAGIC = b"PIDFP1"
_HEADER = struct.Struct("<6sIIIIqII")  # magic, P, F, T, offset_bin, seed, dim, n_pieces


@dataclass(frozen=True)
class FingerprintParams:
    planes: int = 16
    fan_out: int = 5
    max_dt: int = 10
    seed: int = 0
    offset_bin: int = 1  # width of the offset histogram bins, in snippets

    def __post_init__(self):
        for name in ("planes", "fan_out", "max_dt", "offset_bin"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if 2 * self.planes + self.dt_bits > 62:
            raise InvalidConfig("planes and max_dt do not fit a 63-bit key")

    @property
    def dt_bits(self) -> int:
        return int(self.max_dt).bit_length()


def make_planes(dim: int, params: FingerprintParams) -> np.ndarray:
    """(P, dim) hyperplane normals drawn from the params seed."""
    return np.random.default_rng(params.seed).standard_normal((params.planes, dim))


def _codes(values: np.ndarray, planes: np.ndarray) -> np.ndarray:
    if values.shape[1] != planes.shape[1]:
        raise DimensionMismatch(f"dims {values.shape[1]} and {planes.shape[1]} differ")
    bits = (values @ planes.T) >= 0.0
    weights = np.left_shift(np.int64(1), np.arange(planes.shape[0], dtype=np.int64))
    return bits.astype(np.int64) @ weights


def quantize(v, planes) -> int:
    """P-bit code: bit b is set iff ``dot(v, planes[b]) >= 0``."""
    a = np.asarray(getattr(v, "values", v), dtype=np.float64)
    return int(_codes(a[None, :], np.asarray(planes, dtype=np.float64))[0])


def pack_key(code_a, code_t, dt, params: FingerprintParams):
    shift = params.dt_bits
    return (np.int64(code_a) << (params.planes + shift)) | (np.int64(code_t) << shift) | np.int64(dt)


def fingerprint_arrays(seq, params: FingerprintParams, planes: np.ndarray):
    """Keys and anchor positions of ``seq``, ordered by anchor then delta."""
    values = getattr(seq, "values", seq)
    codes = _codes(values, planes)
    n = len(codes)
    keys, anchors = [], []
    for dt in range(1, min(params.fan_out, params.max_dt) + 1):
        if dt >= n:
            break
        t = np.arange(n - dt)
        keys.append(pack_key(codes[t], codes[t + dt], dt, params))
        anchors.append(t)
    if not keys:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    keys, anchors = np.concatenate(keys), np.concatenate(anchors)
    # blocks were appended delta by delta; a stable sort on anchors keeps deltas ascending
    order = np.argsort(anchors, kind="stable")
    return keys[order], anchors[order]


def build_fingerprints(seq, params: FingerprintParams, planes: np.ndarray) -> list:
    """``[(key, anchor position), ...]`` for every anchor/target pair."""
    keys, anchors = fingerprint_arrays(seq, params, planes)
    return [(int(k), int(a)) for k, a in zip(keys, anchors)]


class FingerprintIndex:
    """Postings sorted by (key, piece, anchor); immutable after build."""

    def __init__(self, params, planes, piece_ids, keys, pieces, anchors):
        self.params = params
        self.planes = _readonly(np.ascontiguousarray(planes, dtype=np.float64))
        self.piece_ids = tuple(piece_ids)
        self.keys = _readonly(np.asarray(keys, dtype=np.int64))
        self.pieces = _readonly(np.asarray(pieces, dtype=np.int32))
        self.anchors = _readonly(np.asarray(anchors, dtype=np.int32))

    def __len__(self):
        return len(self.keys)

    @property
    def dim(self) -> int:
        return self.planes.shape[1]

    def key_counts(self) -> dict:
        counts = np.bincount(self.pieces, minlength=len(self.piece_ids))
        return dict(zip(self.piece_ids, counts.tolist()))

    def to_bytes(self) -> bytes:
        p = self.params
        ids = [pid.encode("utf-8") for pid in self.piece_ids]
        parts = [_HEADER.pack(MAGIC, p.planes, p.fan_out, p.max_dt, p.offset_bin, p.seed,
                              self.dim, len(ids))]
        for b in ids:
            parts.append(struct.pack("<I", len(b)) + b)
        parts.append(self.planes.astype("<f8").tobytes())
        parts.append(struct.pack("<Q", len(self.keys)))
        parts += [self.keys.astype("<i8").tobytes(), self.pieces.astype("<i4").tobytes(),
                  self.anchors.astype("<i4").tobytes()]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes, name: str = "<bytes>") -> "FingerprintIndex":
        if buf[:len(MAGIC)] != MAGIC:
            raise BadMagic(f"{name}: not a fingerprint index")
        try:
            magic, P, F, T, ob, seed, dim, n_ids = _HEADER.unpack_from(buf, 0)
            pos = _HEADER.size
            ids = []
            for _ in range(n_ids):
                (k,) = struct.unpack_from("<I", buf, pos)
                ids.append(buf[pos + 4:pos + 4 + k].decode("utf-8"))
                pos += 4 + k
            planes = np.frombuffer(buf, "<f8", P * dim, pos).reshape(P, dim)
            pos += 8 * P * dim
            (n,) = struct.unpack_from("<Q", buf, pos)
            pos += 8
            keys = np.frombuffer(buf, "<i8", n, pos)
            pieces = np.frombuffer(buf, "<i4", n, pos + 8 * n)
            anchors = np.frombuffer(buf, "<i4", n, pos + 12 * n)
        except (struct.error, ValueError) as exc:
            raise BadLength(f"{name}: truncated fingerprint index ({exc})") from None
        if pos + 16 * n != len(buf):
            raise BadLength(f"{name}: expected {pos + 16 * n} bytes, found {len(buf)}")
        params = FingerprintParams(P, F, T, seed, ob)
        return cls(params, planes.astype(np.float64), ids, keys.astype(np.int64),
                   pieces.astype(np.int32), anchors.astype(np.int32))

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "FingerprintIndex":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"{path}: no such fingerprint index")
        return cls.from_bytes(path.read_bytes(), str(path))


def build_fingerprint_index(corpus: Corpus, modality: str,
                            params: Optional[FingerprintParams] = None) -> FingerprintIndex:
    corpus.require_nonempty()
    params = params or FingerprintParams()
    planes = make_planes(corpus.dim, params)
    pieces = sorted(corpus, key=lambda p: p.piece_id)
    keys, owner, anchors = [], [], []
    for k, piece in enumerate(pieces):
        kk, aa = fingerprint_arrays(piece.view(modality), params, planes)
        keys.append(kk)
        anchors.append(aa)
        owner.append(np.full(len(kk), k, dtype=np.int64))
    keys, owner, anchors = np.concatenate(keys), np.concatenate(owner), np.concatenate(anchors)
    order = np.lexsort((anchors, owner, keys))
    return FingerprintIndex(params, planes, [p.piece_id for p in pieces],
                            keys[order], owner[order], anchors[order])


def offset_scores(q, index: FingerprintIndex) -> dict:
    """piece index -> height of its tallest offset bin, for pieces with any match."""
    keys, q_anchor = fingerprint_arrays(q, index.params, index.planes)
    lo = np.searchsorted(index.keys, keys, side="left")
    hi = np.searchsorted(index.keys, keys, side="right")
    n = hi - lo
    if not n.sum():
        return {}
    # expand each query key into its run of postings
    rows = np.repeat(np.arange(len(keys)), n)
    post = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n) + np.repeat(lo, n)
    piece = index.pieces[post].astype(np.int64)
    offset = index.anchors[post].astype(np.int64) - q_anchor[rows]
    bins = np.floor_divide(offset, index.params.offset_bin)
    pairs, counts = np.unique(np.stack([piece, bins], axis=1), axis=0, return_counts=True)
    best = np.zeros(len(index.piece_ids), dtype=np.int64)
    np.maximum.at(best, pairs[:, 0], counts)
    return {int(k): int(best[k]) for k in np.flatnonzero(best)}


def fingerprint_rank(q: SnippetSequence, index: FingerprintIndex,
                     truth_id: Optional[str] = None) -> RankedList:
    """Pieces with at least one key collision, by peak offset-bin count (ties by piece_id)."""
    if len(index) == 0:
        raise EmptyIndex("fingerprint index has no postings")
    if q.dim != index.dim:
        raise DimensionMismatch(f"query dim {q.dim} does not match index dim {index.dim}")
    scores = offset_scores(q, index)
    items = sorted(((index.piece_ids[k], s) for k, s in scores.items()),
                   key=lambda item: (-item[1], item[0]))
    if truth_id is None and q.piece_id in index.piece_ids:
        truth_id = q.piece_id
    return RankedList(items, q.piece_id, truth_id, index.piece_ids)


def fingerprint_rank_corpus(q: SnippetSequence, corpus: Corpus, direction: str = "a2s",
                            params: Optional[FingerprintParams] = None) -> RankedList:
    return fingerprint_rank(q, build_fingerprint_index(corpus, candidate_modality(direction), params))
