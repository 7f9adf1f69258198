"""On-disk formats: ASEQ1 embedding files and JSON corpus manifests.

An ASEQ1 file is the 5-byte magic ``ASEQ1``, then ``dim`` and ``count`` as
little-endian uint32, then ``count * dim`` little-endian float32 values in
row-major order. Rows need not be unit length; they are normalized on load.

A manifest lists the pieces of a corpus in order::

    {"format": "pieceid-manifest", "version": 1, "dim": 32,
     "pieces": [{"id": "p0000", "score_file": "score/p0000.aseq",
                 "audio_file": "audio/p0000.aseq", "tags": ["has_repeats"]}]}

File paths are relative to the manifest's directory.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .embedding import Corpus, Piece, SnippetSequence
from .errors import (BadLength, BadMagic, DimMismatch, DuplicateId, FormatError, MissingFile,
                     ZeroVector)

MAGIC = b"ASEQ1"
_HEADER = struct.Struct("<5sII")
MANIFEST_FORMAT = "pieceid-manifest"
MANIFEST_VERSION = 1


def encode_sequence(values) -> bytes:
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a (count, dim) array")
    count, dim = a.shape
    return _HEADER.pack(MAGIC, dim, count) + a.astype("<f4").tobytes()


def decode_sequence(buf: bytes, name: str = "<bytes>") -> np.ndarray:
    """Raw (count, dim) float64 rows of an ASEQ1 buffer."""
    if len(buf) < len(MAGIC) or buf[:len(MAGIC)] != MAGIC:
        raise BadMagic(f"{name}: not an ASEQ1 file")
    if len(buf) < _HEADER.size:
        raise BadLength(f"{name}: header is truncated")
    _, dim, count = _HEADER.unpack_from(buf)
    expected = _HEADER.size + 4 * dim * count
    if len(buf) != expected:
        raise BadLength(f"{name}: expected {expected} bytes for {count} x {dim} values, "
                        f"found {len(buf)}")
    return np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(count, dim).astype(np.float64)


def write_sequence(path, values):
    Path(path).write_bytes(encode_sequence(values))


def read_sequence(path, name=None) -> np.ndarray:
    path = Path(path)
    label = f"{name} ({path})" if name else str(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise MissingFile(f"{label}: file not found") from None
    return decode_sequence(buf, label)


def load_sequence(path, modality: str, piece_id=None) -> SnippetSequence:
    """Read and normalize one view. ``piece_id`` defaults to the file stem."""
    path = Path(path)
    pid = piece_id if piece_id is not None else path.stem
    values = read_sequence(path, f"piece {pid!r} {modality}")
    if values.shape[0] == 0:
        raise BadLength(f"piece {pid!r} {modality} ({path}): file holds no snippets")
    try:
        return SnippetSequence.from_raw(values, modality, pid)
    except ZeroVector as e:
        raise ZeroVector(f"piece {pid!r} {modality} ({path}): {e}") from None


def _manifest_error(path, msg):
    return FormatError(f"{path}: {msg}")


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(f"manifest {path} not found") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise _manifest_error(path, f"invalid JSON ({e})") from None
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise _manifest_error(path, "not a pieceid manifest")
    if doc.get("version") != MANIFEST_VERSION:
        raise _manifest_error(path, f"unsupported manifest version {doc.get('version')!r}")
    if not isinstance(doc.get("pieces"), list):
        raise _manifest_error(path, "'pieces' must be a list")
    return doc


def load_corpus(path) -> Corpus:
    """Load every piece listed in a manifest, in manifest order."""
    path = Path(path)
    doc = load_manifest(path)
    base = path.parent
    dim = doc.get("dim")
    seen = set()
    pieces = []
    for n, entry in enumerate(doc["pieces"]):
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise _manifest_error(path, f"piece entry {n} has no string 'id'")
        pid = entry["id"]
        if pid in seen:
            raise DuplicateId(f"{path}: piece id {pid!r} appears more than once")
        seen.add(pid)
        views = {}
        for modality in ("score", "audio"):
            rel = entry.get(f"{modality}_file")
            if not isinstance(rel, str):
                raise _manifest_error(path, f"piece {pid!r} has no {modality}_file")
            seq = load_sequence(base / rel, modality, pid)
            if dim is None:
                dim = seq.dim
            if seq.dim != dim:
                raise DimMismatch(f"piece {pid!r} {modality} ({base / rel}) has dim {seq.dim}, "
                                  f"corpus dim is {dim}")
            views[modality] = seq
        tags = entry.get("tags", [])
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise _manifest_error(path, f"piece {pid!r} tags must be a list of strings")
        pieces.append(Piece(pid, views["score"], views["audio"], frozenset(tags)))
    return Corpus(pieces, dim)


def save_corpus(corpus: Corpus, directory, manifest_name: str = "manifest.json",
                extra=None) -> Path:
    """Write views under ``score/`` and ``audio/`` plus a manifest; returns the manifest path.

    Output bytes depend only on the corpus (and ``extra``, a JSON-able dict
    stored under the ``"source"`` key).
    """
    directory = Path(directory)
    entries = []
    for modality in ("score", "audio"):
        (directory / modality).mkdir(parents=True, exist_ok=True)
    for piece in corpus:
        entry = {"id": piece.piece_id, "tags": sorted(piece.tags)}
        for modality in ("score", "audio"):
            rel = f"{modality}/{piece.piece_id}.aseq"
            write_sequence(directory / rel, piece.view(modality).values)
            entry[f"{modality}_file"] = rel
        entries.append(entry)
    doc = {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "dim": corpus.dim,
           "pieces": entries}
    if extra is not None:
        doc["source"] = extra
    out = directory / manifest_name
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
