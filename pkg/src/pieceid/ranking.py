"""Ranked candidate lists shared by every retrieval method."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import TruthMissing


@dataclass(frozen=True)
class RankedList:
    """Candidates ordered best first.

    ``items`` holds ``(piece_id, score)`` for the pieces a method actually
    scored. For vote and fingerprint rankings the score is a count (higher is
    better); for alignments it is the normalized cost (lower is better). Either
    way position 0 is the best match.

    ``candidates`` lists every piece in the search collection. Pieces that
    were never scored follow the scored ones in piece_id order, which gives a
    total order for rank metrics.
    """

    items: tuple
    query_id: str = ""
    truth_id: Optional[str] = None
    candidates: tuple = ()

    def __post_init__(self):
        items = tuple((str(pid), float(s)) for pid, s in self.items)
        ids = [pid for pid, _ in items]
        if len(set(ids)) != len(ids):
            raise ValueError("a piece appears more than once in the ranked list")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "candidates", tuple(self.candidates))

    def __len__(self):
        return len(self.items)

    @property
    def ids(self) -> list:
        return [pid for pid, _ in self.items]

    def complete(self) -> list:
        """All candidate ids: scored pieces first, then the rest sorted by id."""
        scored = self.ids
        seen = set(scored)
        return scored + sorted(c for c in self.candidates if c not in seen)


def rank_of_truth(rl: RankedList) -> int:
    """1-based position of ``rl.truth_id`` in the completed ordering."""
    if rl.truth_id is None:
        raise TruthMissing(f"query {rl.query_id!r} has no truth id")
    order = rl.complete()
    try:
        return order.index(rl.truth_id) + 1
    except ValueError:
        raise TruthMissing(f"truth {rl.truth_id!r} is not among the candidates") from None
