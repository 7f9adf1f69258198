"""Retrieval metrics and the experiment protocols run on synthetic corpora.

Every experiment draws its queries from its own generator, seeded separately
from corpus generation, so the same corpus can be re-queried reproducibly.
Timings cover the ranking call only.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .alignment import rank_by_alignment, scan_costs, sort_by_cost
from .embedding import DIRECTIONS, Corpus, candidate_modality, query_modality
from .errors import EmptyRanks, FragmentTooLong, NonPositive, SizeTooLarge
from .fingerprint import FingerprintParams, build_fingerprint_index, fingerprint_rank
from .ranking import RankedList, rank_of_truth
from .synth import seconds_to_snippets, systems_to_snippets
from .voting import build_index, nearest_from_minima, tally_votes, vote_rank

METHODS = ("vote", "dtw", "sdtw", "fingerprint")
IDENTIFY_METHODS = ("vote", "dtw", "fingerprint")
DEFAULT_KS = (1, 5, 10)
FRAGMENT_SECONDS = (10, 20, 30, 40, 50, 60, 70, 80)
FRAGMENT_SYSTEMS = (1, 2, 3, 4, 5, 6, 7, 8)
CSV_COLUMNS = ("method", "direction", "experiment", "param", "n_queries",
               "R@1", "R@5", "R@10", "MRR", "MR", "mean_seconds")


@dataclass(frozen=True)
class EvalReport:
    ranks: tuple
    recall_at: dict  # K -> (count, fraction)
    mrr: float
    median_rank: int
    n_queries: int
    n_corpus: int
    method: str = ""
    direction: str = ""
    timing: float = math.nan  # mean seconds per query, nan when not measured

    def recall(self, k: int) -> float:
        return self.recall_at[k][1]


def metrics(ranks, ks=DEFAULT_KS, n_corpus: Optional[int] = None, method: str = "",
            direction: str = "", timing: float = math.nan) -> EvalReport:
    """Recall@K, mean reciprocal rank and (lower) median rank of 1-based truth ranks."""
    r = np.asarray(list(ranks), dtype=np.int64)
    if r.size == 0:
        raise EmptyRanks("no ranks to summarize")
    if n_corpus is None:
        n_corpus = int(r.max())
    if r.min() < 1 or r.max() > n_corpus:
        raise ValueError(f"ranks must lie in [1, {n_corpus}]")
    n = len(r)
    recall = {}
    for k in ks:
        count = int(np.count_nonzero(r <= k))
        recall[int(k)] = (count, count / n)
    mrr = float(np.mean(1.0 / r))
    median = int(np.sort(r)[(n - 1) // 2])
    return EvalReport(tuple(int(x) for x in r), recall, mrr, median, n, int(n_corpus),
                      method, direction, float(timing))


class Searcher:
    """Ranks queries against one corpus with one method and direction.

    Indexes are built once in the constructor, so :meth:`rank` times only
    the search itself.
    """

    def __init__(self, corpus: Corpus, method: str, direction: str = "a2s",
                 params: Optional[FingerprintParams] = None):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method!r}")
        corpus.require_nonempty()
        self.corpus, self.method, self.direction = corpus, method, direction
        side = candidate_modality(direction)
        self.index = None
        if method == "vote":
            self.index = build_index(corpus, side)
        elif method == "fingerprint":
            self.index = build_fingerprint_index(corpus, side, params)

    def rank(self, q) -> RankedList:
        truth = q.piece_id if q.piece_id in self.corpus else None
        if self.method == "vote":
            return vote_rank(q, self.index, truth)
        if self.method == "fingerprint":
            return fingerprint_rank(q, self.index, truth)
        mode = "subsequence" if self.method == "sdtw" else "full"
        return rank_by_alignment(q, self.corpus, mode, self.direction)


def run_piece_identification(corpus: Corpus, method: str, direction: str = "a2s",
                             ks=DEFAULT_KS) -> EvalReport:
    """Query every piece with its whole view and rank the opposite views."""
    searcher = Searcher(corpus, method, direction)
    side = query_modality(direction)
    ranks, seconds = [], 0.0
    for piece in corpus:
        q = piece.view(side)
        t0 = time.perf_counter()
        rl = searcher.rank(q)
        seconds += time.perf_counter() - t0
        ranks.append(rank_of_truth(rl))
    return metrics(ranks, ks, len(corpus), method, direction, seconds / len(ranks))


def _rank_in(ids, scored, truth) -> int:
    return rank_of_truth(RankedList(scored, truth, truth, ids))


def run_identification_suite(corpus: Corpus, methods=IDENTIFY_METHODS, directions=DIRECTIONS,
                             ks=DEFAULT_KS) -> dict:
    """All identification runs for one corpus, keyed by ``(method, direction)``.

    Alignment and voting in both directions come out of one pass over all
    (audio, score) pairs; the results equal separate
    :func:`run_piece_identification` calls except that timing is not
    measured (``nan``). Fingerprint runs are timed as usual.
    """
    corpus.require_nonempty()
    out = {}
    shared = [m for m in methods if m in ("vote", "dtw")]
    if shared:
        ids, a_off, a_bank = corpus.bank("audio")
        _, s_off, s_bank = corpus.bank("score")
        P = len(ids)
        forward = np.empty((P, P))   # audio i against score j
        backward = np.empty((P, P))  # score j against audio i, stored [i, j]
        a2s_votes = []
        s_best = np.full(len(s_bank), np.inf)
        s_piece = np.zeros(len(s_bank), dtype=np.intp)
        for i in range(P):
            q = a_bank[a_off[i]:a_off[i + 1]]
            r = kernels.scan(q, s_bank, s_off, False, both=True, mins=True,
                             accumulate="dtw" in shared, prepared=corpus.prepared("score"))
            if "dtw" in shared:
                forward[i] = r["cost"] / r["length"]
                backward[i] = r["cost"] / r["length_t"]
            piece, _, dist = nearest_from_minima(r["rowmin"], r["rowarg"])
            a2s_votes.append(tally_votes(piece, dist, ids))
            better = r["colmin"] < s_best  # earlier audio piece keeps ties
            s_best[better] = r["colmin"][better]
            s_piece[better] = i
        runs = {
            ("dtw", "a2s"): lambda k: sort_by_cost(zip(ids, forward[k].tolist())),
            ("dtw", "s2a"): lambda k: sort_by_cost(zip(ids, backward[:, k].tolist())),
            ("vote", "a2s"): lambda k: a2s_votes[k],
            ("vote", "s2a"): lambda k: tally_votes(s_piece[s_off[k]:s_off[k + 1]],
                                                   s_best[s_off[k]:s_off[k + 1]], ids),
        }
        where = {pid: k for k, pid in enumerate(ids)}
        order = [where[pid] for pid in corpus.ids]  # report queries in corpus order
        for (method, direction), scored in runs.items():
            if method in shared and direction in directions:
                ranks = [_rank_in(ids, scored(k), ids[k]) for k in order]
                out[method, direction] = metrics(ranks, ks, P, method, direction)
    for direction in directions:
        for method in methods:
            if method not in ("vote", "dtw"):
                out[method, direction] = run_piece_identification(corpus, method, direction, ks)
    return out


def fragment_lengths(direction: str, per_system: Optional[int] = None) -> list:
    """Default query-length ladder in snippets: 10 to 80 s of audio or 1 to 8 score systems."""
    if query_modality(direction) == "audio":
        return [seconds_to_snippets(s) for s in FRAGMENT_SECONDS]
    return [systems_to_snippets(s, per_system) for s in FRAGMENT_SYSTEMS]


def default_scale_length(direction: str, per_system: Optional[int] = None) -> int:
    """Fixed query length for scaling runs: 50 s of audio or four score systems."""
    if query_modality(direction) == "audio":
        return seconds_to_snippets(50)
    return systems_to_snippets(4, per_system)


@dataclass(frozen=True)
class QueryPlan:
    """Which pieces to query and where inside them, independent of fragment length.

    ``where`` holds uniform draws in [0, 1); a fragment of length L starts at
    ``floor(where * (len - L + 1))``. Reusing one plan across lengths keeps
    the comparison between lengths free of extra sampling noise.
    """

    pieces: tuple
    where: np.ndarray = field(repr=False)

    def fragments(self, corpus: Corpus, modality: str, length: int) -> list:
        out = []
        for pid, u in zip(self.pieces, self.where):
            seq = corpus.view(pid, modality)
            if length > len(seq):
                raise FragmentTooLong(f"fragment of {length} snippets exceeds {pid!r} "
                                      f"({len(seq)} snippets)")
            out.append(seq.slice(int(u * (len(seq) - length + 1)), length))
        return out


def plan_queries(ids, n_queries: int, rng: np.random.Generator) -> QueryPlan:
    """Draw ``n_queries`` pieces uniformly with replacement, plus a start position each."""
    if n_queries < 1:
        raise NonPositive("n_queries must be >= 1")
    ids = tuple(ids)
    pick = rng.integers(0, len(ids), n_queries)
    return QueryPlan(tuple(ids[k] for k in pick), rng.random(n_queries))


def _fragment_ranks(corpus, fragments, direction, searcher=None):
    ranks, seconds = [], 0.0
    if searcher is None:
        side = candidate_modality(direction)
        ids, offsets, bank = corpus.bank(side)
        prepared = corpus.prepared(side)
    for q in fragments:
        t0 = time.perf_counter()
        if searcher is not None:
            rl = searcher.rank(q)
            seconds += time.perf_counter() - t0
            ranks.append(rank_of_truth(rl))
            continue
        costs = scan_costs(q.values, bank, offsets, True, prepared=prepared)
        rl = RankedList(sort_by_cost(zip(ids, costs.tolist())), q.piece_id, q.piece_id, ids)
        seconds += time.perf_counter() - t0
        ranks.append(rank_of_truth(rl))
    return ranks, seconds


def run_fragment_experiment(corpus: Corpus, lengths=None, n_queries: int = 1500,
                            direction: str = "a2s", seed: int = 0, method: str = "sdtw",
                            ks=DEFAULT_KS) -> list:
    """MRR against query length. Returns ``[(length, EvalReport), ...]``.

    Lengths are snippet counts; all lengths share one query plan.
    """
    corpus.require_nonempty()
    if lengths is None:
        lengths = fragment_lengths(direction)
    side = query_modality(direction)
    shortest = min(len(p.view(side)) for p in corpus)
    for length in lengths:
        if length < 1:
            raise NonPositive("fragment lengths must be >= 1")
        if length > shortest:
            raise FragmentTooLong(f"fragment length {length} exceeds the shortest "
                                  f"{side} view ({shortest} snippets)")
    plan = plan_queries(corpus.ids, n_queries, np.random.default_rng([seed, 1]))
    searcher = None if method == "sdtw" else Searcher(corpus, method, direction)
    out = []
    for length in lengths:
        ranks, seconds = _fragment_ranks(corpus, plan.fragments(corpus, side, length),
                                         direction, searcher)
        out.append((int(length), metrics(ranks, ks, len(corpus), method, direction,
                                         seconds / len(ranks))))
    return out


def run_scalability_experiment(corpus: Corpus, sizes, n_queries: int = 1000,
                               repetitions: int = 10, direction: str = "a2s",
                               length: Optional[int] = None, seed: int = 0,
                               ks=DEFAULT_KS) -> list:
    """Subsequence-DTW search cost and accuracy against collection size.

    For each size and repetition a random sub-collection is drawn and
    ``n_queries`` fixed-length fragments of its pieces are searched in it.
    Returns ``[(size, mean MRR, mean seconds per query, EvalReport), ...]``;
    the report pools the ranks of all repetitions.
    """
    corpus.require_nonempty()
    if repetitions < 1:
        raise NonPositive("repetitions must be >= 1")
    for size in sizes:
        if size < 1:
            raise NonPositive("sizes must be >= 1")
        if size > len(corpus):
            raise SizeTooLarge(f"size {size} exceeds the corpus ({len(corpus)} pieces)")
    if length is None:
        length = default_scale_length(direction)
    side = query_modality(direction)
    ids = sorted(corpus.ids)
    out = []
    for size in sizes:
        ranks, mrrs, seconds = [], [], 0.0
        for rep in range(repetitions):
            rng = np.random.default_rng([seed, 2, size, rep])
            sub = corpus.subset(ids[k] for k in rng.choice(len(ids), size, replace=False))
            plan = plan_queries(sub.ids, n_queries, rng)
            r, s = _fragment_ranks(sub, plan.fragments(sub, side, length), direction)
            ranks += r
            seconds += s
            mrrs.append(float(np.mean(1.0 / np.asarray(r, dtype=np.float64))))
        report = metrics(ranks, ks, size, "sdtw", direction, seconds / len(ranks))
        out.append((int(size), float(np.mean(mrrs)), report.timing, report))
    return out


def linear_fit(x, y) -> tuple:
    """Least-squares line through ``(x, y)``: ``(slope, intercept, r_squared)``."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / total if total > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.6f}"


def csv_row(report: EvalReport, experiment: str, param="") -> dict:
    row = {"method": report.method, "direction": report.direction, "experiment": experiment,
           "param": param, "n_queries": report.n_queries, "MRR": _fmt(report.mrr),
           "MR": report.median_rank,
           "mean_seconds": "" if math.isnan(report.timing) else f"{report.timing:.6g}"}
    for k in (1, 5, 10):
        row[f"R@{k}"] = _fmt(report.recall(k)) if k in report.recall_at else ""
    return row


def write_csv(rows, stream=None) -> str:
    """Write result rows (dicts keyed by ``CSV_COLUMNS``) as CSV; returns the text."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
