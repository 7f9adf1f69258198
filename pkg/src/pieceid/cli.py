"""Command-line interface.

    pieceid synth --out DIR [--pieces N --seed S ...]
    pieceid query --corpus MANIFEST --query FILE [--method dtw --direction a2s]
    pieceid eval --experiment identify|fragment|scale [--corpus MANIFEST | synth flags]
    pieceid bench [--sizes ...]

Usage errors exit with status 2, data errors (missing or malformed files,
impossible experiment settings) with status 1.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

from . import kernels
from .embedding import DIRECTIONS, query_modality
from .errors import PieceIdError
from .evaluation import (
    IDENTIFY_METHODS,
    METHODS,
    Searcher,
    csv_row,
    fragment_lengths,
    run_fragment_experiment,
    run_identification_suite,
    run_piece_identification,
    run_scalability_experiment,
    write_csv,
)
from .io import load_corpus, load_sequence, save_corpus
from .synth import SynthConfig, generate_corpus

log = logging.getLogger("pieceid")

SCALE_SIZES = (25, 50, 100, 200, 321)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {v}")
    return v


def _corpus_flags() -> argparse.ArgumentParser:
    defaults = SynthConfig()
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("synthetic corpus")
    g.add_argument("--pieces", type=int, default=defaults.n_pieces)
    g.add_argument("--seed", type=int, default=defaults.seed)
    g.add_argument("--dim", type=_positive_int, default=defaults.dim)
    g.add_argument("--score-len", type=_positive_int, default=defaults.mean_score_len,
                   help="mean score snippets per piece")
    g.add_argument("--audio-len", type=_positive_int, default=defaults.mean_audio_len,
                   help="mean audio snippets per piece")
    g.add_argument("--sigma", type=float, default=defaults.pair_noise_sigma,
                   help="noise between paired views")
    g.add_argument("--tempo-range", type=float, nargs=2, metavar=("LOW", "HIGH"),
                   default=defaults.tempo_warp_range)
    g.add_argument("--repeat-fraction", type=_fraction, default=defaults.repeat_fraction)
    g.add_argument("--degenerate-fraction", type=_fraction, default=defaults.degenerate_fraction)
    g.add_argument("--attention", action="store_true", help="halve the pair noise")
    return p


def _config(args) -> SynthConfig:
    return SynthConfig(n_pieces=args.pieces, dim=args.dim, mean_score_len=args.score_len,
                       mean_audio_len=args.audio_len, pair_noise_sigma=args.sigma,
                       tempo_warp_range=tuple(args.tempo_range),
                       repeat_fraction=args.repeat_fraction,
                       degenerate_fraction=args.degenerate_fraction,
                       attention_mode=args.attention, seed=args.seed)


def _config_dict(cfg: SynthConfig) -> dict:
    return {"generator": "pieceid.synth", "n_pieces": cfg.n_pieces, "dim": cfg.dim,
            "mean_score_len": cfg.mean_score_len, "mean_audio_len": cfg.mean_audio_len,
            "pair_noise_sigma": cfg.pair_noise_sigma,
            "tempo_warp_range": list(cfg.tempo_warp_range),
            "repeat_fraction": cfg.repeat_fraction,
            "degenerate_fraction": cfg.degenerate_fraction,
            "attention_mode": cfg.attention_mode, "seed": cfg.seed}


def _load(args):
    if args.corpus:
        return load_corpus(args.corpus)
    return generate_corpus(_config(args))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pieceid",
                                     description="Cross-modal piece identification on embedding sequences.")
    parser.add_argument("--backend", choices=("cython", "python"),
                        help="kernel implementation (default: compiled when available)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    corpus_flags = _corpus_flags()

    p = sub.add_parser("synth", parents=[corpus_flags], help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("query", help="rank a corpus against one query file")
    p.add_argument("--corpus", required=True, help="manifest path")
    p.add_argument("--query", required=True, help="ASEQ1 file")
    p.add_argument("--method", choices=METHODS, default="dtw")
    p.add_argument("--direction", choices=DIRECTIONS, default="a2s")
    p.add_argument("--top", type=_positive_int, help="print only the best N pieces")
    p.add_argument("--id", help="query id (default: the file name without extension)")

    p = sub.add_parser("eval", parents=[corpus_flags], help="run an experiment, write CSV")
    p.add_argument("--experiment", choices=("identify", "fragment", "scale"), required=True)
    p.add_argument("--corpus", help="manifest path (default: generate from the synthetic flags)")
    p.add_argument("--methods", nargs="+", choices=METHODS)
    p.add_argument("--directions", nargs="+", choices=DIRECTIONS, default=list(DIRECTIONS))
    p.add_argument("--n-queries", type=_positive_int)
    p.add_argument("--lengths", type=_positive_int, nargs="+",
                   help="fragment lengths in snippets (default: 10-80 s or 1-8 systems)")
    p.add_argument("--sizes", type=_positive_int, nargs="+", default=list(SCALE_SIZES))
    p.add_argument("--repetitions", type=_positive_int, default=10)
    p.add_argument("--query-seed", type=int, default=0, help="seed for query sampling")
    p.add_argument("--timed", action="store_true",
                   help="identify: run each method separately so query time is measured")
    p.add_argument("--no-timing", action="store_true", help="leave the mean_seconds column empty")
    p.add_argument("--out", help="CSV path (default: standard output)")

    p = sub.add_parser("bench", parents=[corpus_flags], help="time subsequence search against corpus size")
    p.add_argument("--corpus", help="manifest path (default: generate from the synthetic flags)")
    p.add_argument("--direction", choices=DIRECTIONS, default="a2s")
    p.add_argument("--sizes", type=_positive_int, nargs="+", default=list(SCALE_SIZES))
    p.add_argument("--n-queries", type=_positive_int, default=100)
    p.add_argument("--repetitions", type=_positive_int, default=1)
    p.add_argument("--query-seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: standard output)")
    return parser


def cmd_synth(args) -> int:
    cfg = _config(args)
    corpus = generate_corpus(cfg)
    path = save_corpus(corpus, args.out, extra=_config_dict(cfg))
    log.info("wrote %d pieces to %s", len(corpus), path)
    return 0


def cmd_query(args) -> int:
    corpus = load_corpus(args.corpus)
    q = load_sequence(args.query, query_modality(args.direction), args.id)
    rl = Searcher(corpus, args.method, args.direction).rank(q)
    scores = dict(rl.items)
    order = rl.complete()
    if args.top:
        order = order[:args.top]
    lines = []
    for rank, pid in enumerate(order, 1):
        score = f"{scores[pid]:.6f}" if pid in scores else ""
        lines.append(f"{rank}\t{pid}\t{score}\n")
    sys.stdout.write("".join(lines))
    return 0


def _emit(rows, args):
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as f:
            write_csv(rows, f)
    else:
        write_csv(rows, sys.stdout)


def cmd_eval(args) -> int:
    corpus = _load(args)
    rows = []
    t0 = time.perf_counter()
    if args.experiment == "identify":
        methods = args.methods or list(IDENTIFY_METHODS)
        if args.timed:
            reports = {(m, d): run_piece_identification(corpus, m, d)
                       for d in args.directions for m in methods}
        else:
            reports = run_identification_suite(corpus, [m for m in methods if m != "sdtw"],
                                               args.directions)
            for d in args.directions:
                if "sdtw" in methods:
                    reports["sdtw", d] = run_piece_identification(corpus, "sdtw", d)
        for d in args.directions:
            for m in methods:
                rows.append(csv_row(reports[m, d], "identify", len(corpus)))
    elif args.experiment == "fragment":
        methods = args.methods or ["sdtw"]
        for d in args.directions:
            lengths = args.lengths or fragment_lengths(d)
            for m in methods:
                for length, report in run_fragment_experiment(corpus, lengths, args.n_queries or 1500,
                                                              d, args.query_seed, m):
                    rows.append(csv_row(report, "fragment", length))
    else:
        for d in args.directions:
            for size, _, _, report in run_scalability_experiment(
                    corpus, args.sizes, args.n_queries or 1000, args.repetitions, d,
                    seed=args.query_seed):
                rows.append(csv_row(report, "scale", size))
    if args.no_timing:
        for row in rows:
            row["mean_seconds"] = ""
    log.info("%s finished in %.1f s", args.experiment, time.perf_counter() - t0)
    _emit(rows, args)
    return 0


def cmd_bench(args) -> int:
    corpus = _load(args)
    rows = []
    for size, _, _, report in run_scalability_experiment(corpus, args.sizes, args.n_queries,
                                                         args.repetitions, args.direction,
                                                         seed=args.query_seed):
        rows.append(csv_row(report, "bench", size))
    _emit(rows, args)
    return 0


COMMANDS = {"synth": cmd_synth, "query": cmd_query, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eval" and args.experiment == "scale" and args.methods not in (None, ["sdtw"]):
            parser.error("the scale experiment only supports --methods sdtw")
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.backend:
        try:
            kernels.use_backend(args.backend)
        except RuntimeError as e:
            print(f"pieceid: error: {e}", file=sys.stderr)
            return 1
    try:
        return COMMANDS[args.command](args)
    except (PieceIdError, OSError) as e:
        print(f"pieceid: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
