"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--pieces 40] [--query-len 97] [--repeats 3]

For each kernel the best of ``--repeats`` timings is reported per backend,
along with a check that both backends return identical values.
"""
import argparse
import time

import numpy as np

from pieceid import kernels
from pieceid.synth import SynthConfig, generate_corpus


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(corpus, query_len):
    ids, offsets, bank = corpus.bank("score")
    first = corpus.get(ids[0])
    q = first.audio.values[:query_len]
    c = first.score.values
    return {
        "gram": lambda: kernels.gram(q, c),
        "align dtw": lambda: kernels.align(q, c, False)[0],
        "align sdtw": lambda: kernels.align(q, c, True)[0],
        "scan sdtw": lambda: kernels.scan(q, bank, offsets, True)["cost"],
        "scan dtw+mins": lambda: kernels.scan(q, bank, offsets, False, both=True, mins=True)["rowmin"],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pieces", type=int, default=40)
    ap.add_argument("--query-len", type=int, default=97)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    corpus = generate_corpus(SynthConfig(n_pieces=args.pieces, seed=args.seed))
    previous = kernels.backend()
    results = {}
    try:
        for name in kernels.BACKENDS:
            kernels.use_backend(name)
            results[name] = {k: best_of(fn, args.repeats) for k, fn in cases(corpus, args.query_len).items()}
    finally:
        kernels.use_backend(previous)

    names = list(kernels.BACKENDS)
    print("kernel".ljust(16) + "".join(f"{n + ' ms':>14}" for n in names) + ("   speedup  identical" if len(names) > 1 else ""))
    for case in results[names[0]]:
        line = case.ljust(16) + "".join(f"{results[n][case][0] * 1e3:14.2f}" for n in names)
        if len(names) > 1:
            (tc, vc), (tp, vp) = results[names[0]][case], results[names[1]][case]
            line += f"{tp / tc:10.1f}x  {np.array_equal(vc, vp)!s:>9}"
        print(line)


if __name__ == "__main__":
    main()
