#!/usr/bin/env python3
"""Side-by-side timing of the two kernel backends.

Runs each hot kernel (clipped cosine similarity, repetition factor, longest
common subsequence) on realistic encoded captions, plus one end-to-end batch
scoring pass, under both the JIT backend and its pure-numpy twin, and prints
a comparison table. JIT compilation happens during warmup and is excluded
from the timings.

    python3 benchmarks/bench_backends.py [--images N] [--repeats R]
"""
from __future__ import annotations

import argparse
import random
import time

import numpy as np

from cider_eval import BatchItem, EvalBatch, backends, harness
from cider_eval import engine
from cider_eval.corpus import build_df
from cider_eval.metrics import DEFAULT_CONFIG


def make_batch(num_images: int, seed: int = 99) -> EvalBatch:
    """Zipf-distributed vocabulary, ~38-token references, candidates that
    paraphrase their reference with a few substitutions and one stutter —
    the same shape as real captioning output, big enough to exercise the
    merge kernels.
    """
    rng = np.random.default_rng(seed)
    pyrng = random.Random(seed)
    vocab = np.array([f"w{i}" for i in range(30_000)])
    weights = 1.0 / np.arange(1, vocab.size + 1)
    weights /= weights.sum()
    items = []
    for i in range(num_images):
        n = int(rng.integers(30, 47))
        ref = list(vocab[rng.choice(vocab.size, size=n, p=weights)])
        cand = list(ref)
        for _ in range(3):
            cand[pyrng.randrange(len(cand))] = vocab[pyrng.randrange(vocab.size)]
        stutter = pyrng.randrange(len(cand))
        cand.insert(stutter, cand[stutter])
        items.append(BatchItem(image_id=str(i), candidate=" ".join(cand),
                               references=[" ".join(ref)]))
    return EvalBatch(items=items)


def encode_pairs(batch: EvalBatch, max_n: int = 4):
    cands = [item.candidate.split() for item in batch.items]
    refs = [[r.split() for r in item.references] for item in batch.items]
    table = build_df(refs, max_n)
    return ([engine.encode(table, c, max_n) for c in cands],
            [engine.encode(table, rs[0], max_n) for rs in refs])


def bench_clipped_sim(kernels, cand_encs, ref_encs, repeats: int) -> float:
    out = np.empty(cand_encs[0].offsets.shape[0] - 1)
    start = time.perf_counter()
    for _ in range(repeats):
        for c, r in zip(cand_encs, ref_encs):
            kernels.clipped_sim(c.ids, c.weights, c.offsets, c.norms,
                                r.ids, r.weights, r.offsets, r.norms, out)
    return time.perf_counter() - start


def bench_repetition(kernels, cand_encs, ref_encs, repeats: int) -> float:
    args = []
    for c, r in zip(cand_encs, ref_encs):
        ce = c.offsets[1]
        re_ = r.offsets[1]
        args.append((c.ids[:ce], c.counts[:ce], r.ids[:re_], r.counts[:re_],
                     c.length))
    start = time.perf_counter()
    for _ in range(repeats):
        for cid, ccnt, rid, rcnt, clen in args:
            kernels.repetition_factor(cid, ccnt, rid, rcnt, clen)
    return time.perf_counter() - start


def bench_lcs(kernels, batch: EvalBatch, repeats: int) -> float:
    ids: dict = {}
    pairs = []
    for item in batch.items:
        enc = lambda toks: np.fromiter(
            (ids.setdefault(t, len(ids)) for t in toks), np.int64)
        pairs.append((enc(item.candidate.split()),
                      enc(item.references[0].split())))
    start = time.perf_counter()
    for _ in range(repeats):
        for a, b in pairs:
            kernels.lcs_length(a, b)
    return time.perf_counter() - start


def bench_end_to_end(batch: EvalBatch) -> float:
    start = time.perf_counter()
    harness.score_batch(batch, metric_names=("cider-r", "cider-d"),
                        cfg=DEFAULT_CONFIG)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--images", type=int, default=2000,
                        help="synthetic batch size (default 2000)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="kernel repetitions over the batch (default 5)")
    args = parser.parse_args()

    print(f"building a {args.images}-image synthetic batch ...")
    batch = make_batch(args.images)
    cand_encs, ref_encs = encode_pairs(batch)
    pair_count = args.images * args.repeats

    rows = []
    for name in ("numba", "numpy"):
        try:
            kernels = backends.use(name)
        except ImportError as exc:
            print(f"skipping backend {name!r}: {exc}")
            continue
        # warmup: triggers JIT compilation and touches every code path once
        bench_clipped_sim(kernels, cand_encs[:8], ref_encs[:8], 1)
        bench_repetition(kernels, cand_encs[:8], ref_encs[:8], 1)
        bench_lcs(kernels, EvalBatch(items=batch.items[:8]), 1)
        bench_end_to_end(EvalBatch(items=batch.items[:8]))

        rows.append((name, {
            "clipped_sim": bench_clipped_sim(kernels, cand_encs, ref_encs,
                                             args.repeats) / pair_count,
            "repetition_factor": bench_repetition(kernels, cand_encs, ref_encs,
                                                  args.repeats) / pair_count,
            "lcs_length": bench_lcs(kernels, batch,
                                    args.repeats) / pair_count,
            "score_batch": bench_end_to_end(batch),
        }))

    print()
    header = f"{'benchmark':<30}" + "".join(f"{name:>14}" for name, _ in rows)
    if len(rows) == 2:
        header += " ratio"
    print(header)
    print("-" * len(header))
    for key, unit, scale in (("clipped_sim", "us/pair", 1e6),
                             ("repetition_factor", "us/pair", 1e6),
                             ("lcs_length", "us/pair", 1e6),
                             ("score_batch", "s/batch", 1.0)):
        line = f"{key + ' (' + unit + ')':<30}"
        vals = [timings[key] for _, timings in rows]
        line += "".join(f"{v * scale:>14.3f}" for v in vals)
        if len(vals) == 2 and vals[0] > 0:
            line += f"{vals[1] / vals[0]:>5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
