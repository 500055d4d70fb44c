"""Encoding machinery that turns token lists into the sorted integer
arrays the kernel backends consume.

Tokens get small integer ids; an n-gram becomes a single integer by
packing its token ids base 2**20 (ids start at 1, so packed ranges never
collide across arities); each packed key is then interned to a dense id so
document frequencies and IDF weights live in flat numpy arrays instead of
dicts keyed by big integers. Encoded captions carry one sorted id segment
per arity, which makes every similarity a linear merge.
"""
from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _backends
from .errors import VocabularyOverflowError

BASE = 1 << 20  # max distinct tokens per key space; packing base


class KeySpace:
    """Grow-only token vocabulary plus packed-key interner.

    Growth is guarded by a lock so concurrent sentence-level scoring stays
    safe; batch scoring encodes serially and only then fans out to threads.
    """

    def __init__(self):
        self._vocab: dict = {}
        self._itos: list = [None]  # id 0 is reserved for "absent"
        self._interner: dict = {}
        self.lock = threading.Lock()

    @property
    def num_tokens(self) -> int:
        return len(self._vocab)

    @property
    def num_keys(self) -> int:
        return len(self._interner)

    def _grow_token_ids(self, tokens) -> list:
        vocab = self._vocab
        itos = self._itos
        ids = []
        for tok in tokens:
            i = vocab.get(tok)
            if i is None:
                i = len(itos)
                if i >= BASE:
                    raise VocabularyOverflowError(
                        f"more than {BASE - 1} distinct tokens in one key space")
                vocab[tok] = i
                itos.append(tok)
            ids.append(i)
        return ids

    def count_ngrams(self, tokens, max_n: int) -> list:
        """Count n-grams for arities 1..max_n, returning one dict per arity
        keyed by dense interned id. Grows the vocabulary and interner;
        callers must hold ``lock``.
        """
        ids = self._grow_token_ids(tokens)
        interner = self._interner
        per_n = []
        keys = ids
        for n in range(1, max_n + 1):
            if n > 1:
                keys = [k * BASE + t for k, t in zip(keys, ids[n - 1:])]
            counts = Counter(keys)
            per_n.append({interner.setdefault(k, len(interner)): v
                          for k, v in counts.items()})
        return per_n

    # --- tuple-facing helpers (lookup only, no growth) ---

    def pack(self, key) -> int | None:
        """Packed integer for a token tuple, or None if any token is unknown."""
        packed = 0
        vocab = self._vocab
        for tok in key:
            i = vocab.get(tok)
            if i is None:
                return None
            packed = packed * BASE + i
        return packed if key else None

    def dense_id(self, key) -> int | None:
        packed = self.pack(key)
        if packed is None:
            return None
        return self._interner.get(packed)

    def unpack(self, packed: int) -> tuple:
        itos = self._itos
        out = []
        while packed:
            packed, i = divmod(packed, BASE)
            out.append(itos[i])
        return tuple(reversed(out))


@dataclass
class EncodedCaption:
    """A caption as per-arity sorted sparse vectors.

    ``ids`` concatenates one ascending-sorted segment of interned n-gram
    ids per arity; ``offsets`` (length max_n+1) delimits the segments;
    ``counts`` and ``weights`` (count x IDF) align with ``ids``; ``norms``
    holds each segment's Euclidean weight norm.
    """

    ids: np.ndarray
    counts: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    norms: np.ndarray
    length: int

    def segment(self, arity_index: int):
        lo, hi = self.offsets[arity_index], self.offsets[arity_index + 1]
        return self.ids[lo:hi], self.counts[lo:hi], self.weights[lo:hi]


def encode(table, tokens, max_n: int) -> EncodedCaption:
    """Encode a token list against a built DF table (its key space grows to
    cover unseen tokens; unseen keys get the maximum IDF, log num_images).
    """
    keys: KeySpace = table.keyspace
    with keys.lock:
        per_n = keys.count_ngrams(tokens, max_n)
    return finalize(table, per_n, len(tokens))


def finalize(table, per_n: list, length: int) -> EncodedCaption:
    """Second encoding stage: attach IDF weights and norms to already
    counted n-grams. Splitting this from the counting lets batch scoring
    count every caption exactly once, before the DF table exists.
    """
    max_n = len(per_n)
    idf_arr = table.idf_array
    known = idf_arr.shape[0]
    log_n = table.log_num_images

    seg_ids, seg_counts, seg_weights = [], [], []
    offsets = np.zeros(max_n + 1, np.int64)
    norms = np.zeros(max_n, np.float64)
    for j, counts in enumerate(per_n):
        k = len(counts)
        ids = np.fromiter(counts.keys(), np.int64, k)
        cnt = np.fromiter(counts.values(), np.float64, k)
        order = np.argsort(ids)
        ids = ids[order]
        cnt = cnt[order]
        if k:
            # ids beyond the frozen DF arrays are unseen: df floor of 1
            idf = np.where(ids < known, idf_arr[np.minimum(ids, known - 1)], log_n) \
                if known else np.full(k, log_n)
            w = cnt * idf
        else:
            w = cnt
        norms[j] = math.sqrt(float(w @ w))
        seg_ids.append(ids)
        seg_counts.append(cnt)
        seg_weights.append(w)
        offsets[j + 1] = offsets[j] + k
    return EncodedCaption(
        ids=np.concatenate(seg_ids) if seg_ids else np.zeros(0, np.int64),
        counts=np.concatenate(seg_counts) if seg_counts else np.zeros(0),
        weights=np.concatenate(seg_weights) if seg_weights else np.zeros(0),
        offsets=offsets,
        norms=norms,
        length=length,
    )


def pair_components(cand: EncodedCaption, refs: list, sigma: float, max_n: int):
    """Everything both CIDEr variants need for one candidate against its
    reference set: per-reference similarity rows and penalty triples
    (gaussian, length, repetition).
    """
    backend = _backends.active()
    m = len(refs)
    sims = np.zeros((m, max_n), np.float64)
    penalties = []
    c_uni_ids, c_uni_counts, _ = cand.segment(0)
    lc = cand.length
    inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
    for j, ref in enumerate(refs):
        backend.clipped_sim(cand.ids, cand.weights, cand.offsets, cand.norms,
                            ref.ids, ref.weights, ref.offsets, ref.norms,
                            sims[j])
        r_uni_ids, r_uni_counts, _ = ref.segment(0)
        delta_sq = float(lc - ref.length) ** 2
        gauss = math.exp(-delta_sq * inv_two_sigma_sq)
        pen_l = math.exp(-delta_sq / float(ref.length * ref.length))
        pen_r = float(backend.repetition_factor(
            c_uni_ids, c_uni_counts, r_uni_ids, r_uni_counts, lc))
        penalties.append((gauss, pen_l, pen_r))
    return sims, penalties


def combine_gaussian(sims: np.ndarray, penalties: list) -> np.ndarray:
    """Per-arity scores with the Gaussian length penalty: (10/m) sum_j sim * pen."""
    m = len(penalties)
    acc = np.zeros(sims.shape[1], np.float64)
    for j, (gauss, _, _) in enumerate(penalties):
        acc += sims[j] * gauss
    return acc * (10.0 / m)


def combine_blend(sims: np.ndarray, penalties: list, k_r: float) -> np.ndarray:
    """Per-arity scores with the repetition/length blend pen_r^k_r * pen_l^(1-k_r)."""
    m = len(penalties)
    acc = np.zeros(sims.shape[1], np.float64)
    for j, (_, pen_l, pen_r) in enumerate(penalties):
        acc += sims[j] * (pen_r ** k_r * pen_l ** (1.0 - k_r))
    return acc * (10.0 / m)
