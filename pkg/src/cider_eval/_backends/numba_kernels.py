"""JIT-compiled scoring kernels.

Each function has a twin with the same name and signature in
``numpy_kernels``; the suite cross-checks them, so any change here needs a
matching change there. All kernels release the GIL and are cached on disk,
which keeps repeat process start-up cheap.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def clipped_sim(cids, cw, coff, cnorms, rids, rw, roff, rnorms, out):
    """Per-arity clipped TF-IDF cosine between two encoded captions.

    Segments hold interned n-gram ids sorted ascending, so each arity is a
    single two-pointer merge. Candidate weights are capped by the reference
    weight before the dot product; a zero norm on either side yields 0.
    """
    nseg = coff.shape[0] - 1
    for j in range(nseg):
        a, a_end = coff[j], coff[j + 1]
        b, b_end = roff[j], roff[j + 1]
        dot = 0.0
        while a < a_end and b < b_end:
            ka = cids[a]
            kb = rids[b]
            if ka == kb:
                wa = cw[a]
                wb = rw[b]
                if wa > wb:
                    wa = wb
                dot += wa * wb
                a += 1
                b += 1
            elif ka < kb:
                a += 1
            else:
                b += 1
        denom = cnorms[j] * rnorms[j]
        out[j] = dot / denom if denom > 0.0 else 0.0


@njit(cache=True, nogil=True)
def repetition_factor(cand_ids, cand_counts, ref_ids, ref_counts, cand_len):
    """Product over distinct candidate words of f(w)^(1/cand_len).

    f(w) = 1/(1+|freq_c-freq_s|) for words the reference shares, else
    1/freq_c. Inputs are the sorted unigram segments of both captions.
    Returns 1.0 for an empty candidate (empty product, exponent guard).
    """
    if cand_len <= 0:
        return 1.0
    b = 0
    b_end = ref_ids.shape[0]
    log_acc = 0.0
    for a in range(cand_ids.shape[0]):
        ka = cand_ids[a]
        while b < b_end and ref_ids[b] < ka:
            b += 1
        fc = cand_counts[a]
        if b < b_end and ref_ids[b] == ka:
            diff = fc - ref_counts[b]
            if diff < 0.0:
                diff = -diff
            log_acc -= np.log(1.0 + diff)
        else:
            log_acc -= np.log(fc)
    return np.exp(log_acc / cand_len)


@njit(cache=True, nogil=True)
def lcs_length(a, b):
    """Length of the longest common subsequence of two id sequences."""
    la = a.shape[0]
    lb = b.shape[0]
    if la == 0 or lb == 0:
        return 0
    prev = np.zeros(lb + 1, np.int64)
    cur = np.zeros(lb + 1, np.int64)
    for i in range(la):
        x = a[i]
        for j in range(lb):
            if x == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                up = prev[j + 1]
                left = cur[j]
                cur[j + 1] = up if up > left else left
        tmp = prev
        prev = cur
        cur = tmp
    return prev[lb]
