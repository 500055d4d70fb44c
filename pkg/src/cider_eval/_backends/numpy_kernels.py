"""Pure-numpy twins of the JIT kernels, for installs without a working JIT
and as an independent implementation the tests cross-check against.

Signatures and numerical behavior match ``numba_kernels`` exactly; only the
merge strategy differs (vectorized searchsorted joins instead of explicit
two-pointer loops).
"""
from __future__ import annotations

import numpy as np

NAME = "numpy"


def clipped_sim(cids, cw, coff, cnorms, rids, rw, roff, rnorms, out):
    nseg = coff.shape[0] - 1
    for j in range(nseg):
        ka = cids[coff[j]:coff[j + 1]]
        kb = rids[roff[j]:roff[j + 1]]
        denom = cnorms[j] * rnorms[j]
        if denom <= 0.0 or ka.shape[0] == 0 or kb.shape[0] == 0:
            out[j] = 0.0
            continue
        pos = np.searchsorted(kb, ka)
        pos_c = np.minimum(pos, kb.shape[0] - 1)
        hit = kb[pos_c] == ka
        if not hit.any():
            out[j] = 0.0
            continue
        wa = cw[coff[j]:coff[j + 1]][hit]
        wb = rw[roff[j]:roff[j + 1]][pos_c[hit]]
        out[j] = float(np.minimum(wa, wb) @ wb) / denom


def repetition_factor(cand_ids, cand_counts, ref_ids, ref_counts, cand_len):
    if cand_len <= 0:
        return 1.0
    if cand_ids.shape[0] == 0:
        return 1.0
    if ref_ids.shape[0] == 0:
        log_acc = -float(np.log(cand_counts).sum())
        return float(np.exp(log_acc / cand_len))
    pos = np.searchsorted(ref_ids, cand_ids)
    pos_c = np.minimum(pos, ref_ids.shape[0] - 1)
    hit = ref_ids[pos_c] == cand_ids
    shared = np.where(hit, ref_counts[pos_c], 0.0)
    factors = np.where(hit,
                       1.0 + np.abs(cand_counts - shared),
                       cand_counts)
    log_acc = -float(np.log(factors).sum())
    return float(np.exp(log_acc / cand_len))


def lcs_length(a, b):
    la = a.shape[0]
    lb = b.shape[0]
    if la == 0 or lb == 0:
        return 0
    prev = np.zeros(lb + 1, np.int64)
    for i in range(la):
        # row recurrence folded into a running max:
        # cur[j+1] = max(prev[j+1], max_{i<=j}(prev[i] + eq[i]))
        cur = prev.copy()
        cur[1:] = np.maximum(prev[1:], np.maximum.accumulate(prev[:-1] + (b == a[i])))
        prev = cur
    return int(prev[lb])
