"""Metric kernels: CIDEr-D, CIDEr-R, and the BLEU-4 / ROUGE-L baselines.

Both CIDEr variants score a candidate against each reference as a clipped
TF-IDF cosine per n-gram arity, times a penalty, averaged as
(10/m) * sum over references, then averaged over arities 1..max_n. They
differ only in the penalty: CIDEr-D uses a Gaussian in the length
difference (sigma 6), CIDEr-R blends a repetition penalty and a
reference-relative length penalty as pen_r^k_r * pen_l^(1-k_r).

Raw CIDEr scores live in [0, 10]; BLEU and ROUGE in [0, 1]. Reported
values are raw * report_scale (default 100), matching the usual table
presentation.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _backends, engine
from .corpus import DfTable, NGramVector
from .errors import InvalidArgumentError, InvalidReferenceError
from .textproc import TokenizedCaption

ROUGE_BETA = 1.2
BLEU_EPSILON = 1e-9


@dataclass(frozen=True)
class MetricConfig:
    """Shared metric knobs; defaults reproduce the published constants."""

    max_n: int = 4
    sigma: float = 6.0
    k_r: float = 0.8
    report_scale: float = 100.0

    def __post_init__(self):
        if self.max_n < 1:
            raise InvalidArgumentError(f"max_n must be >= 1, got {self.max_n}")
        if not self.sigma > 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.k_r <= 1.0:
            raise InvalidArgumentError(f"k_r must lie in [0, 1], got {self.k_r}")
        if not self.report_scale > 0:
            raise InvalidArgumentError(
                f"report_scale must be positive, got {self.report_scale}")


DEFAULT_CONFIG = MetricConfig()


@dataclass(frozen=True)
class PenaltyBreakdown:
    """Per-reference penalty factors; ``combined`` is the one the score used."""

    gaussian: float
    length_pen: float
    repetition_pen: float
    combined: float


@dataclass(frozen=True)
class SentenceScore:
    """One candidate's score: raw value, rescaled report value, per-arity
    contributions, and the per-reference penalty factors."""

    raw: float
    reported: float
    per_n: list
    penalties: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# kernels on explicit vectors / token lists
# ---------------------------------------------------------------------------


def clipped_similarity(cand_vec: NGramVector, ref_vec: NGramVector) -> float:
    """Cosine-style similarity with candidate weights capped elementwise by
    the reference weight; 0 when either vector has zero norm.
    """
    if cand_vec.arity != ref_vec.arity:
        raise InvalidArgumentError(
            f"arity mismatch: {cand_vec.arity} vs {ref_vec.arity}")
    norm_c = cand_vec.norm()
    norm_s = ref_vec.norm()
    if norm_c == 0.0 or norm_s == 0.0:
        return 0.0
    ref = ref_vec.entries
    dot = 0.0
    for key, wc in cand_vec.entries.items():
        ws = ref.get(key)
        if ws is not None:
            dot += min(wc, ws) * ws
    return dot / (norm_c * norm_s)


def gaussian_penalty(lc: int, ls: int, sigma: float = 6.0) -> float:
    """exp(-(lc-ls)^2 / (2 sigma^2))."""
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    delta = float(lc - ls)
    return math.exp(-(delta * delta) / (2.0 * sigma * sigma))


def length_penalty(lc: int, ls: int) -> float:
    """exp(-(lc-ls)^2 / ls^2); forgiving for long references."""
    if ls < 1:
        raise InvalidReferenceError("length penalty needs a non-empty reference")
    delta = float(lc - ls)
    return math.exp(-(delta * delta) / float(ls * ls))


def repetition_penalty(c: TokenizedCaption, s: TokenizedCaption) -> float:
    """Geometric product over distinct candidate words of factors that
    shrink as the word's frequency diverges from the reference: for shared
    words 1/(1+|freq_c - freq_s|), for candidate-only words 1/freq_c, each
    raised to 1/len(c). An empty candidate yields 1 (empty product).
    """
    if not c:
        return 1.0
    index: dict = {}
    cand = Counter(c)
    ref = Counter(s)
    for tok in cand:
        index.setdefault(tok, len(index))
    by_id = {index[t]: float(n) for t, n in cand.items()}
    cand_ids = np.array(sorted(by_id), np.int64)
    cand_counts = np.array([by_id[i] for i in cand_ids], np.float64)
    ref_pairs = sorted((index[t], float(n)) for t, n in ref.items() if t in index)
    ref_ids = np.array([i for i, _ in ref_pairs], np.int64)
    ref_counts = np.array([n for _, n in ref_pairs], np.float64)
    return float(_backends.active().repetition_factor(
        cand_ids, cand_counts, ref_ids, ref_counts, len(c)))


# ---------------------------------------------------------------------------
# CIDEr variants
# ---------------------------------------------------------------------------


def _check_cider_inputs(refs, table: DfTable):
    if not refs:
        raise InvalidArgumentError("CIDEr needs at least one reference")
    for ref in refs:
        if len(ref) == 0:
            raise InvalidReferenceError("CIDEr cannot score against an "
                                        "empty reference sentence")
    if table is None:
        raise InvalidArgumentError("CIDEr needs a built DF table")


def _assemble(per_n: np.ndarray, penalties, combined, cfg: MetricConfig) -> SentenceScore:
    raw = float(per_n.mean())
    return SentenceScore(
        raw=raw,
        reported=raw * cfg.report_scale,
        per_n=[float(v) for v in per_n],
        penalties=[PenaltyBreakdown(g, l, r, c)
                   for (g, l, r), c in zip(penalties, combined)],
    )


def cider_d(c: TokenizedCaption, refs, table: DfTable,
            cfg: MetricConfig = DEFAULT_CONFIG) -> SentenceScore:
    """Clipped TF-IDF similarity with the Gaussian length penalty."""
    _check_cider_inputs(refs, table)
    cand = engine.encode(table, c, cfg.max_n)
    encs = [engine.encode(table, r, cfg.max_n) for r in refs]
    sims, penalties = engine.pair_components(cand, encs, cfg.sigma, cfg.max_n)
    per_n = engine.combine_gaussian(sims, penalties)
    return _assemble(per_n, penalties, [g for g, _, _ in penalties], cfg)


def cider_r(c: TokenizedCaption, refs, table: DfTable,
            cfg: MetricConfig = DEFAULT_CONFIG) -> SentenceScore:
    """Clipped TF-IDF similarity with the repetition/length penalty blend."""
    _check_cider_inputs(refs, table)
    cand = engine.encode(table, c, cfg.max_n)
    encs = [engine.encode(table, r, cfg.max_n) for r in refs]
    sims, penalties = engine.pair_components(cand, encs, cfg.sigma, cfg.max_n)
    per_n = engine.combine_blend(sims, penalties, cfg.k_r)
    combined = [r ** cfg.k_r * l ** (1.0 - cfg.k_r) for _, l, r in penalties]
    return _assemble(per_n, penalties, combined, cfg)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def _closest_ref_length(lc: int, refs) -> int:
    # ties resolve to the shorter reference
    return min((len(r) for r in refs), key=lambda rl: (abs(rl - lc), rl))


def bleu4(c: TokenizedCaption, refs) -> float:
    """Sentence-level BLEU with arities 1..4, counts clipped by the maximum
    reference count, closest-reference brevity penalty, and zero precisions
    floored at 1e-9 so a single missing arity does not null the score.
    """
    if not refs:
        raise InvalidArgumentError("BLEU needs at least one reference")
    if not c:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        num, den = _bleu_counts(c, refs, n)
        p = num / den if den else 0.0
        if p == 0.0:
            p = BLEU_EPSILON
        log_sum += math.log(p)
    brevity = math.exp(min(0.0, 1.0 - _closest_ref_length(len(c), refs) / len(c)))
    return brevity * math.exp(log_sum / 4.0)


def _bleu_counts(c: TokenizedCaption, refs, n: int):
    cand = Counter(tuple(c[i:i + n]) for i in range(len(c) - n + 1))
    if not cand:
        return 0, 0
    best: Counter = Counter()
    for ref in refs:
        for key, cnt in Counter(tuple(ref[i:i + n])
                                for i in range(len(ref) - n + 1)).items():
            if cnt > best[key]:
                best[key] = cnt
    num = sum(min(cnt, best[key]) for key, cnt in cand.items())
    return num, len(c) - n + 1


def bleu4_corpus(items) -> float:
    """Corpus-level BLEU over (candidate, references) pairs: numerators and
    denominators are summed across the corpus before the geometric mean,
    with no smoothing, and the brevity penalty uses total lengths.
    """
    items = list(items)
    if not items:
        raise InvalidArgumentError("corpus BLEU needs at least one pair")
    nums = [0, 0, 0, 0]
    dens = [0, 0, 0, 0]
    cand_total = 0
    ref_total = 0
    for c, refs in items:
        if not refs:
            raise InvalidArgumentError("BLEU needs at least one reference")
        if not c:
            continue
        cand_total += len(c)
        ref_total += _closest_ref_length(len(c), refs)
        for n in range(1, 5):
            num, den = _bleu_counts(c, refs, n)
            nums[n - 1] += num
            dens[n - 1] += den
    if cand_total == 0 or any(num == 0 for num in nums):
        return 0.0
    log_sum = sum(math.log(num / den) for num, den in zip(nums, dens))
    brevity = math.exp(min(0.0, 1.0 - ref_total / cand_total))
    return brevity * math.exp(log_sum / 4.0)


def rouge_l(c: TokenizedCaption, refs) -> float:
    """Longest-common-subsequence F-measure (beta 1.2), maximized over the
    references; 0 for an empty candidate or when nothing aligns.
    """
    if not refs:
        raise InvalidArgumentError("ROUGE needs at least one reference")
    if not c:
        return 0.0
    index: dict = {}
    for tok in c:
        index.setdefault(tok, len(index))
    c_ids = np.array([index[t] for t in c], np.int64)
    lcs_length = _backends.active().lcs_length
    beta_sq = ROUGE_BETA * ROUGE_BETA
    best = 0.0
    for ref in refs:
        if not ref:
            continue
        r_ids = np.array([index.get(t, -1) for t in ref], np.int64)
        lcs = int(lcs_length(c_ids, r_ids))
        if lcs == 0:
            continue
        p = lcs / len(c)
        r = lcs / len(ref)
        f = (1.0 + beta_sq) * p * r / (r + beta_sq * p)
        if f > best:
            best = f
    return best


# ---------------------------------------------------------------------------
# name registry used by the harness and CLI
# ---------------------------------------------------------------------------

METRIC_NAMES = ("cider-r", "cider-d", "bleu-4", "rouge-l")


def resolve_metric(name: str):
    """Uniform raw-score callable (c, refs, table, cfg) -> float for a
    metric selector string.
    """
    if name == "cider-r":
        return lambda c, refs, table, cfg: cider_r(c, refs, table, cfg).raw
    if name == "cider-d":
        return lambda c, refs, table, cfg: cider_d(c, refs, table, cfg).raw
    if name == "bleu-4":
        return lambda c, refs, table, cfg: bleu4(c, refs)
    if name == "rouge-l":
        return lambda c, refs, table, cfg: rouge_l(c, refs)
    raise InvalidArgumentError(
        f"unknown metric {name!r}; choose from {', '.join(METRIC_NAMES)}")
