"""Experimental protocols on top of the metric kernels: batch scoring with
per-image breakdowns, triplet human-correlation accuracy, k_r sweeps, and
corpus statistics.

Everything here is deterministic: scoring work may fan out over a thread
pool, but captions are encoded serially and results aggregate in input
order, so reports are byte-identical at any parallelism level and any
randomness flows from explicit integer seeds.
"""
from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import engine, metrics
from .corpus import DfTable, build_df, build_df_from_counts
from .errors import InputFormatError, InvalidArgumentError
from .metrics import DEFAULT_CONFIG, MetricConfig, PenaltyBreakdown, resolve_metric
from .textproc import DEFAULT_OPTIONS, RawCaption, TokenizerOptions, tokenize

CIDER_METRICS = ("cider-r", "cider-d")


@dataclass(frozen=True)
class BatchItem:
    image_id: str
    candidate: RawCaption
    references: tuple

    def __post_init__(self):
        if not self.references:
            raise InvalidArgumentError(
                f"image {self.image_id!r} has an empty reference list")


@dataclass(frozen=True)
class EvalBatch:
    """One candidate plus references per image; image ids are unique."""

    items: tuple

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.image_id in seen:
                raise InvalidArgumentError(f"duplicate image id {item.image_id!r}")
            seen.add(item.image_id)

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class TripletRecord:
    """A reference pool and two candidates, with the human majority vote
    ("B" or "C", never a tie)."""

    references: tuple
    cand_b: RawCaption
    cand_c: RawCaption
    human_vote: str

    def __post_init__(self):
        if not self.references:
            raise InvalidArgumentError("a triplet needs at least one reference")
        if self.human_vote not in ("B", "C"):
            raise InvalidArgumentError(
                f"human_vote must be 'B' or 'C', got {self.human_vote!r}")


@dataclass(frozen=True)
class AccuracyReport:
    metric_name: str
    num_refs_used: int
    accuracy: float
    num_triplets: int
    num_ties: int
    num_short: int = 0  # triplets that had fewer references than requested


@dataclass(frozen=True)
class CorpusStats:
    dataset_size: int
    vocabulary_size: int
    avg_sentence_length: float
    std_sentence_length: float


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------


def _parse_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"malformed JSON ({exc.msg})",
                                       str(path), lineno) from None
            if not isinstance(obj, dict):
                raise InputFormatError("expected a JSON object", str(path), lineno)
            yield lineno, obj


def _string_list(obj, key, path, lineno, required=True):
    value = obj.get(key)
    if value is None:
        if required:
            raise InputFormatError(f"missing {key!r}", str(path), lineno)
        return None
    if not isinstance(value, list) or not value \
            or not all(isinstance(v, str) for v in value):
        raise InputFormatError(f"{key!r} must be a non-empty list of strings",
                               str(path), lineno)
    return tuple(value)


def _string(obj, key, path, lineno):
    value = obj.get(key)
    if not isinstance(value, str):
        raise InputFormatError(f"missing or non-string {key!r}", str(path), lineno)
    return value


def load_batch_jsonl(path, refs_path=None) -> EvalBatch:
    """Read one image per line: {"image_id", "candidate", "references"}.

    With ``refs_path``, references come from that file instead (matched by
    image_id), and the batch lines may omit theirs.
    """
    refs_by_id = None
    if refs_path is not None:
        refs_by_id = {}
        for lineno, obj in _parse_jsonl(refs_path):
            image_id = _string(obj, "image_id", refs_path, lineno)
            refs_by_id[image_id] = _string_list(obj, "references", refs_path, lineno)

    items = []
    seen = set()
    for lineno, obj in _parse_jsonl(path):
        image_id = _string(obj, "image_id", path, lineno)
        if image_id in seen:
            raise InputFormatError(f"duplicate image id {image_id!r}",
                                   str(path), lineno)
        seen.add(image_id)
        candidate = _string(obj, "candidate", path, lineno)
        if refs_by_id is not None:
            references = refs_by_id.get(image_id)
            if references is None:
                raise InputFormatError(
                    f"no references for image id {image_id!r} in {refs_path}",
                    str(path), lineno)
        else:
            references = _string_list(obj, "references", path, lineno)
        items.append(BatchItem(image_id, candidate, references))
    if not items:
        raise InputFormatError("no records found", str(path))
    return EvalBatch(tuple(items))


def load_reference_sets_jsonl(path) -> list:
    """References only (for DF building): any records with a "references"
    list; candidates and ids are ignored.
    """
    sets = []
    for lineno, obj in _parse_jsonl(path):
        sets.append(_string_list(obj, "references", path, lineno))
    if not sets:
        raise InputFormatError("no records found", str(path))
    return sets


def load_triplets_jsonl(path) -> list:
    """Read one triplet per line: {"references", "b", "c", "vote"}."""
    triplets = []
    for lineno, obj in _parse_jsonl(path):
        vote = _string(obj, "vote", path, lineno)
        if vote not in ("B", "C"):
            raise InputFormatError(f"vote must be 'B' or 'C', got {vote!r}",
                                   str(path), lineno)
        triplets.append(TripletRecord(
            references=_string_list(obj, "references", path, lineno),
            cand_b=_string(obj, "b", path, lineno),
            cand_c=_string(obj, "c", path, lineno),
            human_vote=vote,
        ))
    if not triplets:
        raise InputFormatError("no records found", str(path))
    return triplets


def load_captions(path) -> list:
    """Captions for corpus statistics: a .jsonl file contributes every
    record's references; any other file is read as one caption per
    non-empty line.
    """
    if str(path).endswith(".jsonl"):
        captions = []
        for lineno, obj in _parse_jsonl(path):
            captions.extend(_string_list(obj, "references", path, lineno))
        return captions
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def _run_indexed(worker, count: int, parallelism: int) -> list:
    """Apply worker(i) for i in range(count), results in index order."""
    if parallelism <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(worker, range(count)))


def _penalty_dict(p: PenaltyBreakdown) -> dict:
    return {"gaussian": p.gaussian, "length_pen": p.length_pen,
            "repetition_pen": p.repetition_pen, "combined": p.combined}


def score_batch(batch: EvalBatch, metric_names=CIDER_METRICS,
                cfg: MetricConfig = DEFAULT_CONFIG, df_table: DfTable = None,
                parallelism: int = 1, include_penalties: bool = False,
                tokenizer: TokenizerOptions = DEFAULT_OPTIONS) -> dict:
    """Score every image and return a JSON-ready report.

    Without ``df_table`` the DF model is built from the batch's own
    references. The report holds per-image raw and reported values, corpus
    means (arithmetic over images), the corpus-aggregated BLEU when BLEU is
    requested, and the DF provenance.
    """
    if not batch.items:
        raise InvalidArgumentError("cannot score an empty batch")
    if not metric_names:
        raise InvalidArgumentError("no metrics selected")
    for name in metric_names:
        resolve_metric(name)  # fail fast on unknown selectors

    cands = [tokenize(item.candidate, tokenizer) for item in batch.items]
    refs = [[tokenize(r, tokenizer) for r in item.references]
            for item in batch.items]
    for item, ref_tokens in zip(batch.items, refs):
        if any(len(r) == 0 for r in ref_tokens):
            raise InvalidArgumentError(
                f"image {item.image_id!r} has a reference with no tokens")

    want_cider = [n for n in metric_names if n in CIDER_METRICS]
    if df_table is not None:
        df_info = {"source": "file", "num_images": df_table.num_images}
        if want_cider:
            cand_encs = [engine.encode(df_table, c, cfg.max_n) for c in cands]
            ref_encs = [[engine.encode(df_table, r, cfg.max_n) for r in rs]
                        for rs in refs]
    else:
        # Self-DF: count every caption exactly once, derive the DF model from
        # the reference counts, then attach IDF weights to the counts already
        # in hand instead of re-walking each caption against the new table.
        df_info = {"source": "self", "num_images": len(batch.items)}
        if want_cider:
            keys = engine.KeySpace()
            with keys.lock:
                counted_cands = [keys.count_ngrams(c, cfg.max_n) for c in cands]
                counted_refs = [[keys.count_ngrams(r, cfg.max_n) for r in rs]
                                for rs in refs]
            table = build_df_from_counts(keys, counted_refs, cfg.max_n)
            cand_encs = [engine.finalize(table, per_n, len(c))
                         for per_n, c in zip(counted_cands, cands)]
            ref_encs = [[engine.finalize(table, per_n, len(r))
                         for per_n, r in zip(per_image, rs)]
                        for per_image, rs in zip(counted_refs, refs)]

    def worker(i: int) -> dict:
        scores = {}
        if want_cider:
            sims, pens = engine.pair_components(
                cand_encs[i], ref_encs[i], cfg.sigma, cfg.max_n)
            for name in want_cider:
                if name == "cider-d":
                    per_n = engine.combine_gaussian(sims, pens)
                    combined = [g for g, _, _ in pens]
                else:
                    per_n = engine.combine_blend(sims, pens, cfg.k_r)
                    combined = [r ** cfg.k_r * l ** (1.0 - cfg.k_r)
                                for _, l, r in pens]
                raw = float(per_n.mean())
                entry = {"raw": raw, "reported": raw * cfg.report_scale,
                         "per_n": [float(v) for v in per_n]}
                if include_penalties:
                    entry["penalties"] = [
                        _penalty_dict(PenaltyBreakdown(g, l, r, c))
                        for (g, l, r), c in zip(pens, combined)]
                scores[name] = entry
        if "bleu-4" in metric_names:
            raw = metrics.bleu4(cands[i], refs[i])
            scores["bleu-4"] = {"raw": raw, "reported": raw * cfg.report_scale}
        if "rouge-l" in metric_names:
            raw = metrics.rouge_l(cands[i], refs[i])
            scores["rouge-l"] = {"raw": raw, "reported": raw * cfg.report_scale}
        return scores

    per_image = _run_indexed(worker, len(batch.items), parallelism)

    report = {
        "config": {"max_n": cfg.max_n, "sigma": cfg.sigma, "k_r": cfg.k_r,
                   "report_scale": cfg.report_scale},
        "df": df_info,
        "images": [{"image_id": item.image_id, "scores": scores}
                   for item, scores in zip(batch.items, per_image)],
        "corpus_mean": {},
    }
    for name in metric_names:
        mean = sum(scores[name]["raw"] for scores in per_image) / len(per_image)
        report["corpus_mean"][name] = {"raw": mean,
                                       "reported": mean * cfg.report_scale}
    if "bleu-4" in metric_names:
        corpus = metrics.bleu4_corpus(zip(cands, refs))
        report["bleu_4_corpus"] = {"raw": corpus,
                                   "reported": corpus * cfg.report_scale}
    return report


def subsample_refs(refs, k: int, seed: int) -> list:
    """Seeded shuffle, first min(k, len) kept; deterministic per (refs, k, seed)."""
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    pool = list(refs)
    random.Random(seed).shuffle(pool)
    return pool[:min(k, len(pool))]


def _triplet_seed(seed: int, index: int) -> int:
    # one stream per triplet, all flowing from the run seed; string seeding
    # is stable across platforms
    return random.Random(f"{seed}:{index}").getrandbits(63)


def triplet_accuracy(triplets, metric="cider-r", cfg: MetricConfig = DEFAULT_CONFIG,
                     k: int = 1, seed: int = 0, parallelism: int = 1,
                     tokenizer: TokenizerOptions = DEFAULT_OPTIONS) -> AccuracyReport:
    """Fraction of triplets whose human-preferred candidate gets the higher
    score, with k references subsampled per triplet and the DF model built
    from the union of all sampled references (one image per triplet).

    Ties count as incorrect and are tallied separately. ``metric`` is a
    selector name or a callable (cand_tokens, ref_tokens, table, cfg) ->
    raw score.
    """
    if not triplets:
        raise InvalidArgumentError("cannot evaluate an empty triplet list")
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    if callable(metric):
        metric_fn = metric
        metric_name = getattr(metric, "__name__", "custom")
    else:
        metric_fn = resolve_metric(metric)
        metric_name = metric

    sampled = [subsample_refs(t.references, k, _triplet_seed(seed, i))
               for i, t in enumerate(triplets)]
    num_short = sum(len(t.references) < k for t in triplets)
    ref_tokens = [[tokenize(r, tokenizer) for r in refs] for refs in sampled]
    b_tokens = [tokenize(t.cand_b, tokenizer) for t in triplets]
    c_tokens = [tokenize(t.cand_c, tokenizer) for t in triplets]
    table = build_df(ref_tokens, cfg.max_n)

    def worker(i: int):
        score_b = metric_fn(b_tokens[i], ref_tokens[i], table, cfg)
        score_c = metric_fn(c_tokens[i], ref_tokens[i], table, cfg)
        return score_b, score_c

    correct = ties = 0
    for t, (score_b, score_c) in zip(triplets,
                                     _run_indexed(worker, len(triplets), parallelism)):
        winner, loser = ((score_b, score_c) if t.human_vote == "B"
                         else (score_c, score_b))
        if winner > loser:
            correct += 1
        elif winner == loser:
            ties += 1
    return AccuracyReport(
        metric_name=metric_name,
        num_refs_used=k,
        accuracy=correct / len(triplets),
        num_triplets=len(triplets),
        num_ties=ties,
        num_short=num_short,
    )


def sweep_kr(data, grid, cfg: MetricConfig = DEFAULT_CONFIG, k: int = 1,
             seed: int = 0, parallelism: int = 1) -> list:
    """Evaluate a k_r grid: triplet accuracy when ``data`` is a triplet
    list, corpus-mean raw score on an :class:`EvalBatch` otherwise.
    Returns one {"k_r", "objective"} row per grid value, in grid order.
    """
    grid = list(grid)
    if not grid:
        raise InvalidArgumentError("k_r grid must not be empty")
    for value in grid:
        if not 0.0 <= value <= 1.0:
            raise InvalidArgumentError(f"k_r grid value {value} outside [0, 1]")

    rows = []
    for value in grid:
        run_cfg = MetricConfig(max_n=cfg.max_n, sigma=cfg.sigma, k_r=value,
                               report_scale=cfg.report_scale)
        if isinstance(data, EvalBatch):
            report = score_batch(data, ("cider-r",), run_cfg,
                                 parallelism=parallelism)
            objective = report["corpus_mean"]["cider-r"]["raw"]
        else:
            objective = triplet_accuracy(data, "cider-r", run_cfg, k=k,
                                         seed=seed, parallelism=parallelism).accuracy
        rows.append({"k_r": value, "objective": objective})
    return rows


def corpus_stats(captions, tokenizer: TokenizerOptions = DEFAULT_OPTIONS) -> CorpusStats:
    """Size, distinct-token vocabulary, and mean/population-std of caption
    lengths after tokenization.
    """
    captions = list(captions)
    if not captions:
        raise InvalidArgumentError("cannot compute statistics of an empty corpus")
    vocabulary = set()
    lengths = []
    for caption in captions:
        tokens = tokenize(caption, tokenizer)
        vocabulary.update(tokens)
        lengths.append(len(tokens))
    mean = sum(lengths) / len(lengths)
    variance = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    return CorpusStats(
        dataset_size=len(captions),
        vocabulary_size=len(vocabulary),
        avg_sentence_length=mean,
        std_sentence_length=math.sqrt(variance),
    )
