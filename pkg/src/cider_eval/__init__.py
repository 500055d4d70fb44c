"""Caption evaluation toolkit: consensus-based metrics with a
repetition-aware variant, n-gram statistics, and human-correlation
protocols.
"""

__version__ = "0.1.0"

from . import _backends as backends  # noqa: E402
from .corpus import (  # noqa: E402
    DfTable,
    NGramVector,
    build_df,
    extract_ngrams,
    idf,
    tfidf_vector,
)
from .errors import (  # noqa: E402
    CiderEvalError,
    InputFormatError,
    InvalidArgumentError,
    InvalidReferenceError,
    VocabularyOverflowError,
)
from .harness import (  # noqa: E402
    AccuracyReport,
    BatchItem,
    CorpusStats,
    EvalBatch,
    TripletRecord,
    corpus_stats,
    load_batch_jsonl,
    load_captions,
    load_reference_sets_jsonl,
    load_triplets_jsonl,
    score_batch,
    subsample_refs,
    sweep_kr,
    triplet_accuracy,
)
from .metrics import (  # noqa: E402
    DEFAULT_CONFIG,
    METRIC_NAMES,
    MetricConfig,
    PenaltyBreakdown,
    SentenceScore,
    bleu4,
    bleu4_corpus,
    cider_d,
    cider_r,
    clipped_similarity,
    gaussian_penalty,
    length_penalty,
    repetition_penalty,
    resolve_metric,
    rouge_l,
)
from .textproc import (  # noqa: E402
    DEFAULT_OPTIONS,
    TokenizerOptions,
    length,
    tokenize,
)

__all__ = [
    "__version__",
    "AccuracyReport",
    "BatchItem",
    "CiderEvalError",
    "CorpusStats",
    "DEFAULT_CONFIG",
    "DEFAULT_OPTIONS",
    "DfTable",
    "EvalBatch",
    "InputFormatError",
    "InvalidArgumentError",
    "InvalidReferenceError",
    "METRIC_NAMES",
    "MetricConfig",
    "NGramVector",
    "PenaltyBreakdown",
    "SentenceScore",
    "TokenizerOptions",
    "TripletRecord",
    "VocabularyOverflowError",
    "backends",
    "bleu4",
    "bleu4_corpus",
    "build_df",
    "cider_d",
    "cider_r",
    "clipped_similarity",
    "corpus_stats",
    "extract_ngrams",
    "gaussian_penalty",
    "idf",
    "length",
    "length_penalty",
    "load_batch_jsonl",
    "load_captions",
    "load_reference_sets_jsonl",
    "load_triplets_jsonl",
    "repetition_penalty",
    "resolve_metric",
    "rouge_l",
    "score_batch",
    "subsample_refs",
    "sweep_kr",
    "tfidf_vector",
    "tokenize",
    "triplet_accuracy",
]
