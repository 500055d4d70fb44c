"""N-gram extraction, document-frequency modeling, and TF-IDF vectors.

A :class:`DfTable` is the corpus model both CIDEr variants score against:
for every n-gram, the number of images whose reference set contains it,
plus the total image count. Tables are immutable once built and safe to
share across scoring threads. IDF is log(num_images) - log(max(1, df)), so
an n-gram the corpus never saw gets the maximum weight.

Scores are corpus-dependent, which is why tables can be persisted to a
small versioned text file and why score reports record their provenance.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .errors import InputFormatError, InvalidArgumentError
from .textproc import TokenizedCaption

NGramKey = tuple

_DF_MAGIC = "cider-eval-df"
_DF_VERSION = 1


def extract_ngrams(c: TokenizedCaption, n: int) -> dict:
    """Counts of contiguous n-grams of ``c``; empty when the caption is
    shorter than ``n``.
    """
    if n < 1:
        raise InvalidArgumentError(f"n-gram arity must be >= 1, got {n}")
    out: dict = {}
    for i in range(len(c) - n + 1):
        key = tuple(c[i:i + n])
        out[key] = out.get(key, 0) + 1
    return out


@dataclass(frozen=True)
class NGramVector:
    """Sparse vector over n-gram keys of one arity."""

    entries: dict
    arity: int

    def __post_init__(self):
        for key in self.entries:
            if len(key) != self.arity:
                raise InvalidArgumentError(
                    f"key {key!r} does not have arity {self.arity}")

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))


class _DfView(Mapping):
    """Read-only tuple-keyed view of a table's stored document frequencies."""

    def __init__(self, table: "DfTable"):
        self._table = table

    def __getitem__(self, key: NGramKey) -> int:
        dense = self._table.keyspace.dense_id(key)
        df = self._table._df
        if dense is None or dense >= df.shape[0] or df[dense] == 0:
            raise KeyError(key)
        return int(df[dense])

    def __iter__(self):
        df = self._table._df
        unpack = self._table.keyspace.unpack
        # snapshot: candidate encoding may grow the interner while we iterate
        for packed, dense in list(self._table.keyspace._interner.items()):
            if dense < df.shape[0] and df[dense] > 0:
                yield unpack(packed)

    def __len__(self) -> int:
        return int((self._table._df > 0).sum())


class DfTable:
    """Immutable document-frequency model over a reference corpus.

    Build with :func:`build_df`, or load a persisted table. The underlying
    key space keeps growing as candidates are encoded against the table,
    but the frequencies themselves never change after construction.
    """

    def __init__(self, keyspace: engine.KeySpace, df: np.ndarray,
                 num_images: int, max_n: int):
        if num_images < 1:
            raise InvalidArgumentError("a DF table needs at least one image")
        self.keyspace = keyspace
        self._df = df
        self.num_images = num_images
        self.max_n = max_n
        self.log_num_images = math.log(num_images)
        self.idf_array = self.log_num_images - np.log(np.maximum(df, 1.0))

    @property
    def df(self) -> Mapping:
        return _DfView(self)

    def df_of(self, key: NGramKey) -> int:
        """Stored document frequency of a key, 0 when unseen."""
        dense = self.keyspace.dense_id(key)
        if dense is None or dense >= self._df.shape[0]:
            return 0
        return int(self._df[dense])

    def idf(self, key: NGramKey) -> float:
        """log(num_images) - log(max(1, df)); unseen keys get the maximum."""
        return self.log_num_images - math.log(max(1, self.df_of(key)))

    def save(self, path) -> None:
        """Write the table as a versioned flat file (see :meth:`load`)."""
        entries = sorted((len(key), " ".join(key), df) for key, df in self.df.items())
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{_DF_MAGIC} {_DF_VERSION}\n")
            fh.write(f"num_images={self.num_images}\n")
            for n, joined, df in entries:
                fh.write(f"{n}\t{joined}\t{df}\n")

    @classmethod
    def load(cls, path) -> "DfTable":
        """Read a table written by :meth:`save`.

        Format: a magic/version line, a ``num_images=<int>`` line, then one
        ``n<TAB>space-joined-tokens<TAB>df`` line per key in any order.
        """
        spath = str(path)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            parts = header.split()
            if len(parts) != 2 or parts[0] != _DF_MAGIC:
                raise InputFormatError("not a DF table file", spath, 1)
            if parts[1] != str(_DF_VERSION):
                raise InputFormatError(f"unsupported DF version {parts[1]}", spath, 1)
            count_line = fh.readline().rstrip("\n")
            if not count_line.startswith("num_images="):
                raise InputFormatError("missing num_images header", spath, 2)
            try:
                num_images = int(count_line.partition("=")[2])
            except ValueError:
                raise InputFormatError("bad num_images value", spath, 2) from None
            if num_images < 1:
                raise InputFormatError("num_images must be >= 1", spath, 2)

            keyspace = engine.KeySpace()
            df_list: list = []
            max_n = 1
            with keyspace.lock:
                for lineno, line in enumerate(fh, 3):
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    fields = line.split("\t")
                    if len(fields) != 3:
                        raise InputFormatError("expected n<TAB>tokens<TAB>df",
                                               spath, lineno)
                    tokens = fields[1].split(" ")
                    try:
                        n, df = int(fields[0]), int(fields[2])
                    except ValueError:
                        raise InputFormatError("bad integer field", spath,
                                               lineno) from None
                    if n != len(tokens):
                        raise InputFormatError(
                            f"arity {n} does not match {len(tokens)} tokens",
                            spath, lineno)
                    if not 1 <= df <= num_images:
                        raise InputFormatError(
                            f"df {df} outside [1, {num_images}]", spath, lineno)
                    counts = keyspace.count_ngrams(tokens, n)
                    dense = counts[n - 1]
                    if len(dense) != 1 or next(iter(dense.values())) != 1:
                        raise InputFormatError("duplicate key line", spath, lineno)
                    dense_id = next(iter(dense))
                    if dense_id >= len(df_list):
                        df_list.extend([0] * (keyspace.num_keys - len(df_list)))
                    if df_list[dense_id]:
                        raise InputFormatError("duplicate key line", spath, lineno)
                    df_list[dense_id] = df
                    max_n = max(max_n, n)
        if len(df_list) < keyspace.num_keys:
            df_list.extend([0] * (keyspace.num_keys - len(df_list)))
        return cls(keyspace, np.asarray(df_list, np.float64), num_images, max_n)


def build_df(reference_sets, max_n: int = 4) -> DfTable:
    """Count, for every n-gram up to ``max_n``, the number of images whose
    reference set contains it.

    ``reference_sets`` holds one list of tokenized references per image.
    A key occurring in several references of one image still counts once.
    """
    if max_n < 1:
        raise InvalidArgumentError(f"max_n must be >= 1, got {max_n}")
    keyspace = engine.KeySpace()
    with keyspace.lock:
        counted = [[keyspace.count_ngrams(ref, max_n) for ref in refs]
                   for refs in reference_sets]
    return build_df_from_counts(keyspace, counted, max_n)


def build_df_from_counts(keyspace, counted_sets, max_n: int = 4) -> DfTable:
    """DF table over n-grams already counted against ``keyspace`` (one list
    of per-arity count dicts per reference, grouped by image). Lets batch
    scoring count each caption exactly once.
    """
    if not counted_sets:
        raise InvalidArgumentError("cannot build a DF table from an empty corpus")
    df = np.zeros(keyspace.num_keys, np.float64)
    for per_image in counted_sets:
        seen: set = set()
        for per_n in per_image:
            for dense_counts in per_n:
                seen.update(dense_counts.keys())
        if seen:
            df[np.fromiter(seen, np.int64, len(seen))] += 1.0
    return DfTable(keyspace, df, len(counted_sets), max_n)


def idf(table: DfTable, key: NGramKey) -> float:
    """Functional form of :meth:`DfTable.idf`."""
    return table.idf(key)


def tfidf_vector(c: TokenizedCaption, n: int, table: DfTable) -> NGramVector:
    """Sparse TF-IDF vector of a caption for one arity: raw n-gram count
    times the corpus IDF of each key.
    """
    counts = extract_ngrams(c, n)
    return NGramVector(
        entries={key: cnt * table.idf(key) for key, cnt in counts.items()},
        arity=n,
    )
