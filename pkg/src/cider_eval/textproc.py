"""Deterministic text normalization and tokenization shared by all metrics.

Captions are stored verbatim; every metric sees only the output of
:func:`tokenize`. The pipeline is a plain normalize/strip/split, not a
treebank tokenizer: it is language neutral (accented characters survive)
and has no data dependencies. Comparisons against toolkits that ship their
own tokenizer must therefore feed pre-tokenized text to both sides.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass

# A raw caption is just the sentence string; a tokenized caption is the
# ordered list of its tokens. Aliases document intent at call sites.
RawCaption = str
TokenizedCaption = list


@dataclass(frozen=True)
class TokenizerOptions:
    """Switches for the three normalization stages; all enabled by default."""

    lowercase: bool = True
    strip_punctuation: bool = True
    unicode_normalize: bool = True


DEFAULT_OPTIONS = TokenizerOptions()

_category = unicodedata.category


def _strip_punct(chunk: str) -> str:
    # Trim leading/trailing punctuation (Unicode categories P*) only, so
    # intra-word hyphens and apostrophes survive. A chunk that is nothing
    # but punctuation trims to the empty string and is dropped by the caller.
    start, end = 0, len(chunk)
    while start < end and _category(chunk[start]).startswith("P"):
        start += 1
    while end > start and _category(chunk[end - 1]).startswith("P"):
        end -= 1
    return chunk[start:end]


def tokenize(raw: RawCaption, opts: TokenizerOptions = DEFAULT_OPTIONS) -> list[str]:
    """Split a caption into normalized tokens.

    Deterministic: NFC-normalize, lowercase, split on whitespace, strip
    punctuation from chunk edges, drop chunks that were pure punctuation.
    An empty or all-punctuation input yields an empty list.
    """
    text = raw
    if opts.unicode_normalize:
        text = unicodedata.normalize("NFC", text)
    if opts.lowercase:
        text = text.lower()
    chunks = text.split()
    if not opts.strip_punctuation:
        return chunks
    out = []
    for chunk in chunks:
        chunk = _strip_punct(chunk)
        if chunk:
            out.append(chunk)
    return out


def length(c: TokenizedCaption) -> int:
    """Token count of a caption; the l(.) every length penalty uses."""
    return len(c)
