"""Shared text primitives: tokenization, stopwords, sentences, similarity."""

from __future__ import annotations

import math
import re
from collections import Counter

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WORD_RE = re.compile(r"[A-Za-z0-9]+(?:-[A-Za-z0-9]+)*")
_SENT_END_RE = re.compile(r"(?<=[.!?])\s+")

# Function words dropped when comparing question/answer content.  Interrogatives
# and auxiliaries are deliberately included (two questions should not match just
# because both start with a question word); pronouns are deliberately excluded
# (they carry the who-does-what framing that distinguishes question intents).
STOPWORDS = frozenset(
    {
        "a", "an", "the",
        "is", "are", "was", "were", "am", "be", "been", "being",
        "do", "does", "did", "done",
        "have", "has", "had",
        "can", "could", "should", "would", "will", "shall", "may", "might", "must",
        "what", "where", "when", "why", "how", "which", "who", "whom", "whose",
        "and", "or", "but", "if", "then", "than", "so", "because",
        "of", "to", "in", "on", "at", "for", "with", "from", "by", "about",
        "as", "into", "onto", "over", "under", "up", "down", "out", "off",
        "not", "no", "nor",
        "it", "its", "this", "that", "these", "those", "there", "here",
    }
)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on any non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords removed, original order kept."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def words(text: str) -> list[str]:
    """Word tokens keeping internal hyphens (``pre-industrial`` stays whole)."""
    return _WORD_RE.findall(text)


def content_words(text: str) -> list[str]:
    """Hyphen-preserving words minus stopwords, original casing kept."""
    return [w for w in words(text) if w.lower() not in STOPWORDS]


def token_set_cosine(a: str, b: str) -> float:
    """Cosine over the two texts' content-token sets, in [0, 1]."""
    sa = set(content_tokens(a))
    sb = set(content_tokens(b))
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / math.sqrt(len(sa) * len(sb))


def split_sentences(text: str) -> list[tuple[int, int]]:
    """(start, end) spans of sentences; lines are hard boundaries.

    Spans never overlap, appear in document order, and exclude surrounding
    whitespace.  Empty lines produce no span.
    """
    spans: list[tuple[int, int]] = []
    offset = 0
    for line in text.split("\n"):
        stripped = line.strip()
        if stripped:
            line_start = offset + line.index(stripped[0])
            pos = 0
            for m in _SENT_END_RE.finditer(stripped):
                spans.append((line_start + pos, line_start + m.start()))
                pos = m.end()
            if pos < len(stripped):
                spans.append((line_start + pos, line_start + len(stripped)))
        offset += len(line) + 1
    return spans


def ngrams(tokens: list[str], n: int) -> Counter:
    """Counter of n-grams (as tuples) over a token list."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def normalize_ws(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return re.sub(r"\s+", " ", text).strip()
