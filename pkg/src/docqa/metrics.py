"""Answer comparison metrics for regression batches.

BLEU uses add-1 smoothing on zero n-gram counts: unsmoothed BLEU is zero on
most short answers and useless for question-topic-answer triplets.
"""

from __future__ import annotations

import math
import re
from collections import Counter

from .textutil import STOPWORDS, ngrams, tokenize


def normalize_answer(text: str) -> str:
    return re.sub(r"\s+", " ", text.lower()).strip()


def exact_match(candidate: str, reference: str) -> float:
    return 1.0 if normalize_answer(candidate) == normalize_answer(reference) else 0.0


def token_f1(candidate: str, reference: str) -> float:
    """Harmonic precision/recall over content-token multisets."""
    cand = Counter(t for t in tokenize(candidate) if t not in STOPWORDS)
    ref = Counter(t for t in tokenize(reference) if t not in STOPWORDS)
    overlap = sum((cand & ref).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    return 2 * precision * recall / (precision + recall)


def bleu(candidate: str, reference: str, max_order: int = 4) -> float:
    """Corpus-style BLEU up to 4-grams, add-1 smoothed on zero counts."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand_ngrams = ngrams(cand, n)
        ref_ngrams = ngrams(ref, n)
        total = sum(cand_ngrams.values())
        matched = sum(min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items())
        if matched == 0:
            precision = (matched + 1) / (total + 1)
        else:
            precision = matched / total
        log_sum += math.log(precision)
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return brevity * math.exp(log_sum / max_order)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[-1]))
        prev = current
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS F-measure (beta=1) over word tokens."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def score_pair(candidate: str, reference: str) -> dict[str, float]:
    return {
        "exact_match": exact_match(candidate, reference),
        "token_f1": token_f1(candidate, reference),
        "bleu": bleu(candidate, reference),
        "rouge_l": rouge_l(candidate, reference),
    }
