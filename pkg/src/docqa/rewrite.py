"""Query augmentation for novel questions: paraphrase patterns, jargon
replacement, synonym expansion, and concept boosts.

One rewrite pass only; rule chains cannot loop.  Synonyms are appended as
extra search terms instead of substituted inline, so the user's phrasing
survives for prompting and term highlighting.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path


class SchemaError(Exception):
    def __init__(self, message: str, key: str = ""):
        super().__init__(f"{message}" + (f" (key: {key})" if key else ""))
        self.key = key


@dataclass(frozen=True)
class AddedTerm:
    term: str
    source: str  # synonym | jargon-map | boost
    trigger: str  # term in the original question that produced this


@dataclass(frozen=True)
class BoostTerm:
    term: str
    weight: float


@dataclass(frozen=True)
class AugmentedQuery:
    original: str
    rewritten: str
    added_terms: tuple[AddedTerm, ...] = ()
    boost_terms: tuple[BoostTerm, ...] = ()

    @classmethod
    def plain(cls, text: str) -> "AugmentedQuery":
        return cls(original=text, rewritten=text)


@dataclass(frozen=True)
class RewriteRules:
    jargon_map: dict[str, str]
    synonyms: dict[str, tuple[str, ...]]
    boosts: dict[str, float]
    paraphrase_patterns: tuple[tuple[re.Pattern, str], ...]


EMPTY_RULES = RewriteRules(jargon_map={}, synonyms={}, boosts={}, paraphrase_patterns=())


def _check_duplicates(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise SchemaError("duplicate key", key)
        seen.add(key)
        out[key] = value
    return out


def load_rules(path: str | Path) -> RewriteRules:
    """Load and validate a rules file; see SchemaError messages for limits."""
    raw = Path(path).read_text(encoding="utf-8")
    data = json.loads(raw, object_pairs_hook=_check_duplicates)
    return build_rules(data)


def build_rules(data: dict) -> RewriteRules:
    jargon = data.get("jargon_map", {})
    synonyms = data.get("synonyms", {})
    boosts = data.get("boosts", {})
    patterns = data.get("paraphrase_patterns", {})
    for key, value in jargon.items():
        if not isinstance(value, str) or not value:
            raise SchemaError("jargon replacement must be a non-empty string", key)
    for key, values in synonyms.items():
        if not isinstance(values, list) or not all(isinstance(v, str) and v for v in values):
            raise SchemaError("synonyms must be a list of non-empty strings", key)
    for key, weight in boosts.items():
        if not isinstance(weight, (int, float)) or weight < 1.0:
            raise SchemaError("boost weights must be numbers >= 1.0", key)
    compiled = []
    pattern_items = patterns.items() if isinstance(patterns, dict) else [(p["pattern"], p["template"]) for p in patterns]
    for pattern, template in pattern_items:
        try:
            compiled.append((re.compile(pattern, re.IGNORECASE), template))
        except re.error as exc:
            raise SchemaError(f"bad paraphrase pattern: {exc}", pattern) from exc
    return RewriteRules(
        jargon_map=dict(jargon),
        synonyms={k: tuple(v) for k, v in synonyms.items()},
        boosts={k: float(v) for k, v in boosts.items()},
        paraphrase_patterns=tuple(compiled),
    )


def _whole_word(term: str) -> re.Pattern:
    return re.compile(r"\b" + re.escape(term) + r"\b", re.IGNORECASE)


def augment_query(question: str, rules: RewriteRules = EMPTY_RULES) -> AugmentedQuery:
    """Single augmentation pass: paraphrase, jargon, synonyms, boosts.

    Every added term records the original-question term that triggered it.
    Rule-free input comes back unchanged.
    """
    rewritten = question

    # paraphrase: apply the pattern with the longest match, once
    best: tuple[int, re.Pattern, str] | None = None
    for pattern, template in rules.paraphrase_patterns:
        m = pattern.search(rewritten)
        if m and (best is None or (m.end() - m.start()) > best[0]):
            best = (m.end() - m.start(), pattern, template)
    if best is not None:
        rewritten = best[1].sub(best[2], rewritten, count=1)

    added: list[AddedTerm] = []
    for term, replacement in sorted(rules.jargon_map.items()):
        pattern = _whole_word(term)
        if pattern.search(rewritten):
            rewritten = pattern.sub(replacement, rewritten)
            if pattern.search(question):
                added.append(AddedTerm(term=replacement, source="jargon-map", trigger=term))

    seen_terms = {t.term.lower() for t in added}
    for term, expansions in sorted(rules.synonyms.items()):
        if not _whole_word(term).search(question):
            continue
        for expansion in expansions:
            if expansion.lower() in seen_terms or _whole_word(expansion).search(question):
                continue
            seen_terms.add(expansion.lower())
            added.append(AddedTerm(term=expansion, source="synonym", trigger=term))

    boosts: list[BoostTerm] = []
    for term, weight in sorted(rules.boosts.items()):
        if not _whole_word(term).search(rewritten):
            continue
        if _whole_word(term).search(question):
            trigger = term
        else:
            trigger = next(
                (k for k, v in rules.jargon_map.items() if v == term and _whole_word(k).search(question)),
                None,
            )
            if trigger is None:
                continue  # no provenance back to the original question
        added.append(AddedTerm(term=term, source="boost", trigger=trigger))
        boosts.append(BoostTerm(term=term, weight=weight))

    return AugmentedQuery(
        original=question,
        rewritten=rewritten,
        added_terms=tuple(added),
        boost_terms=tuple(boosts),
    )
