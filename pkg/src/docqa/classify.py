"""Question detection and type classification over screened input.

Pure rule cascades over immutable pattern tables; a trained classifier can
replace them later as long as it emits the same QuestionClass shape.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class QuestionClass:
    is_question: bool
    qtype: str  # what-is | how-to | troubleshooting | other
    signals: tuple[str, ...] = ()


_LEAD_WORDS = ("what", "why", "how", "where", "when", "which", "who", "can", "does", "is", "are", "do")

_IMPERATIVE_HELP = re.compile(r"^\s*(?:please\s+)?(?:tell\s+me|explain|describe)\b", re.IGNORECASE)


@dataclass(frozen=True)
class ClassifyRules:
    """Ordered per-class pattern lists; first matching class wins."""

    cascade: tuple[tuple[str, tuple[re.Pattern, ...]], ...]


_DEFAULT_CASCADE = [
    # failure vocabulary is the strongest signal, so troubleshooting outranks
    # the other classes when patterns overlap
    (
        "troubleshooting",
        [
            r"\berror\b",
            r"\bfail(?:s|ed|ing|ure)?\b",
            r"\bnot\s+working\b",
            r"\bbroken\b",
            r"\bcrash(?:es|ed|ing)?\b",
            r"\btroubleshoot\w*\b",
            r"\bcan(?:no|')t\s+(?:connect|log\s*in|access|start)\b",
            r"\bwhy\s+(?:is|does|do|are)\b.*\b(?:fail|break|stop|hang)\w*\b",
        ],
    ),
    (
        "how-to",
        [
            r"\bhow\s+(?:do|can|should|would)\s+(?:i|we|you)\b",
            r"\bhow\s+to\b",
            r"\bsteps?\s+to\b",
            r"\b(?:create|configure|install|set\s+up|setup|deploy|enable|rotate|delete|add|remove|connect)\b.*\?",
        ],
    ),
    (
        "what-is",
        [
            r"\bwhat\s+(?:is|are)\b",
            r"\bdefine\b",
            r"\bwhat\s+does\b.*\bmean\b",
            r"\bmeaning\s+of\b",
        ],
    ),
]


def build_rules(cascade: list[tuple[str, list[str]]] | None = None) -> ClassifyRules:
    cascade = cascade if cascade is not None else _DEFAULT_CASCADE
    return ClassifyRules(
        cascade=tuple(
            (qtype, tuple(re.compile(p, re.IGNORECASE) for p in patterns))
            for qtype, patterns in cascade
        )
    )


DEFAULT_RULES = build_rules()


def load_rules(path: str | Path) -> ClassifyRules:
    """Rule file: JSON object mapping class name to ordered pattern list."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return build_rules([(qtype, patterns) for qtype, patterns in data.items()])


def is_question(text: str) -> tuple[bool, tuple[str, ...]]:
    """True iff any question rule fires; returns the matched rule names."""
    signals = []
    if text.rstrip().endswith("?"):
        signals.append("terminal-question-mark")
    first = text.strip().split(maxsplit=1)
    lead = first[0].lower().strip("¿¡") if first else ""
    if lead in _LEAD_WORDS:
        signals.append(f"lead-word:{lead}")
    if _IMPERATIVE_HELP.search(text):
        signals.append("imperative-help")
    return bool(signals), tuple(signals)


def classify_type(text: str, rules: ClassifyRules = DEFAULT_RULES) -> QuestionClass:
    """Deterministic cascade; non-questions always classify as `other`."""
    asking, signals = is_question(text)
    if not asking:
        return QuestionClass(is_question=False, qtype="other", signals=())
    for qtype, patterns in rules.cascade:
        for pattern in patterns:
            if pattern.search(text):
                return QuestionClass(
                    is_question=True,
                    qtype=qtype,
                    signals=signals + (f"{qtype}:{pattern.pattern}",),
                )
    return QuestionClass(is_question=True, qtype="other", signals=signals)
