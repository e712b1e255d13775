"""Input/output screening: injection rejection, PII redaction, HAP handling,
language detection, and pluggable translation.

Detection is rule-based: regex packs for injection and PII shapes, word
lexicons for HAP and bias terms.  ML classifiers can plug in later through
the same Finding contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol


class GuardError(Exception):
    pass


class InputTooLong(GuardError):
    def __init__(self, length: int, limit: int):
        super().__init__(f"input length {length} exceeds limit {limit}")
        self.length = length
        self.limit = limit


class EmptyText(GuardError):
    pass


class TranslatorUnavailable(GuardError):
    pass


@dataclass(frozen=True)
class Finding:
    category: str  # injection | adversarial | pii-* | hap-* | bias
    span: tuple[int, int]  # offsets into the *input* text
    action: str  # rejected | removed | paraphrased
    rule: str = ""
    tone: str | None = None  # optional sentiment annotation, never a gate


@dataclass(frozen=True)
class ScreenResult:
    verdict: str  # rejected | sanitized | clean
    text: str
    findings: tuple[Finding, ...] = ()


@dataclass(frozen=True)
class LanguageTag:
    code: str
    confidence: float = 1.0


@dataclass(frozen=True)
class GuardPolicy:
    """Immutable rule packs; safe for concurrent use."""

    injection: tuple[tuple[str, re.Pattern, str], ...]  # (rule, pattern, category)
    pii: tuple[tuple[str, re.Pattern, str], ...]  # (category, pattern, placeholder)
    hap: tuple[tuple[str, re.Pattern, str, str | None], ...]  # (category, pattern, word, substitute)
    bias: tuple[tuple[re.Pattern, str, str | None], ...]  # (pattern, word, substitute)
    max_input_len: int = 1000


_DEFAULT_INJECTION = [
    ("script-tag", r"<\s*script\b", "injection"),
    ("iframe-tag", r"<\s*iframe\b", "injection"),
    ("javascript-url", r"javascript\s*:", "injection"),
    ("event-handler", r"\bon(?:error|load|click|mouseover)\s*=", "injection"),
    ("shell-chain", r"[;&|`]\s*(?:rm|curl|wget|sudo|sh|bash|cat)\b", "injection"),
    ("sql-probe", r"\b(?:drop\s+table|union\s+select)\b", "injection"),
    ("override-instructions", r"\bignore\s+(?:all\s+|any\s+)?(?:previous|prior|above)\s+(?:instructions|prompts|rules)\b", "adversarial"),
    ("disregard-system", r"\bdisregard\s+(?:all\s+|the\s+)?(?:previous|prior|system)\b", "adversarial"),
    ("system-prompt-probe", r"\bsystem\s+prompt\b", "adversarial"),
    ("jailbreak", r"\bjailbreak\b", "adversarial"),
    ("role-override", r"\b(?:pretend\s+(?:you\s+are|to\s+be)|act\s+as\s+(?:an?\s+)?(?:admin|root|system))\b", "adversarial"),
]

_DEFAULT_PII = [
    ("pii-url", r"\bhttps?://[^\s<>\"')]+", "[URL]"),
    ("pii-email", r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b", "[EMAIL]"),
    ("pii-ip", r"\b(?:\d{1,3}\.){3}\d{1,3}\b", "[IP]"),
    ("pii-ip", r"\b(?:[0-9A-Fa-f]{1,4}:){3,7}[0-9A-Fa-f]{1,4}\b", "[IP]"),
    ("pii-ip", r"\b[0-9A-Fa-f]{1,4}::[0-9A-Fa-f]{1,4}(?::[0-9A-Fa-f]{1,4})*\b", "[IP]"),
    ("pii-userid", r"\buid[-_]?\d+\b", "[USERID]"),
    ("pii-userid", r"\buser(?:\s*id|name)\s*[:=]\s*[A-Za-z0-9_.-]+", "[USERID]"),
    ("pii-userid", r"(?<![\w@])@[A-Za-z][A-Za-z0-9_]{2,}\b", "[USERID]"),
    ("pii-name", r"\b(?:Mr|Mrs|Ms|Dr|Prof)\.?\s+[A-Z][a-z]+\b", "[NAME]"),
]

_DEFAULT_HAP = {
    "hap-profanity": ["damn", "hell", "crap", "bloody"],
    "hap-abuse": ["idiot", "moron", "stupid", "dumb", "shut up"],
    "hap-hate": ["bigot", "bigoted"],
}

_DEFAULT_HAP_SUBSTITUTIONS = {"stupid": "confusing", "dumb": "unclear"}

_DEFAULT_BIAS = {
    "blacklist": "blocklist",
    "whitelist": "allowlist",
    "master": "primary",
    "slave": "replica",
    "manpower": "staffing",
    "crazy": "unexpected",
    "grandfathered": "exempted",
}


def _word_pattern(word: str) -> re.Pattern:
    return re.compile(r"\b" + re.escape(word).replace(r"\ ", r"\s+") + r"\b", re.IGNORECASE)


def build_policy(
    injection: list[tuple[str, str, str]] | None = None,
    pii: list[tuple[str, str, str]] | None = None,
    hap_lexicon: dict[str, list[str]] | None = None,
    hap_substitutions: dict[str, str] | None = None,
    bias_map: dict[str, str] | None = None,
    max_input_len: int = 1000,
) -> GuardPolicy:
    injection = injection if injection is not None else _DEFAULT_INJECTION
    pii = pii if pii is not None else _DEFAULT_PII
    hap_lexicon = hap_lexicon if hap_lexicon is not None else _DEFAULT_HAP
    hap_substitutions = hap_substitutions if hap_substitutions is not None else _DEFAULT_HAP_SUBSTITUTIONS
    bias_map = bias_map if bias_map is not None else _DEFAULT_BIAS
    return GuardPolicy(
        injection=tuple((rule, re.compile(pat, re.IGNORECASE), cat) for rule, pat, cat in injection),
        pii=tuple((cat, re.compile(pat), ph) for cat, pat, ph in pii),
        hap=tuple(
            (cat, _word_pattern(word), word, hap_substitutions.get(word))
            for cat, word_list in hap_lexicon.items()
            for word in word_list
        ),
        bias=tuple((_word_pattern(word), word, sub) for word, sub in bias_map.items()),
        max_input_len=max_input_len,
    )


DEFAULT_POLICY = build_policy()


def load_policy(path: str | Path) -> GuardPolicy:
    """Load a GuardPolicy JSON file; lexicon values may be inline or paths."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))

    def resolve(value, default):
        if value is None:
            return default
        if isinstance(value, str):
            return json.loads((path.parent / value).read_text(encoding="utf-8"))
        return value

    hap = dict(resolve(data.get("hap_lexicon"), _DEFAULT_HAP))
    substitutions = hap.pop("substitutions", _DEFAULT_HAP_SUBSTITUTIONS)
    injection = data.get("injection_patterns")
    if injection is not None:
        injection = [
            (p.get("rule", f"injection-{i}"), p["pattern"], p.get("category", "injection")) if isinstance(p, dict) else (f"injection-{i}", p, "injection")
            for i, p in enumerate(injection)
        ]
    pii = data.get("pii_patterns")
    if pii is not None:
        pii = [(cat, pat, _placeholder_for(cat)) for cat, pats in pii.items() for pat in (pats if isinstance(pats, list) else [pats])]
    return build_policy(
        injection=injection,
        pii=pii,
        hap_lexicon=hap,
        hap_substitutions=substitutions,
        bias_map=resolve(data.get("bias_map"), _DEFAULT_BIAS),
        max_input_len=data.get("max_input_len", 1000),
    )


def _placeholder_for(category: str) -> str:
    tail = category.split("-", 1)[-1] if "-" in category else category
    return f"[{tail.upper()}]"


def screen_input(raw: str, policy: GuardPolicy = DEFAULT_POLICY) -> ScreenResult:
    """Screen text at pipeline entry (also reused on generated output).

    Injection or adversarial hits reject outright; otherwise PII is replaced
    with typed placeholders and HAP/bias terms are paraphrased or removed.
    Clean input passes through byte-identical.
    """
    if len(raw) > policy.max_input_len:
        raise InputTooLong(len(raw), policy.max_input_len)

    rejects = [
        Finding(category=cat, span=m.span(), action="rejected", rule=rule)
        for rule, pattern, cat in policy.injection
        for m in [pattern.search(raw)]
        if m
    ]
    if rejects:
        return ScreenResult(verdict="rejected", text="", findings=tuple(rejects))

    candidates: list[tuple[int, int, Finding, str]] = []
    for cat, pattern, placeholder in policy.pii:
        for m in pattern.finditer(raw):
            candidates.append((m.start(), m.end(), Finding(cat, m.span(), "removed", rule=cat), placeholder))
    for cat, pattern, word, substitute in policy.hap:
        for m in pattern.finditer(raw):
            action = "paraphrased" if substitute is not None else "removed"
            candidates.append((m.start(), m.end(), Finding(cat, m.span(), action, rule=word), substitute or ""))
    for pattern, word, substitute in policy.bias:
        for m in pattern.finditer(raw):
            action = "paraphrased" if substitute is not None else "removed"
            candidates.append((m.start(), m.end(), Finding("bias", m.span(), action, rule=word), substitute or ""))

    if not candidates:
        return ScreenResult(verdict="clean", text=raw, findings=())

    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0])))
    kept: list[tuple[int, int, Finding, str]] = []
    last_end = -1
    for start, end, finding, replacement in candidates:
        if start >= last_end:
            kept.append((start, end, finding, replacement))
            last_end = end

    out: list[str] = []
    pos = 0
    removed_any = False
    for start, end, finding, replacement in kept:
        out.append(raw[pos:start])
        out.append(replacement)
        removed_any = removed_any or not replacement
        pos = end
    out.append(raw[pos:])
    text = "".join(out)
    if removed_any:
        text = re.sub(r"[ \t]{2,}", " ", text).strip()
    return ScreenResult(verdict="sanitized", text=text, findings=tuple(f for _, _, f, _ in kept))


# --------------------------------------------------------------------------
# Language detection

_LANG_MARKERS = {
    "en": {"how", "do", "i", "the", "is", "are", "what", "where", "when", "why", "my", "a", "can", "you", "to", "of"},
    "es": {"cómo", "como", "qué", "dónde", "donde", "por", "para", "un", "una", "el", "la", "los", "las", "es", "mi", "y", "crear", "creo"},
    "fr": {"comment", "quoi", "où", "pourquoi", "le", "les", "une", "des", "est", "je", "vous", "avec", "mon", "et"},
    "de": {"wie", "wo", "warum", "der", "die", "das", "und", "ist", "ich", "ein", "eine", "nicht", "mit", "mein"},
}

_LANG_CHARS = {
    "es": "¿¡ñáéíóúü",
    "fr": "àâçèêëîïôùûœ",
    "de": "äöüß",
}

_LANG_ORDER = ["en", "es", "fr", "de"]


def detect_language(text: str) -> LanguageTag:
    """Best-guess language from marker stopwords and distinctive characters."""
    if not text.strip():
        raise EmptyText("cannot detect language of empty text")
    tokens = re.findall(r"[^\W\d_]+", text.lower(), re.UNICODE)
    scores = {lang: 0.0 for lang in _LANG_ORDER}
    for lang, markers in _LANG_MARKERS.items():
        scores[lang] += sum(1.0 for t in tokens if t in markers)
    for lang, chars in _LANG_CHARS.items():
        scores[lang] += sum(2.0 for ch in text if ch in chars)
    total = sum(scores.values())
    if total == 0:
        return LanguageTag(code="en", confidence=0.5)
    best = max(_LANG_ORDER, key=lambda lang: scores[lang])
    return LanguageTag(code=best, confidence=scores[best] / total)


# --------------------------------------------------------------------------
# Translation

class TranslatorClient(Protocol):
    name: str

    def translate(self, text: str, source: str, target: str) -> str: ...


class IdentityTranslator:
    """Pass-through client for same-language pairs."""

    name = "identity"

    def translate(self, text: str, source: str, target: str) -> str:
        return text


class DictionaryTranslator:
    """Word-map client backed by a JSON file: {"es-en": {"hola": "hello"}}."""

    name = "dictionary"

    def __init__(self, maps: dict[str, dict[str, str]] | str | Path):
        if isinstance(maps, (str, Path)):
            maps = json.loads(Path(maps).read_text(encoding="utf-8"))
        self.maps = {pair: {k.lower(): v for k, v in table.items()} for pair, table in maps.items()}

    def translate(self, text: str, source: str, target: str) -> str:
        if source == target:
            return text
        table = self.maps.get(f"{source}-{target}")
        if table is None:
            raise TranslatorUnavailable(f"no dictionary for pair {source}-{target}")
        parts = re.split(r"(\W+)", text, flags=re.UNICODE)
        return "".join(table.get(p.lower(), p) for p in parts)


def translate(text: str, source: LanguageTag, target: LanguageTag, client: TranslatorClient) -> str:
    """Run the client, surfacing its failures as TranslatorUnavailable."""
    try:
        return client.translate(text, source.code, target.code)
    except TranslatorUnavailable:
        raise
    except Exception as exc:
        raise TranslatorUnavailable(f"translator '{client.name}' failed: {exc}") from exc
