"""Grounded prompt construction, multi-model fan-out, and answer selection.

Production models are closed boxes behind GenerativeClient; the deterministic
extractive stub stands in for them in tests and offline runs, so the whole
pipeline stays reproducible without any model dependency.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass
from typing import Protocol

import httpx

from .textutil import content_tokens, ngrams, normalize_ws, split_sentences, tokenize


class GenerateError(Exception):
    pass


class ContextBudgetExceeded(GenerateError):
    def __init__(self, estimate: int, budget: int):
        super().__init__(f"prompt estimate {estimate} tokens exceeds budget {budget}")
        self.estimate = estimate
        self.budget = budget


class AllModelsFailed(GenerateError):
    pass


class NoViableCandidate(GenerateError):
    pass


@dataclass(frozen=True)
class GroundingDoc:
    topic_id: str
    title: str
    text: str


@dataclass(frozen=True)
class Prompt:
    question: str
    grounding: tuple[GroundingDoc, ...]
    template_id: str
    rendered: str
    token_estimate: int


_TEMPLATES = {
    "default": (
        "Answer only from the provided topics, concisely.\n\n"
        "{grounding}\n\n"
        "Question: {question}\n"
        "Answer:"
    ),
}


def build_prompt(
    question: str,
    grounding: list[GroundingDoc],
    template_id: str = "default",
    context_budget: int = 4096,
) -> Prompt:
    """Render the grounded prompt and estimate its token cost.

    Raises ContextBudgetExceeded rather than dropping topics: silent
    truncation would break faithfulness to the grounding, so the caller
    decides what to shed.
    """
    if not grounding:
        raise GenerateError("prompt requires at least one grounding text")
    sections = "\n\n".join(f"Topic: {doc.title}\n{doc.text}" for doc in grounding)
    rendered = _TEMPLATES[template_id].format(grounding=sections, question=question)
    estimate = math.ceil(len(rendered.split()) * 1.3)
    if estimate > context_budget:
        raise ContextBudgetExceeded(estimate, context_budget)
    return Prompt(
        question=question,
        grounding=tuple(grounding),
        template_id=template_id,
        rendered=rendered,
        token_estimate=estimate,
    )


@dataclass(frozen=True)
class Candidate:
    model_id: str
    text: str
    latency_ms: int = 0
    finish: str = "complete"  # complete | truncated | error


class GenerativeClient(Protocol):
    model_id: str

    def generate(self, prompt: Prompt) -> Candidate: ...


class HttpGenerativeClient:
    """JSON-over-HTTP client: {prompt, max_tokens, temperature} -> {text, finish}.

    Temperature is fixed at 0 for reproducibility.
    """

    def __init__(self, model_id: str, endpoint: str, max_tokens: int = 400, timeout: float = 8.0):
        self.model_id = model_id
        self.endpoint = endpoint
        self.max_tokens = max_tokens
        self.timeout = timeout

    def generate(self, prompt: Prompt) -> Candidate:
        started = time.monotonic()
        response = httpx.post(
            self.endpoint,
            json={"prompt": prompt.rendered, "max_tokens": self.max_tokens, "temperature": 0},
            timeout=self.timeout,
        )
        response.raise_for_status()
        payload = response.json()
        return Candidate(
            model_id=self.model_id,
            text=payload["text"],
            latency_ms=int((time.monotonic() - started) * 1000),
            finish=payload.get("finish", "complete"),
        )


def generate_candidates(
    prompt: Prompt,
    clients: list[GenerativeClient],
    deadline_s: float = 8.0,
) -> list[Candidate]:
    """Invoke every client concurrently under one shared deadline.

    A client failure or timeout becomes a finish=error candidate and never
    aborts the fan-out; candidates come back in client registration order.
    """
    if not clients:
        raise GenerateError("at least one generative client required")

    def run(client: GenerativeClient) -> Candidate:
        started = time.monotonic()
        try:
            return client.generate(prompt)
        except Exception:
            return Candidate(
                model_id=client.model_id,
                text="",
                latency_ms=int((time.monotonic() - started) * 1000),
                finish="error",
            )

    deadline = time.monotonic() + deadline_s
    candidates: list[Candidate] = []
    with ThreadPoolExecutor(max_workers=len(clients)) as pool:
        futures = [pool.submit(run, client) for client in clients]
        for client, future in zip(clients, futures):
            remaining = max(0.0, deadline - time.monotonic())
            try:
                candidates.append(future.result(timeout=remaining))
            except (FutureTimeout, TimeoutError):
                future.cancel()
                candidates.append(Candidate(model_id=client.model_id, text="", finish="error"))
    if all(c.finish == "error" for c in candidates):
        raise AllModelsFailed(f"all {len(clients)} clients failed")
    return candidates


# --------------------------------------------------------------------------
# Deterministic extractive stub

@dataclass(frozen=True)
class EvidenceSentence:
    topic_id: str
    span: tuple[int, int]  # offsets into that topic's grounding text
    text: str


@dataclass(frozen=True)
class ValueExtraction:
    value: str | None
    ambiguous: bool
    focus_term: str | None = None


@dataclass(frozen=True)
class StubAnswer:
    text: str
    evidence: tuple[EvidenceSentence, ...]
    extraction: ValueExtraction


def _grounding_sentences(prompt: Prompt) -> list[EvidenceSentence]:
    sentences = []
    for doc in prompt.grounding:
        for start, end in split_sentences(doc.text):
            sentences.append(EvidenceSentence(topic_id=doc.topic_id, span=(start, end), text=doc.text[start:end]))
    return sentences


def _question_terms(question: str) -> list[str]:
    ordered = []
    for term in content_tokens(question):
        if term not in ordered:
            ordered.append(term)
    return ordered


def stub_answer(prompt: Prompt) -> StubAnswer:
    """Extractive answer: up to two grounding sentences that best match the
    question, plus a value-near-focus numeric extraction.

    Sentence choice maximizes (shared content terms, then shorter sentence,
    then earlier position); with no overlap at all the first grounding
    sentence is the fallback.  The extraction finds the numeric token nearest
    the rarest matched question term and is flagged ambiguous whenever the
    rarest question term overall does not occur in the selected sentences.
    """
    sentences = _grounding_sentences(prompt)
    if not sentences:
        return StubAnswer(text="", evidence=(), extraction=ValueExtraction(None, True))
    terms = _question_terms(prompt.question)
    term_set = set(terms)

    scored = []
    for position, sentence in enumerate(sentences):
        overlap = len(term_set & set(tokenize(sentence.text)))
        scored.append((overlap, position, sentence))
    eligible = [(o, p, s) for o, p, s in scored if o > 0]
    if eligible:
        eligible.sort(key=lambda item: (-item[0], len(item[2].text), item[1]))
        chosen = eligible[:2]
    else:
        chosen = [scored[0]]
    chosen.sort(key=lambda item: item[1])  # document order read best
    evidence = tuple(s for _, _, s in chosen)
    text = " ".join(s.text for s in evidence)

    grounding_freq = Counter()
    for doc in prompt.grounding:
        grounding_freq.update(tokenize(doc.text))
    selected_tokens = tokenize(text)
    extraction = _extract_value(terms, grounding_freq, selected_tokens)
    return StubAnswer(text=text, evidence=evidence, extraction=extraction)


def _extract_value(terms: list[str], grounding_freq: Counter, selected_tokens: list[str]) -> ValueExtraction:
    if not terms:
        return ValueExtraction(value=None, ambiguous=True)
    rarest = min(terms, key=lambda t: (grounding_freq.get(t, 0), terms.index(t)))
    ambiguous = rarest not in selected_tokens
    present = [t for t in terms if t in selected_tokens]
    if not present:
        return ValueExtraction(value=None, ambiguous=True)
    focus = min(present, key=lambda t: (grounding_freq.get(t, 0), terms.index(t)))
    focus_positions = [i for i, tok in enumerate(selected_tokens) if tok == focus]
    numeric = [(i, tok) for i, tok in enumerate(selected_tokens) if tok.isdigit()]
    if not numeric:
        return ValueExtraction(value=None, ambiguous=ambiguous, focus_term=focus)
    best = min(numeric, key=lambda item: (min(abs(item[0] - f) for f in focus_positions), item[0]))
    return ValueExtraction(value=best[1], ambiguous=ambiguous, focus_term=focus)


def stub_generate(prompt: Prompt) -> Candidate:
    """Deterministic extractive candidate; identical prompt, identical output."""
    return Candidate(model_id="stub-extractive", text=stub_answer(prompt).text, latency_ms=0)


class StubGenerativeClient:
    """Client wrapper around stub_generate for fan-out registration."""

    def __init__(self, model_id: str = "stub-extractive"):
        self.model_id = model_id

    def generate(self, prompt: Prompt) -> Candidate:
        answer = stub_answer(prompt)
        return Candidate(model_id=self.model_id, text=answer.text, latency_ms=0)


# --------------------------------------------------------------------------
# Candidate selection

@dataclass(frozen=True)
class CandidateScores:
    groundedness: float
    coverage: float
    brevity: float
    total: float


@dataclass(frozen=True)
class AnswerSelection:
    chosen: Candidate
    scores: dict[str, CandidateScores]
    evidence_sentences: tuple[EvidenceSentence, ...]


def _content_bigrams(text: str) -> Counter:
    return ngrams(content_tokens(text), 2)


def groundedness_score(text: str, grounding: tuple[GroundingDoc, ...]) -> float:
    """Fraction of the text's content-word bigrams present in the grounding.

    Texts too short for bigrams fall back to content unigram fraction.
    """
    bigrams = _content_bigrams(text)
    grounding_bigrams: set[tuple[str, str]] = set()
    grounding_unigrams: set[str] = set()
    for doc in grounding:
        grounding_bigrams.update(_content_bigrams(doc.text))
        grounding_unigrams.update(content_tokens(doc.text))
    if bigrams:
        hits = sum(count for bigram, count in bigrams.items() if bigram in grounding_bigrams)
        return hits / sum(bigrams.values())
    unigrams = content_tokens(text)
    if not unigrams:
        return 0.0
    return sum(1 for u in unigrams if u in grounding_unigrams) / len(unigrams)


def coverage_score(question: str, text: str) -> float:
    terms = set(content_tokens(question))
    if not terms:
        return 0.0
    answer_tokens = set(tokenize(text))
    return len(terms & answer_tokens) / len(terms)


def brevity_score(text: str, knee_chars: int = 600) -> float:
    return max(0.0, min(1.0, 1.0 - len(text) / knee_chars))


def _find_evidence(chosen: Candidate, prompt: Prompt) -> tuple[EvidenceSentence, ...]:
    """Grounding sentences supporting the chosen text.

    Verbatim-contained sentences win; otherwise the top two by shared
    content terms; as a last resort the first grounding sentence, so an
    answered outcome can always link its source topic.
    """
    sentences = _grounding_sentences(prompt)
    if not sentences:
        return ()
    normalized = normalize_ws(chosen.text)
    verbatim = tuple(s for s in sentences if normalize_ws(s.text) and normalize_ws(s.text) in normalized)
    if verbatim:
        return verbatim
    chosen_terms = set(content_tokens(chosen.text))
    overlapping = [
        (len(chosen_terms & set(tokenize(s.text))), i, s)
        for i, s in enumerate(sentences)
    ]
    best = [(o, i, s) for o, i, s in overlapping if o > 0]
    best.sort(key=lambda item: (-item[0], item[1]))
    if best:
        picked = sorted(best[:2], key=lambda item: item[1])
        return tuple(s for _, _, s in picked)
    return (sentences[0],)


def select_best(candidates: list[Candidate], prompt: Prompt) -> AnswerSelection:
    """Score candidates on groundedness/coverage/brevity (0.5/0.35/0.15).

    Ties resolve by client registration order, then lower latency.
    """
    viable = [(i, c) for i, c in enumerate(candidates) if c.finish != "error"]
    if not viable:
        raise NoViableCandidate("no non-error candidate to select")
    scores: dict[str, CandidateScores] = {}
    ranked = []
    for priority, candidate in viable:
        g = groundedness_score(candidate.text, prompt.grounding)
        c = coverage_score(prompt.question, candidate.text)
        b = brevity_score(candidate.text)
        s = CandidateScores(groundedness=g, coverage=c, brevity=b, total=0.5 * g + 0.35 * c + 0.15 * b)
        scores[candidate.model_id] = s
        ranked.append((-s.total, priority, candidate.latency_ms, candidate))
    ranked.sort(key=lambda item: item[:3])
    chosen = ranked[0][3]
    return AnswerSelection(chosen=chosen, scores=scores, evidence_sentences=_find_evidence(chosen, prompt))
