"""End-to-end ask flow: screening, language, classification, FAQ, rewrite,
search, grounding, generation, output post-processing, and logging.

Requests are independent; every shared structure (corpus, index, registry,
rules) is read through an immutable runtime snapshot, so concurrent requests
are safe and a reload is one atomic snapshot swap by the owner.
"""

from __future__ import annotations

import html
import json
import os
import re
import time
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import httpx

from . import classify as classify_mod
from . import guard as guard_mod
from .corpus import Corpus, extract_grounding_text
from .evalstore import EvalStore
from .faq import FaqRegistry, check_freshness, match_faq
from .generate import (
    AllModelsFailed,
    AnswerSelection,
    ContextBudgetExceeded,
    GenerativeClient,
    GroundingDoc,
    NoViableCandidate,
    StubGenerativeClient,
    build_prompt,
    generate_candidates,
    select_best,
)
from .guard import (
    GuardPolicy,
    InputTooLong,
    LanguageTag,
    IdentityTranslator,
    TranslatorClient,
    TranslatorUnavailable,
    screen_input,
    detect_language,
    translate,
)
from .retrieve import (
    LexicalIndex,
    SearchClient,
    SearchPolicy,
    SearchUnavailable,
    TopicHit,
    build_index,
    external_search,
    postprocess_hits,
    search,
)
from .rewrite import AugmentedQuery, RewriteRules, EMPTY_RULES, augment_query
from .textutil import content_words


# --------------------------------------------------------------------------
# Request/response envelope

_ULID_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
_ulid_lock = threading.Lock()
_last_ulid: list = [0, 0]


def new_ulid() -> str:
    """Monotonic ULID: 48-bit timestamp + 80 random bits, Crockford base32."""
    with _ulid_lock:
        ts = int(time.time() * 1000)
        rand = int.from_bytes(os.urandom(10), "big")
        if ts <= _last_ulid[0]:
            ts = _last_ulid[0]
            rand = _last_ulid[1] + 1
        _last_ulid[0], _last_ulid[1] = ts, rand
    value = (ts << 80) | rand
    chars = []
    for _ in range(26):
        chars.append(_ULID_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


@dataclass(frozen=True)
class AskRequest:
    text: str
    request_id: str = field(default_factory=new_ulid)
    received_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    client_locale: str | None = None


@dataclass(frozen=True)
class StageRecord:
    stage: str
    duration_ms: int
    verdict: str
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Link:
    topic_id: str
    title: str
    url: str

    def to_dict(self) -> dict:
        return {"topic_id": self.topic_id, "title": self.title, "url": self.url}


@dataclass(frozen=True)
class AnswerResponse:
    request_id: str
    outcome: str  # answered | faq-answered | rejected | not-a-question | no-grounding | error
    answer_html: str | None = None
    links: tuple[Link, ...] = ()
    highlighted_terms: tuple[str, ...] = ()
    trace: tuple[StageRecord, ...] = ()


RATINGS = ("helpful", "somewhat-helpful", "unhelpful")


@dataclass(frozen=True)
class FeedbackEvent:
    request_id: str
    rating: str
    at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def __post_init__(self):
        if self.rating not in RATINGS:
            raise ValueError(f"rating must be one of {RATINGS}")


class UnknownRequestId(Exception):
    pass


# --------------------------------------------------------------------------
# Logging sinks

class FileSink:
    """JSONL sink; one line per event, writes serialized per sink."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def write(self, event: dict) -> None:
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")


class WebhookSink:
    """POSTs summary payloads to a team channel webhook."""

    def __init__(self, url: str, timeout: float = 3.0):
        self.url = url
        self.timeout = timeout

    def write(self, event: dict) -> None:
        httpx.post(self.url, json=event, timeout=self.timeout).raise_for_status()


@dataclass
class LogSinks:
    file: FileSink | None = None
    webhook: WebhookSink | None = None
    eval_store: EvalStore | None = None
    on_sink_error: Callable[[str, Exception], None] | None = None

    def _guarded(self, name: str, fn: Callable[[], None]) -> None:
        try:
            fn()
        except Exception as exc:  # sink failures never fail the request
            if self.on_sink_error:
                self.on_sink_error(name, exc)


# --------------------------------------------------------------------------
# Runtime snapshot

@dataclass
class PipelineRuntime:
    """Immutable-by-convention bundle of everything a request needs."""

    corpus: Corpus
    index: LexicalIndex
    guard_policy: GuardPolicy = guard_mod.DEFAULT_POLICY
    classify_rules: classify_mod.ClassifyRules = classify_mod.DEFAULT_RULES
    rewrite_rules: RewriteRules = EMPTY_RULES
    registry: FaqRegistry = field(default_factory=FaqRegistry)
    clients: list[GenerativeClient] = field(default_factory=lambda: [StubGenerativeClient()])
    translator: TranslatorClient = field(default_factory=IdentityTranslator)
    search_policy: SearchPolicy = field(default_factory=SearchPolicy)
    # builtin and external scores are incomparable; exactly one source serves
    # a request
    search_source: str = "builtin"
    search_client: SearchClient | None = None
    sinks: LogSinks = field(default_factory=LogSinks)
    faq_threshold: float = 0.85
    context_budget: int = 4096
    generation_deadline_s: float = 8.0
    total_deadline_s: float = 10.0
    topic_url_base: str = "/topics/"
    max_input_len: int | None = None  # overrides guard policy when set

    def topic_url(self, topic_id: str) -> str:
        return f"{self.topic_url_base}{topic_id}"


def build_runtime(corpus: Corpus, **overrides) -> PipelineRuntime:
    return PipelineRuntime(corpus=corpus, index=build_index(corpus), **overrides)


# --------------------------------------------------------------------------
# Tracing

class _DeadlineExceeded(Exception):
    def __init__(self, stage: str):
        super().__init__(f"deadline exceeded in stage {stage}")
        self.stage = stage


class _Tracer:
    def __init__(self, deadline_s: float):
        self.records: list[StageRecord] = []
        self.started = time.monotonic()
        self.deadline_s = deadline_s

    def add(self, stage: str, began: float, verdict: str, detail: dict | None = None) -> None:
        self.records.append(
            StageRecord(
                stage=stage,
                duration_ms=int((time.monotonic() - began) * 1000),
                verdict=verdict,
                detail=detail or {},
            )
        )
        if time.monotonic() - self.started > self.deadline_s:
            raise _DeadlineExceeded(stage)

    def trace(self) -> tuple[StageRecord, ...]:
        return tuple(self.records)


def _run_search(q: AugmentedQuery, runtime: PipelineRuntime) -> list[TopicHit]:
    if runtime.search_source == "external" and runtime.search_client is not None:
        hits = external_search(
            runtime.search_client,
            q,
            known_ids=set(runtime.corpus.topics),
            strict=False,
        )
        return postprocess_hits(hits, runtime.search_policy, corpus=runtime.corpus)
    return search(runtime.index, q, runtime.search_policy, runtime.corpus)


# --------------------------------------------------------------------------
# Term highlighting and HTML assembly

def highlight_terms(answer: str, q: AugmentedQuery, selection: AnswerSelection) -> list[str]:
    """Question content words present in both the answer and the evidence.

    Order follows first appearance in the answer; hyphenated words stay whole.
    """
    evidence_text = " ".join(s.text for s in selection.evidence_sentences)
    seen: set[str] = set()
    hits: list[tuple[int, str]] = []
    for term in content_words(q.original):
        lowered = term.lower()
        if lowered in seen:
            continue
        seen.add(lowered)
        pattern = re.compile(rf"(?<![\w-]){re.escape(term)}(?![\w-])", re.IGNORECASE)
        m = pattern.search(answer)
        if m and pattern.search(evidence_text):
            hits.append((m.start(), term))
    hits.sort()
    return [term for _, term in hits]


def _wrap_strong(escaped_text: str, terms: list[str]) -> str:
    """Wrap every term occurrence in <strong>, longest terms first."""
    spans: list[tuple[int, int]] = []
    for term in sorted(terms, key=len, reverse=True):
        pattern = re.compile(rf"(?<![\w-]){re.escape(html.escape(term))}(?![\w-])", re.IGNORECASE)
        for m in pattern.finditer(escaped_text):
            if all(m.end() <= s or m.start() >= e for s, e in spans):
                spans.append((m.start(), m.end()))
    out = escaped_text
    for start, end in sorted(spans, reverse=True):
        out = out[:start] + "<strong>" + out[start:end] + "</strong>" + out[end:]
    return out


def _render_answer_html(answer_text: str, terms: list[str], links: list[Link]) -> str:
    body = _wrap_strong(html.escape(answer_text, quote=False), terms)
    parts = [f"<p>{body}</p>"]
    if links:
        items = "".join(
            f'<li><a href="{html.escape(link.url)}">{html.escape(link.title, quote=False)}</a></li>'
            for link in links
        )
        parts.append(f"<ul>{items}</ul>")
    return "".join(parts)


def postprocess_output(
    selection: AnswerSelection,
    original_language: LanguageTag,
    runtime: PipelineRuntime,
    q: AugmentedQuery,
    hits: list[TopicHit],
) -> tuple[str, list[Link], list[str]]:
    """Guard the generated text, translate it back, bold the impactful terms,
    and attach links to the topics the answer is grounded in."""
    screened = screen_input(selection.chosen.text, runtime.guard_policy)
    if screened.verdict == "rejected":
        raise guard_mod.GuardError("generated output rejected by guard")
    answer_text = screened.text
    if original_language.code != "en":
        answer_text = translate(
            answer_text, LanguageTag(code="en"), original_language, runtime.translator
        )
    terms = highlight_terms(answer_text, q, selection)
    rank_order = {hit.topic_id: hit.rank for hit in hits}
    evidence_ids: list[str] = []
    for sentence in selection.evidence_sentences:
        if sentence.topic_id not in evidence_ids:
            evidence_ids.append(sentence.topic_id)
    evidence_ids.sort(key=lambda tid: rank_order.get(tid, len(rank_order) + 1))
    links = []
    for topic_id in evidence_ids:
        topic = runtime.corpus.get(topic_id)
        links.append(
            Link(topic_id=topic_id, title=topic.title if topic else topic_id, url=runtime.topic_url(topic_id))
        )
    answer_html = _render_answer_html(answer_text, terms, links)
    return answer_html, links, terms


# --------------------------------------------------------------------------
# The ask flow

def answer_question(req: AskRequest, runtime: PipelineRuntime) -> AnswerResponse:
    """Run stages A-H in order; early exits still carry a complete trace.

    Internal failures map to outcome=error with the failing stage recorded;
    this function does not raise.
    """
    tracer = _Tracer(runtime.total_deadline_s)
    began_total = time.monotonic()
    try:
        response = _answer(req, runtime, tracer)
    except _DeadlineExceeded as exc:
        response = AnswerResponse(
            request_id=req.request_id,
            outcome="error",
            trace=tracer.trace() + (StageRecord("deadline", 0, "error", {"stage": exc.stage}),),
        )
    except Exception as exc:  # invariant: never an unhandled crash path
        response = AnswerResponse(
            request_id=req.request_id,
            outcome="error",
            trace=tracer.trace() + (StageRecord("internal", 0, "error", {"error": type(exc).__name__}),),
        )
    sinks = runtime.sinks
    sink_names = [
        name
        for name, sink in (("file", sinks.file), ("webhook", sinks.webhook), ("eval", sinks.eval_store))
        if sink is not None
    ]
    response = AnswerResponse(
        request_id=response.request_id,
        outcome=response.outcome,
        answer_html=response.answer_html,
        links=response.links,
        highlighted_terms=response.highlighted_terms,
        trace=response.trace + (StageRecord("log", 0, "ok", {"sinks": sink_names}),),
    )
    _log_response(req, response, runtime, int((time.monotonic() - began_total) * 1000))
    return response


def _answer(req: AskRequest, runtime: PipelineRuntime, tracer: _Tracer) -> AnswerResponse:
    # (A) screen
    began = time.monotonic()
    policy = runtime.guard_policy
    if runtime.max_input_len is not None and len(req.text) > runtime.max_input_len:
        tracer.add("screen", began, "error", {"error": "input too long"})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    try:
        screened = screen_input(req.text, policy)
    except InputTooLong:
        tracer.add("screen", began, "error", {"error": "input too long"})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    tracer.add(
        "screen",
        began,
        screened.verdict,
        {"findings": [f.category for f in screened.findings]},
    )
    if screened.verdict == "rejected":
        return AnswerResponse(request_id=req.request_id, outcome="rejected", trace=tracer.trace())
    text = screened.text

    # (A) language; questions continue in English
    began = time.monotonic()
    language = detect_language(text)
    translated = False
    if language.code != "en":
        try:
            text = translate(text, language, LanguageTag(code="en"), runtime.translator)
            translated = True
        except TranslatorUnavailable as exc:
            tracer.add("language", began, "error", {"error": str(exc)})
            return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    tracer.add(
        "language",
        began,
        language.code,
        {
            "confidence": round(language.confidence, 3),
            "translated": translated,
            "client": runtime.translator.name if translated else "none",
        },
    )

    # (A) classification
    began = time.monotonic()
    qclass = classify_mod.classify_type(text, runtime.classify_rules)
    tracer.add(
        "classify",
        began,
        qclass.qtype,
        # the screened English question; safe for sinks, unlike the raw input
        {"is_question": qclass.is_question, "signals": list(qclass.signals), "question": text},
    )
    if not qclass.is_question:
        # not a question: regular search results only, no generated answer
        began = time.monotonic()
        try:
            hits = _run_search(AugmentedQuery.plain(text), runtime)
        except SearchUnavailable as exc:
            tracer.add("search", began, "error", {"error": str(exc)})
            return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
        tracer.add("search", began, f"{len(hits)} hits", {"hits": [h.topic_id for h in hits]})
        links = _hit_links(hits, runtime)
        return AnswerResponse(
            request_id=req.request_id,
            outcome="not-a-question",
            links=tuple(links),
            trace=tracer.trace(),
        )

    # (B) FAQ
    began = time.monotonic()
    match = match_faq(text, runtime.registry, runtime.faq_threshold)
    if match is not None:
        entry, score = match
        freshness = check_freshness(entry, runtime.corpus)
        if freshness.fresh:
            tracer.add("faq", began, "hit", {"entry": entry.id, "score": round(score, 4), "freshness": "fresh"})
            return _faq_response(req, entry, language, runtime, tracer)
        tracer.add(
            "faq",
            began,
            "stale",
            {
                "entry": entry.id,
                "score": round(score, 4),
                "changed": list(freshness.changed_ids),
                "deleted": list(freshness.deleted_ids),
            },
        )
    else:
        tracer.add("faq", began, "miss", {})

    # (C) rewrite
    began = time.monotonic()
    q = augment_query(text, runtime.rewrite_rules)
    tracer.add(
        "rewrite",
        began,
        "rewritten" if q.rewritten != q.original or q.added_terms else "unchanged",
        {"rewritten": q.rewritten, "added": [t.term for t in q.added_terms]},
    )

    # (D) search + post-process
    began = time.monotonic()
    try:
        hits = _run_search(q, runtime)
    except SearchUnavailable as exc:
        tracer.add("search", began, "error", {"error": str(exc)})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    tracer.add("search", began, f"{len(hits)} hits", {"hits": [h.topic_id for h in hits]})
    if not hits:
        return AnswerResponse(request_id=req.request_id, outcome="no-grounding", trace=tracer.trace())

    # (E) whole-topic grounding
    began = time.monotonic()
    grounding = []
    for hit in hits:
        topic = runtime.corpus.get(hit.topic_id)
        if topic is None:
            continue
        grounding.append(
            GroundingDoc(topic_id=topic.id, title=topic.title, text=extract_grounding_text(topic).text)
        )
    tracer.add("grounding", began, f"{len(grounding)} topics", {"topics": [g.topic_id for g in grounding]})

    # (F) generate
    began = time.monotonic()
    try:
        prompt = build_prompt(q.original, grounding, context_budget=runtime.context_budget)
        candidates = generate_candidates(prompt, runtime.clients, runtime.generation_deadline_s)
        selection = select_best(candidates, prompt)
    except (ContextBudgetExceeded, AllModelsFailed, NoViableCandidate) as exc:
        tracer.add("generate", began, "error", {"error": type(exc).__name__})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    tracer.add(
        "generate",
        began,
        selection.chosen.model_id,
        {
            "candidates": [c.model_id for c in candidates],
            "total": round(selection.scores[selection.chosen.model_id].total, 4),
        },
    )

    # (G) post-process output
    began = time.monotonic()
    try:
        answer_html, links, terms = postprocess_output(selection, language, runtime, q, hits)
    except (guard_mod.GuardError, TranslatorUnavailable) as exc:
        tracer.add("postprocess", began, "error", {"error": type(exc).__name__})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    tracer.add("postprocess", began, "ok", {"links": [l.topic_id for l in links], "highlighted": terms})

    return AnswerResponse(
        request_id=req.request_id,
        outcome="answered",
        answer_html=answer_html,
        links=tuple(links),
        highlighted_terms=tuple(terms),
        trace=tracer.trace(),
    )


def _hit_links(hits: list[TopicHit], runtime: PipelineRuntime) -> list[Link]:
    links = []
    for hit in hits:
        topic = runtime.corpus.get(hit.topic_id)
        links.append(
            Link(
                topic_id=hit.topic_id,
                title=topic.title if topic else hit.topic_id,
                url=runtime.topic_url(hit.topic_id),
            )
        )
    return links


def _faq_response(
    req: AskRequest,
    entry,
    language: LanguageTag,
    runtime: PipelineRuntime,
    tracer: _Tracer,
) -> AnswerResponse:
    began = time.monotonic()
    screened = screen_input(entry.answer_text, runtime.guard_policy)
    if screened.verdict == "rejected":
        tracer.add("postprocess", began, "error", {"error": "curated answer rejected by guard"})
        return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    answer_text = screened.text
    if language.code != "en":
        try:
            answer_text = translate(answer_text, LanguageTag(code="en"), language, runtime.translator)
        except TranslatorUnavailable as exc:
            tracer.add("postprocess", began, "error", {"error": str(exc)})
            return AnswerResponse(request_id=req.request_id, outcome="error", trace=tracer.trace())
    links = []
    for ref in entry.grounding:
        topic = runtime.corpus.get(ref.topic_id)
        links.append(
            Link(
                topic_id=ref.topic_id,
                title=topic.title if topic else ref.topic_id,
                url=runtime.topic_url(ref.topic_id),
            )
        )
    answer_html = _render_answer_html(answer_text, [], links)
    tracer.add("postprocess", began, "ok", {"links": [l.topic_id for l in links], "highlighted": []})
    return AnswerResponse(
        request_id=req.request_id,
        outcome="faq-answered",
        answer_html=answer_html,
        links=tuple(links),
        trace=tracer.trace(),
    )


# --------------------------------------------------------------------------
# Feedback and logging

def record_feedback(
    ev: FeedbackEvent,
    runtime: PipelineRuntime,
    strict: bool = False,
) -> dict:
    """Append feedback to the log and forward it to the eval store.

    Unknown request ids are tolerated as flagged orphans unless strict.
    Duplicate ratings are last-write-wins; every event is still logged.
    """
    store = runtime.sinks.eval_store
    known = bool(store and ev.request_id in store.records)
    if strict and not known:
        raise UnknownRequestId(ev.request_id)
    event = {
        "event": "feedback",
        "request_id": ev.request_id,
        "rating": ev.rating,
        "ts": ev.at,
        "orphan": not known,
    }
    if runtime.sinks.file:
        runtime.sinks._guarded("file", lambda: runtime.sinks.file.write(event))
    if store:
        runtime.sinks._guarded("eval", lambda: store.record_feedback(ev.request_id, ev.rating))
    return {"ok": True, "orphan": not known}


def _log_response(req: AskRequest, response: AnswerResponse, runtime: PipelineRuntime, duration_ms: int) -> None:
    """(H) file line always; webhook summary; eval-store seed.

    Only post-redaction text leaves the pipeline: the screened question is
    recovered from the trace, never from the raw request.
    """
    sinks = runtime.sinks
    question = _screened_question(response)
    qclass = next((r for r in response.trace if r.stage == "classify"), None)
    summary = {
        "event": "response",
        "request_id": req.request_id,
        "ts": req.received_at,
        "question": question,
        "outcome": response.outcome,
        "is_question": bool(qclass.detail.get("is_question")) if qclass else False,
        "qtype": qclass.verdict if qclass else "",
        "links": [{"topic_id": l.topic_id, "title": l.title} for l in response.links],
        "duration_ms": duration_ms,
    }
    if response.outcome == "rejected":
        screen = next((r for r in response.trace if r.stage == "screen"), None)
        summary["findings"] = screen.detail.get("findings", []) if screen else []
    if sinks.file:
        sinks._guarded("file", lambda: sinks.file.write(summary))
    if sinks.webhook:
        payload = {k: summary[k] for k in ("request_id", "ts", "question", "outcome", "links", "duration_ms")}
        sinks._guarded("webhook", lambda: sinks.webhook.write(payload))
    if sinks.eval_store and response.outcome in ("answered", "faq-answered", "no-grounding", "not-a-question"):
        seed = {
            "record_id": req.request_id,
            "question": question,
            "language": _detected_language(response),
            "qclass": summary["qtype"],
            "answer_html": response.answer_html or "",
            "links": [l.to_dict() for l in response.links],
            "outcome": response.outcome,
            "created_at": req.received_at,
        }
        sinks._guarded("eval", lambda: sinks.eval_store.ingest_if_new(seed))


def _screened_question(response: AnswerResponse) -> str:
    if response.outcome == "rejected":
        return ""
    for record in response.trace:
        if record.stage == "classify":
            return record.detail.get("question", "")
    return ""


def _detected_language(response: AnswerResponse) -> str:
    for record in response.trace:
        if record.stage == "language":
            return record.verdict
    return "en"
