"""Topic retrieval: built-in BM25 lexical index, external search client
contract, and hit post-processing.

The built-in index is deterministic and oracle-testable; an external search
API plugs in through SearchClient, but external and builtin scores are never
merged (incomparable scales) — configuration selects one source per request.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Protocol

import httpx

from .corpus import Corpus, Topic, extract_grounding_text
from .rewrite import AugmentedQuery
from .textutil import tokenize


class RetrieveError(Exception):
    pass


class EmptyCorpusIndex(RetrieveError):
    pass


class SearchUnavailable(RetrieveError):
    def __init__(self, reason: str, cause: Exception | None = None):
        super().__init__(f"search unavailable: {reason}")
        self.reason = reason
        self.cause = cause


class MalformedClientResponse(RetrieveError):
    pass


@dataclass(frozen=True)
class TopicHit:
    topic_id: str
    score: float
    rank: int
    source: str = "builtin"  # builtin | external


@dataclass(frozen=True)
class SearchPolicy:
    max_hits: int = 5
    min_score: float = 0.0
    filters: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_hits < 1:
            raise ValueError("max_hits must be >= 1")


def _rank(scored: list[tuple[str, float]]) -> list[TopicHit]:
    """Sort by score descending, ties by topic id ascending; ranks from 1."""
    ordered = sorted(scored, key=lambda pair: (-pair[1], pair[0]))
    return [TopicHit(topic_id=tid, score=score, rank=i + 1) for i, (tid, score) in enumerate(ordered)]


def doc_tokens(topic: Topic, title_weight: int = 2) -> list[str]:
    """Index token stream: grounding text plus title tokens emitted twice."""
    tokens = tokenize(extract_grounding_text(topic).text)
    tokens.extend(tokenize(topic.title) * title_weight)
    return tokens


class LexicalIndex:
    """BM25 (k1=1.2, b=0.75) inverted index over whole-topic grounding text."""

    def __init__(self, corpus: Corpus, k1: float = 1.2, b: float = 0.75, title_weight: int = 2):
        if len(corpus) == 0:
            raise EmptyCorpusIndex("cannot index an empty corpus")
        self.k1 = k1
        self.b = b
        self.doc_ids = sorted(corpus.topics)
        self.doc_len: dict[str, int] = {}
        self.postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
        for doc_id in self.doc_ids:
            tokens = doc_tokens(corpus.topics[doc_id], title_weight)
            self.doc_len[doc_id] = len(tokens)
            for term, freq in sorted(Counter(tokens).items()):
                self.postings[term].append((doc_id, freq))
        self.n_docs = len(self.doc_ids)
        self.avgdl = sum(self.doc_len.values()) / self.n_docs

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def term_scores(self, term: str) -> dict[str, float]:
        """BM25 contribution of one term for every document containing it."""
        idf = self.idf(term)
        scores: dict[str, float] = {}
        for doc_id, freq in self.postings.get(term, ()):
            dl = self.doc_len[doc_id]
            denom = freq + self.k1 * (1.0 - self.b + self.b * dl / self.avgdl)
            scores[doc_id] = idf * freq * (self.k1 + 1.0) / denom
        return scores

    def score_tokens(self, tokens: list[str]) -> dict[str, float]:
        """Sum of per-occurrence term scores over documents."""
        totals: dict[str, float] = defaultdict(float)
        for token in tokens:
            for doc_id, score in self.term_scores(token).items():
                totals[doc_id] += score
        return dict(totals)


def build_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75, title_weight: int = 2) -> LexicalIndex:
    return LexicalIndex(corpus, k1=k1, b=b, title_weight=title_weight)


def search(
    index: LexicalIndex,
    q: AugmentedQuery,
    policy: SearchPolicy = SearchPolicy(),
    corpus: Corpus | None = None,
) -> list[TopicHit]:
    """Score = BM25(rewritten) + sum BM25(added term) + sum (w-1)*BM25(boost).

    Only documents containing at least one query term appear.  Filters and
    min_score apply before truncation to max_hits.
    """
    totals: dict[str, float] = defaultdict(float)
    for doc_id, score in index.score_tokens(tokenize(q.rewritten)).items():
        totals[doc_id] += score
    for added in q.added_terms:
        if added.source == "boost":
            continue  # weighting handled below via boost_terms
        for doc_id, score in index.score_tokens(tokenize(added.term)).items():
            totals[doc_id] += score
    for boost in q.boost_terms:
        for doc_id, score in index.score_tokens(tokenize(boost.term)).items():
            totals[doc_id] += (boost.weight - 1.0) * score
    hits = _rank([(doc_id, score) for doc_id, score in totals.items() if score > 0.0])
    return postprocess_hits(hits, policy, corpus=corpus)


class SearchClient(Protocol):
    def search(self, query: str, terms: list[str], boosts: dict[str, float]) -> dict: ...


class HttpSearchClient:
    """JSON-over-HTTP client for the external search wire contract."""

    def __init__(self, endpoint: str, timeout: float = 5.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def search(self, query: str, terms: list[str], boosts: dict[str, float]) -> dict:
        try:
            response = httpx.post(
                self.endpoint,
                json={"query": query, "terms": terms, "boosts": boosts},
                timeout=self.timeout,
            )
            response.raise_for_status()
            return response.json()
        except httpx.TimeoutException as exc:
            raise SearchUnavailable("timeout", exc) from exc
        except httpx.HTTPError as exc:
            raise SearchUnavailable("transport", exc) from exc


def external_search(
    client: SearchClient,
    q: AugmentedQuery,
    known_ids: set[str] | None = None,
    strict: bool = True,
) -> list[TopicHit]:
    """Normalize external client hits into ranked TopicHits.

    Shape violations always raise MalformedClientResponse.  Hits naming
    unknown topics raise in strict mode and are dropped otherwise (the
    pipeline runs non-strict and logs the drop).
    """
    try:
        response = client.search(
            q.rewritten,
            [t.term for t in q.added_terms],
            {b.term: b.weight for b in q.boost_terms},
        )
    except (SearchUnavailable, MalformedClientResponse):
        raise
    except TimeoutError as exc:
        raise SearchUnavailable("timeout", exc) from exc
    except Exception as exc:
        raise SearchUnavailable("transport", exc) from exc

    if not isinstance(response, dict) or not isinstance(response.get("hits"), list):
        raise MalformedClientResponse(f"expected {{'hits': [...]}}, got {type(response).__name__}")
    scored: list[tuple[str, float]] = []
    for hit in response["hits"]:
        if not isinstance(hit, dict) or "topic_id" not in hit or "score" not in hit:
            raise MalformedClientResponse(f"hit missing topic_id/score: {hit!r}")
        topic_id = hit["topic_id"]
        try:
            score = float(hit["score"])
        except (TypeError, ValueError) as exc:
            raise MalformedClientResponse(f"non-numeric score: {hit!r}") from exc
        if score < 0:
            raise MalformedClientResponse(f"negative score: {hit!r}")
        if known_ids is not None and topic_id not in known_ids:
            if strict:
                raise MalformedClientResponse(f"unknown topic id: {topic_id!r}")
            continue
        scored.append((topic_id, score))
    ordered = sorted(scored, key=lambda pair: (-pair[1], pair[0]))
    return [
        TopicHit(topic_id=tid, score=score, rank=i + 1, source="external")
        for i, (tid, score) in enumerate(ordered)
    ]


def postprocess_hits(
    hits: list[TopicHit],
    policy: SearchPolicy,
    rerank: Callable[[TopicHit, Topic | None], float] | None = None,
    corpus: Corpus | None = None,
) -> list[TopicHit]:
    """Filter, optionally re-score, re-sort with the standard tie-break,
    then truncate to max_hits (truncation always last)."""

    def topic_for(hit: TopicHit) -> Topic | None:
        return corpus.get(hit.topic_id) if corpus else None

    kept = []
    for hit in hits:
        if hit.score < policy.min_score:
            continue
        if policy.filters:
            topic = topic_for(hit)
            if topic is None or not _matches_filters(topic, policy.filters):
                continue
        kept.append(hit)
    if rerank is not None:
        kept = [
            TopicHit(topic_id=h.topic_id, score=rerank(h, topic_for(h)), rank=h.rank, source=h.source)
            for h in kept
        ]
    ordered = sorted(kept, key=lambda h: (-h.score, h.topic_id))[: policy.max_hits]
    return [
        TopicHit(topic_id=h.topic_id, score=h.score, rank=i + 1, source=h.source)
        for i, h in enumerate(ordered)
    ]


def _matches_filters(topic: Topic, filters: dict[str, str]) -> bool:
    for name, expected in filters.items():
        actual = {"language": topic.language, "id": topic.id, "title": topic.title}.get(name)
        if actual != expected:
            return False
    return True
