"""Evaluation record store: five-criteria annotation, funnel analytics,
usage statistics, dataset exports, and weekly summaries.

Persistence is an append-only JSONL event log replayed into memory on start;
the log doubles as the annotation audit trail, so verdict history is always
reconstructible.  Single writer, many readers.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .textutil import content_tokens


class EvalStoreError(Exception):
    pass


class DuplicateRecordId(EvalStoreError):
    pass


class UnknownRecord(EvalStoreError):
    pass


class WorkflowViolation(EvalStoreError):
    pass


class BadFilter(EvalStoreError):
    pass


class NothingToExport(EvalStoreError):
    pass


class EmptyPeriod(EvalStoreError):
    pass


VERDICT_NAMES = ("valid_question", "correct_class", "article_exists", "search_success", "good_answer")
VERDICT_VALUES = ("yes", "no", "unset")

INGESTIBLE_OUTCOMES = {"answered", "faq-answered", "no-grounding", "not-a-question"}

_TAG_RE = re.compile(r"<[^>]+>")


def _strip_html(html: str) -> str:
    return re.sub(r"\s+", " ", _TAG_RE.sub(" ", html)).strip()


def answer_plain_text(html: str) -> str:
    """Answer paragraphs as plain text, without the trailing link list."""
    paragraphs = re.findall(r"<p>(.*?)</p>", html, re.DOTALL)
    if paragraphs:
        return _strip_html(" ".join(paragraphs))
    return _strip_html(html)


@dataclass
class EvalRecord:
    record_id: str
    question: str
    language: str = "en"
    qclass: str = ""
    answer_html: str = ""
    links: list[dict] = field(default_factory=list)
    outcome: str = "answered"
    created_at: str = ""
    verdicts: dict[str, str] = field(default_factory=lambda: {name: "unset" for name in VERDICT_NAMES})
    key_terms: list[dict] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    feedback: str | None = None
    audit: list[dict] = field(default_factory=list)

    @property
    def answer_text(self) -> str:
        return answer_plain_text(self.answer_html)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        verdicts = {name: "unset" for name in VERDICT_NAMES}
        verdicts.update(data.get("verdicts", {}))
        return cls(
            record_id=data["record_id"],
            question=data["question"],
            language=data.get("language", "en"),
            qclass=data.get("qclass", ""),
            answer_html=data.get("answer_html", ""),
            links=list(data.get("links", [])),
            outcome=data.get("outcome", "answered"),
            created_at=data.get("created_at", ""),
            verdicts=verdicts,
            key_terms=list(data.get("key_terms", [])),
            tags=list(data.get("tags", [])),
            feedback=data.get("feedback"),
            audit=list(data.get("audit", [])),
        )


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class EvalStore:
    """Append-only event log with an in-memory index."""

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir else None
        self.records: dict[str, EvalRecord] = {}
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._replay()

    @property
    def _log_path(self) -> Path | None:
        return self.data_dir / "records.jsonl" if self.data_dir else None

    def _replay(self) -> None:
        path = self._log_path
        if path is None or not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            if event["event"] == "ingest":
                record = EvalRecord.from_dict(event["record"])
                self.records.setdefault(record.record_id, record)
            elif event["event"] == "annotate":
                record = self.records.get(event["record_id"])
                if record is not None:
                    self._apply_patch(record, event, check=False)
            elif event["event"] == "feedback":
                record = self.records.get(event["record_id"])
                if record is not None:
                    record.feedback = event["rating"]

    def _append(self, event: dict) -> None:
        path = self._log_path
        if path is not None:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    # -- operations

    def ingest_record(self, seed: dict) -> EvalRecord:
        """Store a pipeline seed with verdicts unset; idempotent on record_id."""
        outcome = seed.get("outcome", "")
        if outcome not in INGESTIBLE_OUTCOMES:
            raise EvalStoreError(f"outcome {outcome!r} is not ingestible")
        record_id = seed["record_id"]
        if record_id in self.records:
            raise DuplicateRecordId(record_id)
        record = EvalRecord.from_dict({**seed, "created_at": seed.get("created_at") or _now_iso()})
        self.records[record_id] = record
        self._append({"event": "ingest", "record": record.to_dict()})
        return record

    def ingest_if_new(self, seed: dict) -> EvalRecord | None:
        """Idempotent ingest helper: duplicate seeds become flagged no-ops."""
        try:
            return self.ingest_record(seed)
        except DuplicateRecordId:
            return None
        except EvalStoreError:
            return None

    def _apply_patch(self, record: EvalRecord, event: dict, check: bool = True) -> None:
        patch = event.get("verdicts", {})
        merged = dict(record.verdicts)
        for name, value in patch.items():
            if name not in VERDICT_NAMES:
                raise WorkflowViolation(f"unknown verdict: {name}")
            if value not in VERDICT_VALUES:
                raise WorkflowViolation(f"bad verdict value: {value}")
            merged[name] = value
        if check and merged["good_answer"] == "yes":
            if merged["article_exists"] != "yes" or merged["search_success"] != "yes":
                raise WorkflowViolation(
                    "good_answer=yes requires article_exists=yes and search_success=yes"
                )
        record.verdicts = merged
        if event.get("key_terms") is not None:
            record.key_terms = list(event["key_terms"])
        if event.get("tags") is not None:
            record.tags = list(event["tags"])
        record.audit.append({"annotator": event.get("annotator", ""), "at": event.get("at", "")})

    def annotate_record(
        self,
        record_id: str,
        verdicts: dict[str, str] | None = None,
        key_terms: list[dict] | None = None,
        tags: list[str] | None = None,
        annotator: str = "",
    ) -> EvalRecord:
        record = self.records.get(record_id)
        if record is None:
            raise UnknownRecord(record_id)
        event = {
            "event": "annotate",
            "record_id": record_id,
            "verdicts": verdicts or {},
            "key_terms": key_terms,
            "tags": tags,
            "annotator": annotator,
            "at": _now_iso(),
        }
        self._apply_patch(record, event)
        self._append(event)
        return record

    def record_feedback(self, record_id: str, rating: str) -> None:
        record = self.records.get(record_id)
        if record is not None:
            record.feedback = rating
        self._append({"event": "feedback", "record_id": record_id, "rating": rating, "at": _now_iso()})

    # -- queries

    def query_records(self, filter_expr: str = "") -> list[EvalRecord]:
        """Equality/AND filtering, e.g. `article_exists=yes AND search_success=no`."""
        clauses = parse_filter(filter_expr)
        out = []
        for record in self.records.values():
            if all(_clause_matches(record, name, value) for name, value in clauses):
                out.append(record)
        out.sort(key=lambda r: (r.created_at, r.record_id))
        return out

    def all_records(self) -> list[EvalRecord]:
        return self.query_records("")


_FILTER_FIELDS = {"record_id", "question", "language", "qclass", "outcome", "feedback", "tag"}


def parse_filter(filter_expr: str) -> list[tuple[str, str]]:
    if not filter_expr.strip():
        return []
    clauses = []
    for part in re.split(r"\s+AND\s+", filter_expr.strip(), flags=re.IGNORECASE):
        if "=" not in part:
            raise BadFilter(f"clause without '=': {part!r}")
        name, _, value = part.partition("=")
        name = name.strip()
        value = value.strip().strip('"')
        if name not in _FILTER_FIELDS and name not in VERDICT_NAMES:
            raise BadFilter(f"unknown field: {name!r}")
        clauses.append((name, value))
    return clauses


def _clause_matches(record: EvalRecord, name: str, value: str) -> bool:
    if name in VERDICT_NAMES:
        # accept the workbench's yes/no aliases
        aliases = {"fail": "no", "pass": "yes"}
        return record.verdicts.get(name, "unset") == aliases.get(value.lower(), value.lower())
    if name == "tag":
        return value in record.tags
    return str(getattr(record, name, "")) == value


# --------------------------------------------------------------------------
# Funnel analytics

FUNNEL_STAGES = ("valid_question", "correct_class", "article_exists", "search_success", "good_answer")


@dataclass(frozen=True)
class FunnelStage:
    name: str
    count: int
    eligible: int
    excluded_unset: int

    @property
    def rate(self) -> float:
        return self.count / self.eligible if self.eligible else 0.0


@dataclass(frozen=True)
class FunnelReport:
    period: str
    total: int
    stages: tuple[FunnelStage, ...]
    content_gap_rate: float
    search_failure_rate: float

    def stage(self, name: str) -> FunnelStage:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise KeyError(name)


def funnel_report(records: Iterable[EvalRecord], period: str = "") -> FunnelReport:
    """Stage-wise counts/rates; unset verdicts are excluded, not imputed.

    Gap metrics follow the stage counts: content_gap_rate is the share of
    valid questions with no covering topic; search_failure_rate the share of
    covered questions search failed to ground.
    """
    records = list(records)
    if not records:
        raise EmptyPeriod(f"no records in period {period!r}")
    surviving = records
    stages: list[FunnelStage] = []
    for name in FUNNEL_STAGES:
        eligible = [r for r in surviving if r.verdicts.get(name, "unset") != "unset"]
        excluded = len(surviving) - len(eligible)
        passed = [r for r in eligible if r.verdicts[name] == "yes"]
        stages.append(FunnelStage(name=name, count=len(passed), eligible=len(eligible), excluded_unset=excluded))
        surviving = passed
    by_name = {s.name: s for s in stages}
    article = by_name["article_exists"]
    search = by_name["search_success"]
    content_gap = 1.0 - article.rate if article.eligible else 0.0
    search_failure = 1.0 - search.rate if search.eligible else 0.0
    return FunnelReport(
        period=period,
        total=len(records),
        stages=tuple(stages),
        content_gap_rate=content_gap,
        search_failure_rate=search_failure,
    )


# --------------------------------------------------------------------------
# Dataset exports

@dataclass(frozen=True)
class ExportResult:
    kind: str
    path: str
    rows: int
    excluded: int


def export_datasets(records: Iterable[EvalRecord], kind: str, out_path: str | Path) -> ExportResult:
    """Write one export file; kinds: triplets, classifier-training, term-dictionary."""
    records = list(records)
    out_path = Path(out_path)
    rows: list[dict] = []
    excluded = 0
    if kind == "triplets":
        for r in records:
            if r.verdicts.get("good_answer") != "yes":
                excluded += 1
                continue
            rows.append(
                {
                    "question": r.question,
                    "topic_ids": [link["topic_id"] for link in r.links],
                    "answer_text": r.answer_text,
                }
            )
    elif kind == "classifier-training":
        for r in records:
            if not r.qclass:
                excluded += 1
                continue
            rows.append({"text": r.question, "qtype": r.qclass})
    elif kind == "term-dictionary":
        counts = Counter()
        for r in records:
            for term in r.key_terms:
                counts[term["term"]] += 1
        rows = [{"term": term, "count": count} for term, count in sorted(counts.items())]
    else:
        raise EvalStoreError(f"unknown export kind: {kind!r}")
    if not rows:
        raise NothingToExport(f"no exportable rows for kind {kind!r}")
    with out_path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return ExportResult(kind=kind, path=str(out_path), rows=len(rows), excluded=excluded)


def import_triplets(path: str | Path) -> list[dict]:
    """Read a triplets export back; round-trips exactly."""
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


# --------------------------------------------------------------------------
# Usage statistics over pipeline logs

RATINGS = ("helpful", "somewhat-helpful", "unhelpful")


@dataclass(frozen=True)
class UsageStats:
    nl_question_share: dict[str, float]
    feedback_distribution: dict[str, float] | None  # None when no feedback seen
    feedback_rate: float
    answered: int
    feedback_events: int


def usage_stats(
    log_lines: Iterable[dict],
    bucketer: Callable[[dict], str] | None = None,
) -> UsageStats:
    """Compute NL-question share per bucket plus feedback distribution/rate.

    `log_lines` are parsed pipeline file-sink entries.  The default bucketer
    groups by the `ts` field's YYYY-MM prefix.
    """
    if bucketer is None:
        bucketer = lambda line: str(line.get("ts", ""))[:7]
    per_bucket: dict[str, list[bool]] = {}
    answered = 0
    ratings: Counter = Counter()
    for line in log_lines:
        kind = line.get("event", "response")
        if kind == "feedback":
            if line.get("rating") in RATINGS:
                ratings[line["rating"]] += 1
            continue
        per_bucket.setdefault(bucketer(line), []).append(bool(line.get("is_question")))
        if line.get("outcome") in ("answered", "faq-answered"):
            answered += 1
    share = {
        bucket: (sum(flags) / len(flags) if flags else 0.0)
        for bucket, flags in sorted(per_bucket.items())
    }
    total_feedback = sum(ratings.values())
    distribution = (
        {rating: ratings[rating] / total_feedback for rating in RATINGS} if total_feedback else None
    )
    rate = total_feedback / answered if answered else 0.0
    return UsageStats(
        nl_question_share=share,
        feedback_distribution=distribution,
        feedback_rate=rate,
        answered=answered,
        feedback_events=total_feedback,
    )


# --------------------------------------------------------------------------
# Weekly summary

def weekly_summary(
    records: Iterable[EvalRecord],
    period: str,
    sink: Callable[[dict], None] | None = None,
    fallback_path: str | Path | None = None,
    top_k: int = 10,
) -> dict:
    """Build the weekly question-theme payload and post it to the sink.

    Sink failures never raise; the payload is persisted locally instead.
    """
    records = list(records)
    counts: Counter = Counter()
    for record in records:
        counts.update(content_tokens(record.question))
    themes = [{"term": term, "count": count} for term, count in counts.most_common(top_k)]
    payload: dict = {"period": period, "count": len(records), "top_themes": themes}
    if records:
        report = funnel_report(records, period)
        payload["funnel"] = {
            "stages": [
                {"name": s.name, "count": s.count, "eligible": s.eligible, "rate": s.rate}
                for s in report.stages
            ],
            "content_gap_rate": report.content_gap_rate,
            "search_failure_rate": report.search_failure_rate,
        }
    if sink is not None:
        try:
            sink(payload)
        except Exception:
            if fallback_path is not None:
                Path(fallback_path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return payload
