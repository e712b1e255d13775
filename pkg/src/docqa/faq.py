"""FAQ registry: question matching, freshness against grounding hashes, and
curation of answers evaluated as good.

The registry file is append-only JSON Lines; tombstone lines retire entries
while keeping curation history auditable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

from .corpus import Corpus
from .textutil import content_tokens


class FaqError(Exception):
    pass


class MissingGrounding(FaqError):
    pass


class NotEvaluatedGood(FaqError):
    pass


@dataclass(frozen=True)
class GroundingRef:
    topic_id: str
    content_hash: str


@dataclass(frozen=True)
class FaqEntry:
    id: str
    canonical_question: str
    answer_text: str
    kind: str = "curated"  # hard-coded | curated
    variants: tuple[str, ...] = ()
    grounding: tuple[GroundingRef, ...] = ()
    sensitive: bool = False
    created_at: str = ""

    def __post_init__(self):
        if self.sensitive and self.kind != "hard-coded":
            raise FaqError(f"entry {self.id}: sensitive entries must be hard-coded")
        if self.kind == "curated" and not self.grounding:
            raise FaqError(f"entry {self.id}: curated entries need grounding")


@dataclass(frozen=True)
class Freshness:
    status: str  # fresh | stale
    changed_ids: tuple[str, ...] = ()
    deleted_ids: tuple[str, ...] = ()

    @property
    def fresh(self) -> bool:
        return self.status == "fresh"


class FaqRegistry:
    """Append-only entry store; mutations go through a single writer."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, FaqEntry] = {}
        if self.path and self.path.exists():
            self._replay()

    def _replay(self) -> None:
        assert self.path is not None
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if "tombstone" in record:
                self.entries.pop(record["tombstone"], None)
            else:
                entry = _entry_from_dict(record)
                self.entries[entry.id] = entry

    def _append_line(self, record: dict) -> None:
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def add(self, entry: FaqEntry) -> None:
        self.entries[entry.id] = entry
        self._append_line(_entry_to_dict(entry))

    def tombstone(self, entry_id: str) -> None:
        self.entries.pop(entry_id, None)
        self._append_line({"tombstone": entry_id, "at": _now_iso()})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())


def _entry_to_dict(entry: FaqEntry) -> dict:
    d = asdict(entry)
    d["variants"] = list(entry.variants)
    d["grounding"] = [{"topic_id": g.topic_id, "content_hash": g.content_hash} for g in entry.grounding]
    return d


def _entry_from_dict(d: dict) -> FaqEntry:
    return FaqEntry(
        id=d["id"],
        canonical_question=d["canonical_question"],
        answer_text=d["answer_text"],
        kind=d.get("kind", "curated"),
        variants=tuple(d.get("variants", ())),
        grounding=tuple(GroundingRef(g["topic_id"], g["content_hash"]) for g in d.get("grounding", ())),
        sensitive=d.get("sensitive", False),
        created_at=d.get("created_at", ""),
    )


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def question_similarity(a: str, b: str) -> float:
    """Cosine over content-token sets; the registry-wide match metric."""
    sa = set(content_tokens(a))
    sb = set(content_tokens(b))
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / math.sqrt(len(sa) * len(sb))


def match_faq(
    question: str, registry: FaqRegistry, threshold: float = 0.85
) -> tuple[FaqEntry, float] | None:
    """Best entry scoring at least `threshold`, ties broken by id ascending."""
    best: tuple[float, str, FaqEntry] | None = None
    for entry in registry:
        score = max(
            question_similarity(question, candidate)
            for candidate in (entry.canonical_question, *entry.variants)
        )
        if score < threshold:
            continue
        if best is None or score > best[0] or (score == best[0] and entry.id < best[1]):
            best = (score, entry.id, entry)
    if best is None:
        return None
    return best[2], best[0]


def check_freshness(entry: FaqEntry, corpus: Corpus) -> Freshness:
    """Fresh iff every grounding topic still exists with an unchanged hash.

    Hard-coded entries are curator-owned and always fresh.
    """
    if entry.kind == "hard-coded":
        return Freshness(status="fresh")
    changed = []
    deleted = []
    for ref in entry.grounding:
        topic = corpus.get(ref.topic_id)
        if topic is None:
            deleted.append(ref.topic_id)
        elif topic.content_hash != ref.content_hash:
            changed.append(ref.topic_id)
    if changed or deleted:
        return Freshness(status="stale", changed_ids=tuple(changed), deleted_ids=tuple(deleted))
    return Freshness(status="fresh")


def curate_entry(record, registry: FaqRegistry, corpus: Corpus, entry_id: str | None = None) -> FaqEntry:
    """Turn an eval record judged as a good answer into a curated entry.

    Snapshots the current content hash of each grounding topic so later
    edits invalidate the cached answer.
    """
    if record.verdicts.get("good_answer") != "yes":
        raise NotEvaluatedGood(f"record {record.record_id} lacks a good-answer verdict")
    topic_ids = [link["topic_id"] for link in record.links]
    if not topic_ids:
        raise MissingGrounding(f"record {record.record_id} has no grounding topics")
    grounding = []
    for topic_id in topic_ids:
        topic = corpus.get(topic_id)
        if topic is None:
            raise MissingGrounding(f"grounding topic {topic_id} not in corpus")
        grounding.append(GroundingRef(topic_id=topic_id, content_hash=topic.content_hash))
    entry = FaqEntry(
        id=entry_id or f"faq-{record.record_id}",
        canonical_question=record.question,
        answer_text=record.answer_text,
        kind="curated",
        grounding=tuple(grounding),
        created_at=_now_iso(),
    )
    registry.add(entry)
    return entry
