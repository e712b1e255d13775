"""Documentation topics: parsing, flattening, grounding text, hashing, loading.

Topics are parsed from a strict subset of HTML or Markdown.  Elements outside
the subset are hard errors, never silent drops: a dropped element would
silently corrupt the grounding text that answers are generated from.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path


class CorpusError(Exception):
    """Base class for corpus problems."""


class MalformedMarkup(CorpusError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnsupportedElement(CorpusError):
    def __init__(self, element: str, line: int = 0):
        super().__init__(f"line {line}: unsupported element '{element}'")
        self.element = element
        self.line = line


class SpannedTable(CorpusError):
    """Raised when a table with row/col spans reaches flattening."""


class DuplicateTopicId(CorpusError):
    def __init__(self, topic_id: str, paths: tuple[str, str]):
        super().__init__(f"duplicate topic id '{topic_id}': {paths[0]} and {paths[1]}")
        self.topic_id = topic_id


class EmptyCorpus(CorpusError):
    pass


class BlockKind(str, Enum):
    PARAGRAPH = "paragraph"
    HEADING = "heading"
    LIST = "list"
    TABLE = "table"
    CODE = "code"
    IMAGE = "image"


@dataclass(frozen=True)
class Table:
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    has_spans: bool = False


@dataclass(frozen=True)
class FlattenedTable:
    row_lists: list[list[str]]
    column_lists: list[list[str]]


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    nesting_depth: int = 0
    text: str = ""
    level: int = 0  # headings
    ordered: bool = False  # lists
    items: tuple[str, ...] = ()  # lists
    lead_in: int | None = None  # index of the paragraph introducing a list
    continuation: bool = False  # list run resumed after a nested sub-list
    table: Table | None = None
    alt_text: str = ""  # images
    adjacent_explanation: int | None = None  # index of a paragraph next to an image


@dataclass(frozen=True)
class Topic:
    id: str
    title: str
    language: str
    blocks: tuple[Block, ...]
    source_path: str = ""
    last_updated: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)
    content_hash: str = ""


@dataclass(frozen=True)
class BlockSpan:
    start: int
    end: int
    block_index: int


@dataclass(frozen=True)
class GroundingText:
    text: str
    spans: tuple[BlockSpan, ...]


_WS_RE = re.compile(r"\s+")


def _squash(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


# --------------------------------------------------------------------------
# HTML subset parsing

_HEADING_TAGS = {"h1": 1, "h2": 2, "h3": 3, "h4": 4, "h5": 5, "h6": 6}
_ALLOWED_TAGS = set(_HEADING_TAGS) | {"p", "ul", "ol", "li", "table", "tr", "th", "td", "pre", "img"}


class _SubsetHTMLParser(HTMLParser):
    """Strict parser for the topic HTML subset.

    Tracks open-element structure itself because HTMLParser is tolerant of
    unbalanced markup and we must reject it.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[dict] = []
        self.stack: list[str] = []
        self.text_parts: list[str] = []
        self.list_stack: list[dict] = []  # {ordered, depth, items, dirty}
        self.table: dict | None = None
        self.row: list[str] | None = None
        self.row_is_header = False

    # -- helpers

    def _line(self) -> int:
        return self.getpos()[0]

    def _fail(self, msg: str) -> None:
        raise MalformedMarkup(msg, self._line())

    def _flush_list_run(self) -> None:
        if self.list_stack:
            ctx = self.list_stack[-1]
            if ctx["items"]:
                self.blocks.append(
                    {
                        "kind": BlockKind.LIST,
                        "ordered": ctx["ordered"],
                        "items": tuple(ctx["items"]),
                        "nesting_depth": ctx["depth"],
                        "continuation": ctx["dirty"],
                    }
                )
                ctx["items"] = []
                ctx["dirty"] = True

    # -- HTMLParser hooks

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag == "img":
            self.handle_startendtag(tag, attrs)
            return
        if tag not in _ALLOWED_TAGS:
            raise UnsupportedElement(tag, self._line())
        parent = self.stack[-1] if self.stack else None

        if tag in ("p", "pre") or tag in _HEADING_TAGS:
            if parent is not None:
                self._fail(f"<{tag}> must be a top-level element")
            self.text_parts = []
        elif tag in ("ul", "ol"):
            if parent not in (None, "li"):
                self._fail(f"<{tag}> allowed only at top level or inside <li>")
            if parent == "li":
                item = _squash("".join(self.text_parts))
                if item:
                    self.list_stack[-1]["items"].append(item)
                self.text_parts = []
                self._flush_list_run()
            depth = len(self.list_stack)
            self.list_stack.append({"ordered": tag == "ol", "depth": depth, "items": [], "dirty": False})
        elif tag == "li":
            if parent not in ("ul", "ol"):
                self._fail("<li> outside a list")
            self.text_parts = []
        elif tag == "table":
            if parent is not None:
                self._fail("<table> must be a top-level element")
            self.table = {"headers": (), "rows": [], "has_spans": False, "saw_row": False}
        elif tag == "tr":
            if parent != "table":
                self._fail("<tr> outside a table")
            self.row = []
            self.row_is_header = True
        elif tag in ("th", "td"):
            if parent != "tr":
                self._fail(f"<{tag}> outside a table row")
            if tag == "td":
                self.row_is_header = False
            for name, value in attrs:
                if name in ("rowspan", "colspan"):
                    try:
                        if int(value or "1") > 1:
                            self.table["has_spans"] = True  # type: ignore[index]
                    except ValueError:
                        self.table["has_spans"] = True  # type: ignore[index]
            self.text_parts = []
        self.stack.append(tag)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag != "img":
            raise UnsupportedElement(tag, self._line())
        if self.stack:
            self._fail("<img> must be a top-level element")
        alt = next((v or "" for k, v in attrs if k == "alt"), "")
        self.blocks.append({"kind": BlockKind.IMAGE, "alt_text": _squash(alt)})

    def handle_endtag(self, tag: str) -> None:
        if not self.stack or self.stack[-1] != tag:
            self._fail(f"unbalanced </{tag}>")
        self.stack.pop()
        text = "".join(self.text_parts)

        if tag in ("th", "td"):
            assert self.row is not None
            self.row.append(_squash(text))
            self.text_parts = []
            return
        if tag == "p":
            self.blocks.append({"kind": BlockKind.PARAGRAPH, "text": _squash(text)})
        elif tag in _HEADING_TAGS:
            self.blocks.append({"kind": BlockKind.HEADING, "text": _squash(text), "level": _HEADING_TAGS[tag]})
        elif tag == "pre":
            self.blocks.append({"kind": BlockKind.CODE, "text": text.strip("\n")})
        elif tag == "li":
            item = _squash(text)
            if item:
                self.list_stack[-1]["items"].append(item)
            elif not self.list_stack[-1]["dirty"]:
                self._fail("empty list item")
        elif tag in ("ul", "ol"):
            self._flush_list_run()
            self.list_stack.pop()
        elif tag == "tr":
            assert self.table is not None and self.row is not None
            if self.row_is_header and not self.table["saw_row"] and self.row:
                self.table["headers"] = tuple(self.row)
            else:
                self.table["rows"].append(tuple(self.row))
            self.table["saw_row"] = True
            self.row = None
        elif tag == "table":
            assert self.table is not None
            table = Table(
                headers=self.table["headers"],
                rows=tuple(self.table["rows"]),
                has_spans=self.table["has_spans"],
            )
            if table.headers and not table.has_spans:
                for r in table.rows:
                    if len(r) != len(table.headers):
                        self._fail("table row arity differs from headers")
            self.blocks.append({"kind": BlockKind.TABLE, "table": table})
            self.table = None
        self.text_parts = []

    def handle_data(self, data: str) -> None:
        parent = self.stack[-1] if self.stack else None
        if parent in ("p", "pre", "li", "th", "td") or parent in _HEADING_TAGS:
            self.text_parts.append(data)
        elif data.strip():
            self._fail("text outside a block element")

    def close(self) -> None:
        super().close()
        if self.stack:
            raise MalformedMarkup(f"unclosed <{self.stack[-1]}>", self.getpos()[0])


def _parse_html_blocks(raw: str) -> list[dict]:
    parser = _SubsetHTMLParser()
    parser.feed(raw)
    parser.close()
    return parser.blocks


# --------------------------------------------------------------------------
# Markdown subset parsing

_MD_HEADING_RE = re.compile(r"^(#{1,6})\s+(.*)$")
_MD_ITEM_RE = re.compile(r"^(\s*)(?:([-*])|(\d+)[.)])\s+(.*)$")
_MD_IMAGE_RE = re.compile(r"^!\[([^\]]*)\]\(([^)]*)\)\s*$")
_MD_TABLE_ROW_RE = re.compile(r"^\s*\|.*\|\s*$")
_MD_TABLE_SEP_RE = re.compile(r"^\s*\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$")


def _md_split_row(line: str) -> tuple[str, ...]:
    return tuple(cell.strip() for cell in line.strip().strip("|").split("|"))


def _parse_markdown_blocks(raw: str) -> list[dict]:
    blocks: list[dict] = []
    lines = raw.split("\n")
    i = 0
    n = len(lines)

    def flush_paragraph(parts: list[str]) -> None:
        text = _squash(" ".join(parts))
        if text:
            blocks.append({"kind": BlockKind.PARAGRAPH, "text": text})

    while i < n:
        line = lines[i]
        lineno = i + 1
        if not line.strip():
            i += 1
            continue
        if line.lstrip().startswith(">"):
            raise UnsupportedElement("blockquote", lineno)
        m = _MD_HEADING_RE.match(line)
        if m:
            blocks.append({"kind": BlockKind.HEADING, "text": _squash(m.group(2)), "level": len(m.group(1))})
            i += 1
            continue
        if line.strip().startswith("```"):
            fence_line = i
            i += 1
            code: list[str] = []
            while i < n and not lines[i].strip().startswith("```"):
                code.append(lines[i])
                i += 1
            if i >= n:
                raise MalformedMarkup("unterminated code fence", fence_line + 1)
            blocks.append({"kind": BlockKind.CODE, "text": "\n".join(code)})
            i += 1
            continue
        m = _MD_IMAGE_RE.match(line)
        if m:
            blocks.append({"kind": BlockKind.IMAGE, "alt_text": _squash(m.group(1))})
            i += 1
            continue
        if _MD_TABLE_ROW_RE.match(line):
            if i + 1 >= n or not _MD_TABLE_SEP_RE.match(lines[i + 1]):
                raise MalformedMarkup("table header without separator row", lineno)
            headers = _md_split_row(line)
            i += 2
            rows: list[tuple[str, ...]] = []
            while i < n and _MD_TABLE_ROW_RE.match(lines[i]):
                row = _md_split_row(lines[i])
                if len(row) != len(headers):
                    raise MalformedMarkup("table row arity differs from headers", i + 1)
                rows.append(row)
                i += 1
            blocks.append({"kind": BlockKind.TABLE, "table": Table(headers=headers, rows=tuple(rows))})
            continue
        m = _MD_ITEM_RE.match(line)
        if m:
            # contiguous item runs at one depth become one list block
            run_depth = len(m.group(1)) // 2
            run_ordered = m.group(2) is None
            items: list[str] = []
            seen_depths: set[int] = set()
            while i < n:
                m2 = _MD_ITEM_RE.match(lines[i])
                if not m2:
                    break
                depth = len(m2.group(1)) // 2
                ordered = m2.group(3) is not None
                if depth != run_depth or ordered != run_ordered:
                    if not items:
                        run_depth, run_ordered = depth, ordered
                    else:
                        break
                item = _squash(m2.group(4))
                if not item:
                    raise MalformedMarkup("empty list item", i + 1)
                items.append(item)
                seen_depths.add(depth)
                i += 1
            blocks.append(
                {
                    "kind": BlockKind.LIST,
                    "ordered": run_ordered,
                    "items": tuple(items),
                    "nesting_depth": run_depth,
                    "continuation": bool(blocks)
                    and blocks[-1]["kind"] == BlockKind.LIST
                    and blocks[-1]["nesting_depth"] > run_depth,
                }
            )
            continue
        # paragraph: consecutive plain lines
        parts = []
        while i < n and lines[i].strip() and not (
            _MD_HEADING_RE.match(lines[i])
            or _MD_ITEM_RE.match(lines[i])
            or _MD_IMAGE_RE.match(lines[i])
            or _MD_TABLE_ROW_RE.match(lines[i])
            or lines[i].strip().startswith("```")
            or lines[i].lstrip().startswith(">")
        ):
            parts.append(lines[i])
            i += 1
        flush_paragraph(parts)
    return blocks


# --------------------------------------------------------------------------
# Topic assembly

def _link_context(blocks: list[dict]) -> tuple[Block, ...]:
    """Freeze raw block dicts, wiring list lead-ins and image explanations."""
    out: list[Block] = []
    for idx, b in enumerate(blocks):
        kind = b["kind"]
        lead_in = None
        adjacent = None
        if kind == BlockKind.LIST and not b.get("continuation") and b.get("nesting_depth", 0) == 0:
            if idx > 0 and blocks[idx - 1]["kind"] == BlockKind.PARAGRAPH:
                lead_in = idx - 1
        if kind == BlockKind.IMAGE:
            if idx > 0 and blocks[idx - 1]["kind"] == BlockKind.PARAGRAPH:
                adjacent = idx - 1
            elif idx + 1 < len(blocks) and blocks[idx + 1]["kind"] == BlockKind.PARAGRAPH:
                adjacent = idx + 1
        out.append(
            Block(
                kind=kind,
                nesting_depth=b.get("nesting_depth", 0),
                text=b.get("text", ""),
                level=b.get("level", 0),
                ordered=b.get("ordered", False),
                items=b.get("items", ()),
                lead_in=lead_in,
                continuation=b.get("continuation", False),
                table=b.get("table"),
                alt_text=b.get("alt_text", ""),
                adjacent_explanation=adjacent,
            )
        )
    return tuple(out)


def parse_topic(
    raw: str,
    format: str,
    id: str,
    *,
    title: str | None = None,
    language: str = "en",
    last_updated: datetime | None = None,
    source_path: str = "",
) -> Topic:
    """Parse topic body markup into a Topic with a computed content hash.

    `format` is "html-subset" or "markdown-subset".  Raises MalformedMarkup
    for unbalanced or empty input, UnsupportedElement for anything outside
    the subset; both carry the offending line number.
    """
    if not raw.strip():
        raise MalformedMarkup("empty topic body", 1)
    if format == "html-subset":
        raw_blocks = _parse_html_blocks(raw)
    elif format == "markdown-subset":
        raw_blocks = _parse_markdown_blocks(raw)
    else:
        raise ValueError(f"unknown format: {format!r}")
    if not raw_blocks:
        raise MalformedMarkup("no blocks parsed", 1)
    blocks = _link_context(raw_blocks)
    if title is None:
        title = next((b.text for b in blocks if b.kind == BlockKind.HEADING), id)
    topic = Topic(
        id=id,
        title=title,
        language=language,
        blocks=blocks,
        source_path=source_path,
        last_updated=last_updated or datetime(1970, 1, 1, tzinfo=timezone.utc),
    )
    return Topic(
        id=topic.id,
        title=topic.title,
        language=topic.language,
        blocks=topic.blocks,
        source_path=topic.source_path,
        last_updated=topic.last_updated,
        content_hash=topic_hash(topic),
    )


# --------------------------------------------------------------------------
# Table flattening

def flatten_table(t: Table) -> FlattenedTable:
    """Row-wise and column-wise "key: cell" views of a span-free table.

    Row view keys cells by column header (positional "colN" when the table
    has no headers); column view keys cells by the first cell of their row.
    """
    if t.has_spans:
        raise SpannedTable("table has row or column spans")
    width = max((len(r) for r in t.rows), default=len(t.headers))
    keys = list(t.headers) if t.headers else [f"col{j + 1}" for j in range(width)]
    row_lists = [
        [f"{keys[j]}: {cell}" for j, cell in enumerate(row)]
        for row in t.rows
    ]
    column_lists = [
        [f"{row[0]}: {row[j]}" for row in t.rows if j < len(row)]
        for j in range(width)
    ]
    return FlattenedTable(row_lists=row_lists, column_lists=column_lists)


# --------------------------------------------------------------------------
# Grounding text

def _render_block(block: Block) -> str:
    if block.kind == BlockKind.HEADING:
        return "#" * block.level + " " + block.text
    if block.kind == BlockKind.PARAGRAPH:
        return block.text
    if block.kind == BlockKind.CODE:
        return block.text
    if block.kind == BlockKind.IMAGE:
        return f"Image: {block.alt_text}"
    if block.kind == BlockKind.LIST:
        indent = "  " * block.nesting_depth
        lines = []
        for i, item in enumerate(block.items, start=1):
            marker = f"{i}." if block.ordered else "-"
            lines.append(f"{indent}{marker} {item}")
        return "\n".join(lines)
    if block.kind == BlockKind.TABLE:
        table = block.table
        assert table is not None
        if table.has_spans:
            # spanned tables cannot be flattened faithfully; keep raw cells
            lines = ["Table:"]
            if table.headers:
                lines.append("- " + " | ".join(table.headers))
            lines.extend("- " + " | ".join(row) for row in table.rows)
            return "\n".join(lines)
        flat = flatten_table(table)
        lines = ["Rows:"]
        lines.extend("- " + "; ".join(row) for row in flat.row_lists)
        lines.append("Columns:")
        lines.extend("- " + "; ".join(col) for col in flat.column_lists)
        return "\n".join(lines)
    raise AssertionError(f"unrenderable block kind {block.kind}")


def extract_grounding_text(topic: Topic) -> GroundingText:
    """Whole-topic linear text with per-block offsets.

    Tables appear as both flattened views; image alt text is inlined.
    Spans are ordered, non-overlapping, and cover every character outside
    the two-newline block separators.
    """
    parts: list[str] = []
    spans: list[BlockSpan] = []
    pos = 0
    for idx, block in enumerate(topic.blocks):
        rendered = _render_block(block)
        if not rendered:
            continue
        if parts:
            pos += 2  # "\n\n"
        spans.append(BlockSpan(start=pos, end=pos + len(rendered), block_index=idx))
        parts.append(rendered)
        pos += len(rendered)
    return GroundingText(text="\n\n".join(parts), spans=tuple(spans))


def topic_hash(topic: Topic) -> str:
    """sha256 of the whitespace-normalized grounding text."""
    normalized = _squash(extract_grounding_text(topic).text)
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# Corpus loading

DIGEST_ALGORITHM = "sha256"

_META_KEYS = {"id", "title", "lang", "updated"}


def _parse_metadata(raw: str, path: str) -> tuple[dict[str, str], str]:
    lines = raw.split("\n")
    if not lines or lines[0].strip() != "---":
        raise MalformedMarkup("missing metadata header", 1)
    meta: dict[str, str] = {}
    for i, line in enumerate(lines[1:], start=2):
        if line.strip() == "---":
            missing = _META_KEYS - meta.keys()
            if missing:
                raise MalformedMarkup(f"metadata missing keys: {sorted(missing)}", i)
            return meta, "\n".join(lines[i:])
        if ":" not in line:
            raise MalformedMarkup("metadata line without ':'", i)
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    raise MalformedMarkup("unterminated metadata header", len(lines))


def _parse_updated(value: str, path: str) -> datetime:
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise MalformedMarkup(f"bad 'updated' timestamp in {path}: {value}") from exc


def load_topic_file(path: Path) -> Topic:
    """Parse one topic file (metadata header plus subset body)."""
    raw = path.read_text(encoding="utf-8")
    meta, body = _parse_metadata(raw, str(path))
    fmt = "markdown-subset" if path.suffix.lower() in (".md", ".markdown") else "html-subset"
    return parse_topic(
        body,
        fmt,
        meta["id"],
        title=meta["title"],
        language=meta["lang"],
        last_updated=_parse_updated(meta["updated"], str(path)),
        source_path=str(path),
    )


@dataclass(frozen=True)
class Corpus:
    """Immutable set of loaded topics; safe for concurrent reads."""

    topics: dict[str, Topic]
    failures: dict[str, str] = field(default_factory=dict)
    digest_algorithm: str = DIGEST_ALGORITHM

    def get(self, topic_id: str) -> Topic | None:
        return self.topics.get(topic_id)

    def __len__(self) -> int:
        return len(self.topics)

    def __iter__(self):
        return iter(self.topics.values())

    @property
    def ids(self) -> list[str]:
        return sorted(self.topics)


def load_corpus(root: str | Path) -> Corpus:
    """Load every topic under `root` (or those listed in corpus.json).

    Per-file parse failures are collected, not fatal.  Duplicate topic ids
    and an empty result are fatal.
    """
    root = Path(root)
    manifest = root / "corpus.json"
    if manifest.exists():
        entries = json.loads(manifest.read_text(encoding="utf-8"))
        paths = [root / e["path"] for e in entries]
    else:
        paths = sorted(
            p for p in root.rglob("*") if p.suffix.lower() in (".html", ".htm", ".md", ".markdown")
        )
    topics: dict[str, Topic] = {}
    sources: dict[str, str] = {}
    failures: dict[str, str] = {}
    for path in paths:
        try:
            topic = load_topic_file(path)
        except CorpusError as exc:
            failures[str(path)] = str(exc)
            continue
        if topic.id in topics:
            raise DuplicateTopicId(topic.id, (sources[topic.id], str(path)))
        topics[topic.id] = topic
        sources[topic.id] = str(path)
    if not topics:
        raise EmptyCorpus(f"no loadable topics under {root}")
    return Corpus(topics=topics, failures=failures)
