"""Content-design tooling: lint topics against the RAG writing guidelines and
test whether a draft topic covers real user questions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import Block, BlockKind, Topic, extract_grounding_text
from .faq import question_similarity
from .generate import (
    GenerativeClient,
    GroundingDoc,
    Prompt,
    build_prompt,
    coverage_score,
    generate_candidates,
    groundedness_score,
    select_best,
)


@dataclass(frozen=True)
class LintThresholds:
    max_steps_without_summary: int = 8
    summary_window_blocks: int = 2
    max_nesting_depth: int = 2
    min_alt_words: int = 5
    summary_markers: tuple[str, ...] = ("in summary", "to summarize", "this procedure", "in short")


DEFAULT_THRESHOLDS = LintThresholds()


@dataclass(frozen=True)
class LintFinding:
    guideline: str  # complex-table | unexplained-graphic | missing-summary | list-lead-in | deep-nesting
    block_index: int
    severity: str  # error | warning
    message: str


def lint_topic(topic: Topic, thresholds: LintThresholds = DEFAULT_THRESHOLDS) -> list[LintFinding]:
    """Check a parsed topic against the five writing guidelines."""
    findings: list[LintFinding] = []
    blocks = topic.blocks
    for idx, block in enumerate(blocks):
        if block.kind == BlockKind.TABLE:
            assert block.table is not None
            if block.table.has_spans:
                findings.append(
                    LintFinding("complex-table", idx, "error", "table uses row or column spans")
                )
            elif not block.table.headers:
                findings.append(
                    LintFinding("complex-table", idx, "error", "table lacks column headings")
                )
        elif block.kind == BlockKind.IMAGE:
            if block.adjacent_explanation is None and len(block.alt_text.split()) < thresholds.min_alt_words:
                findings.append(
                    LintFinding(
                        "unexplained-graphic",
                        idx,
                        "warning",
                        "image has no adjacent explanation and a short alt text",
                    )
                )
        elif block.kind == BlockKind.LIST:
            findings.extend(_lint_list(blocks, idx, block, thresholds))
    return findings


def _lint_list(blocks: tuple[Block, ...], idx: int, block: Block, thresholds: LintThresholds) -> list[LintFinding]:
    findings = []
    if block.nesting_depth > thresholds.max_nesting_depth:
        findings.append(
            LintFinding("deep-nesting", idx, "error", f"list nested {block.nesting_depth} levels deep")
        )
    if block.nesting_depth == 0 and not block.continuation:
        lead = blocks[block.lead_in] if block.lead_in is not None else None
        if lead is None or not _introduces_list(lead.text, block):
            findings.append(
                LintFinding("list-lead-in", idx, "error", "list lacks a clear lead-in sentence")
            )
    if block.ordered and len(block.items) > thresholds.max_steps_without_summary:
        if not _summary_nearby(blocks, idx, thresholds):
            findings.append(
                LintFinding(
                    "missing-summary",
                    idx,
                    "warning",
                    f"{len(block.items)}-step procedure has no summary paragraph nearby",
                )
            )
    return findings


def _introduces_list(lead_text: str, block: Block) -> bool:
    if lead_text.rstrip().endswith(":"):
        return True
    mentions = ("following", "these steps", "steps below", "list below", "the list")
    lowered = lead_text.lower()
    return any(m in lowered for m in mentions)


def _summary_nearby(blocks: tuple[Block, ...], idx: int, thresholds: LintThresholds) -> bool:
    window = range(
        max(0, idx - thresholds.summary_window_blocks),
        min(len(blocks), idx + thresholds.summary_window_blocks + 1),
    )
    for j in window:
        if j == idx or blocks[j].kind != BlockKind.PARAGRAPH:
            continue
        lowered = blocks[j].text.lower()
        if any(marker in lowered for marker in thresholds.summary_markers):
            return True
    return False


# --------------------------------------------------------------------------
# Question coverage testing

@dataclass(frozen=True)
class CoverageMatch:
    real_question: str
    best_generated: str
    similarity: float


@dataclass(frozen=True)
class CoverageReport:
    generated_questions: tuple[str, ...]
    matches: tuple[CoverageMatch, ...]
    unmatched_real: tuple[str, ...]
    coverage: float
    threshold: float


_QUESTION_PROMPT = (
    "List the questions a reader could answer using only the topic below, "
    "one per line."
)


def _generation_prompt(draft: Topic) -> Prompt:
    grounding = [GroundingDoc(topic_id=draft.id, title=draft.title, text=extract_grounding_text(draft).text)]
    return build_prompt(_QUESTION_PROMPT, grounding)


def _parse_questions(text: str) -> list[str]:
    questions = []
    for line in text.split("\n"):
        line = re.sub(r"^\s*(?:[-*]|\d+[.)])\s*", "", line).strip()
        if line:
            questions.append(line)
    return questions


def coverage_test(
    draft: Topic,
    real_questions: list[str],
    gen_client: GenerativeClient,
    threshold: float = 0.6,
) -> CoverageReport:
    """Compare client-generated questions against real user questions.

    Every real question lands in exactly one bucket: matched (best generated
    question at or above the similarity threshold) or unmatched.
    """
    if not real_questions:
        raise ValueError("at least one real question required")
    prompt = _generation_prompt(draft)
    candidates = generate_candidates(prompt, [gen_client])
    generated: list[str] = []
    for candidate in candidates:
        generated.extend(_parse_questions(candidate.text))
    matches: list[CoverageMatch] = []
    unmatched: list[str] = []
    for real in real_questions:
        best_q = ""
        best_score = 0.0
        for gen in generated:
            score = question_similarity(real, gen)
            if score > best_score:
                best_q, best_score = gen, score
        if generated and best_score >= threshold:
            matches.append(CoverageMatch(real_question=real, best_generated=best_q, similarity=best_score))
        else:
            unmatched.append(real)
    coverage = len(matches) / len(real_questions)
    return CoverageReport(
        generated_questions=tuple(generated),
        matches=tuple(matches),
        unmatched_real=tuple(unmatched),
        coverage=coverage,
        threshold=threshold,
    )


# --------------------------------------------------------------------------
# Grounded answer check

@dataclass(frozen=True)
class AnswerCheck:
    question: str
    answer: str
    groundedness: float
    coverage: float
    answerable: bool


def grounded_answer_check(
    draft: Topic,
    real_questions: list[str],
    gen_client: GenerativeClient,
    min_groundedness: float = 0.5,
    min_coverage: float = 0.5,
) -> list[AnswerCheck]:
    """Answer each real question from the draft alone and judge the result.

    A question counts as answerable when the generated answer is grounded in
    the draft and covers the question's content words.
    """
    if not real_questions:
        raise ValueError("at least one real question required")
    grounding = [GroundingDoc(topic_id=draft.id, title=draft.title, text=extract_grounding_text(draft).text)]
    checks = []
    for question in real_questions:
        prompt = build_prompt(question, grounding)
        candidates = generate_candidates(prompt, [gen_client])
        selection = select_best(candidates, prompt)
        g = groundedness_score(selection.chosen.text, prompt.grounding)
        c = coverage_score(question, selection.chosen.text)
        checks.append(
            AnswerCheck(
                question=question,
                answer=selection.chosen.text,
                groundedness=g,
                coverage=c,
                answerable=g >= min_groundedness and c >= min_coverage,
            )
        )
    return checks
