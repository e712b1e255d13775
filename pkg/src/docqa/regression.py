"""Batch regression over question-topic-answer triplets.

Cases run through the full pipeline with deterministic stub clients unless
live clients are supplied, so reports are reproducible and diffable; the
config snapshot hash makes silent configuration drift visible.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

from .evalstore import answer_plain_text
from .metrics import score_pair
from .pipeline import AskRequest, PipelineRuntime, answer_question


class CaseParseError(Exception):
    def __init__(self, message: str, path: str, line: int):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class RegressionCase:
    question: str
    expected_topic_ids: tuple[str, ...]
    expected_answer: str
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.expected_topic_ids:
            raise ValueError("expected_topic_ids must be non-empty")


@dataclass(frozen=True)
class CaseResult:
    case_index: int
    question: str
    outcome: str
    retrieval_hit: bool
    answer_text: str
    exact_match: float
    token_f1: float
    bleu: float
    rouge_l: float
    passed: bool


@dataclass(frozen=True)
class RegressionReport:
    cases: tuple[CaseResult, ...]
    hit_rate: float
    mean_exact_match: float
    mean_token_f1: float
    mean_bleu: float
    mean_rouge_l: float
    config_hash: str
    failures: int

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "hit_rate": self.hit_rate,
            "mean_exact_match": self.mean_exact_match,
            "mean_token_f1": self.mean_token_f1,
            "mean_bleu": self.mean_bleu,
            "mean_rouge_l": self.mean_rouge_l,
            "failures": self.failures,
            "cases": [asdict(c) for c in self.cases],
        }


def load_cases(path: str | Path) -> list[RegressionCase]:
    """Parse a JSONL case file; errors carry file and line."""
    path = Path(path)
    cases = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CaseParseError(f"bad JSON: {exc.msg}", str(path), lineno) from exc
        try:
            cases.append(
                RegressionCase(
                    question=data["question"],
                    expected_topic_ids=tuple(data["expected_topic_ids"]),
                    expected_answer=data["expected_answer"],
                    tags=tuple(data.get("tags", ())),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CaseParseError(str(exc), str(path), lineno) from exc
    return cases


def run_case(index: int, case: RegressionCase, runtime: PipelineRuntime) -> CaseResult:
    response = answer_question(AskRequest(text=case.question), runtime)
    # final post-processed hits are what grounding actually used; FAQ-answered
    # responses never searched, so their links stand in
    search_stage = next((r for r in response.trace if r.stage == "search"), None)
    if search_stage is not None:
        hit_ids = set(search_stage.detail.get("hits", ()))
    else:
        hit_ids = {link.topic_id for link in response.links}
    retrieval_hit = bool(hit_ids & set(case.expected_topic_ids))
    answer_text = answer_plain_text(response.answer_html or "")
    scores = score_pair(answer_text, case.expected_answer)
    passed = retrieval_hit and response.outcome in ("answered", "faq-answered")
    return CaseResult(
        case_index=index,
        question=case.question,
        outcome=response.outcome,
        retrieval_hit=retrieval_hit,
        answer_text=answer_text,
        exact_match=scores["exact_match"],
        token_f1=scores["token_f1"],
        bleu=scores["bleu"],
        rouge_l=scores["rouge_l"],
        passed=passed,
    )


def run_regression(
    cases: list[RegressionCase],
    runtime: PipelineRuntime,
    config_hash: str = "",
    parallelism: int = 4,
) -> RegressionReport:
    """Run every case end-to-end; results always come back in case order."""
    results: list[CaseResult] = []
    if not cases:
        raise ValueError("no regression cases to run")
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = [pool.submit(run_case, i, case, runtime) for i, case in enumerate(cases)]
        results = [f.result() for f in futures]
    n = len(results)
    return RegressionReport(
        cases=tuple(results),
        hit_rate=sum(r.retrieval_hit for r in results) / n,
        mean_exact_match=sum(r.exact_match for r in results) / n,
        mean_token_f1=sum(r.token_f1 for r in results) / n,
        mean_bleu=sum(r.bleu for r in results) / n,
        mean_rouge_l=sum(r.rouge_l for r in results) / n,
        config_hash=config_hash,
        failures=sum(not r.passed for r in results),
    )


def write_report(report: RegressionReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
