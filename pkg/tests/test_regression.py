from __future__ import annotations

import json

import pytest

from docqa.regression import (
    CaseParseError,
    RegressionCase,
    load_cases,
    run_regression,
    write_report,
)
from conftest import CO2_QUESTION


CO2_CASE = RegressionCase(
    question=CO2_QUESTION,
    expected_topic_ids=("earth-co2",),
    expected_answer="280 parts per million during the interglacial periods until the pre-industrial era",
    tags=("paper", "co2"),
)


class TestCaseLoading:
    def test_load_jsonl(self, tmp_path):
        path = tmp_path / "cases.jsonl"
        path.write_text(
            json.dumps(
                {
                    "question": CO2_QUESTION,
                    "expected_topic_ids": ["earth-co2"],
                    "expected_answer": "280 parts per million",
                    "tags": ["co2"],
                }
            )
            + "\n",
            encoding="utf-8",
        )
        cases = load_cases(path)
        assert cases[0].expected_topic_ids == ("earth-co2",)

    def test_parse_error_carries_location(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"question": "q"}\nnot json\n', encoding="utf-8")
        with pytest.raises(CaseParseError) as err:
            load_cases(path)
        assert err.value.line == 1  # missing keys already fail on line 1

    def test_bad_json_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"question": "q", "expected_topic_ids": ["t"], "expected_answer": "a"}\n{broken\n',
            encoding="utf-8",
        )
        with pytest.raises(CaseParseError) as err:
            load_cases(path)
        assert err.value.line == 2

    def test_empty_topic_ids_rejected(self):
        with pytest.raises(ValueError):
            RegressionCase(question="q", expected_topic_ids=(), expected_answer="a")


class TestRunRegression:
    def test_co2_case_hits_and_contains_value(self, co2_runtime):
        report = run_regression([CO2_CASE], co2_runtime, config_hash="abc")
        result = report.cases[0]
        assert result.retrieval_hit is True
        assert "280" in result.answer_text
        assert result.outcome == "answered"
        assert report.hit_rate == 1.0
        assert report.config_hash == "abc"

    def test_identity_expected_answer_scores_one(self, co2_runtime):
        probe = run_regression([CO2_CASE], co2_runtime).cases[0]
        identity_case = RegressionCase(
            question=CO2_QUESTION,
            expected_topic_ids=("earth-co2",),
            expected_answer=probe.answer_text,
        )
        result = run_regression([identity_case], co2_runtime).cases[0]
        assert result.exact_match == 1.0
        assert result.bleu == pytest.approx(1.0)
        assert result.rouge_l == pytest.approx(1.0)
        assert result.token_f1 == pytest.approx(1.0)

    def test_failing_case_counted(self, co2_runtime):
        miss = RegressionCase(
            question="how do I configure kubernetes ingress?",
            expected_topic_ids=("kubernetes",),
            expected_answer="configure the ingress",
        )
        report = run_regression([CO2_CASE, miss], co2_runtime)
        assert report.failures == 1
        assert report.cases[1].retrieval_hit is False
        assert report.cases[1].passed is False

    def test_results_in_case_order(self, co2_runtime):
        cases = [CO2_CASE] * 4
        report = run_regression(cases, co2_runtime, parallelism=3)
        assert [r.case_index for r in report.cases] == [0, 1, 2, 3]

    def test_deterministic_reports(self, co2_runtime):
        a = run_regression([CO2_CASE], co2_runtime, config_hash="h")
        b = run_regression([CO2_CASE], co2_runtime, config_hash="h")
        assert a.to_dict() == b.to_dict()

    def test_aggregates_are_means(self, co2_runtime):
        miss = RegressionCase(
            question="how do I configure kubernetes ingress?",
            expected_topic_ids=("kubernetes",),
            expected_answer="nothing relevant",
        )
        report = run_regression([CO2_CASE, miss], co2_runtime)
        assert report.mean_token_f1 == pytest.approx(
            sum(c.token_f1 for c in report.cases) / len(report.cases)
        )
        assert report.hit_rate == pytest.approx(0.5)

    def test_report_written(self, tmp_path, co2_runtime):
        report = run_regression([CO2_CASE], co2_runtime, config_hash="h")
        out = tmp_path / "report.json"
        write_report(report, out)
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["config_hash"] == "h"
        assert data["cases"][0]["retrieval_hit"] is True
