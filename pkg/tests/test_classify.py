from __future__ import annotations

import json

import pytest

from docqa.classify import classify_type, is_question, load_rules

# hand-labeled query fixture for the rule-table walk
LABELED_QUERIES = [
    ("how do I create a deployment?", True, "how-to"),
    ("pricing", False, "other"),
    ("explain service credentials", True, "other"),
    ("what is the pre-industrial level of co2 on earth?", True, "what-is"),
    ("how do I rotate credentials?", True, "how-to"),
    ("why is my job failing with error 500?", True, "troubleshooting"),
    ("what are service credentials", True, "what-is"),
    ("tell me about quotas", True, "other"),
    ("steps to configure the firewall?", True, "how-to"),
    ("my deployment is not working", False, "other"),
    ("why is the build failing", True, "troubleshooting"),
    ("deployment error 403?", True, "troubleshooting"),
    ("define a service instance", False, "other"),
    ("can I export my data?", True, "other"),
    ("where are audit logs stored?", True, "other"),
    ("install guide", False, "other"),
    ("does the plan include backups?", True, "other"),
    ("how to troubleshoot timeouts", True, "troubleshooting"),
    ("which regions are supported?", True, "other"),
    ("latest release notes", False, "other"),
]


class TestIsQuestion:
    @pytest.mark.parametrize("text,expected,_", LABELED_QUERIES)
    def test_labeled_fixture(self, text, expected, _):
        asking, signals = is_question(text)
        assert asking is expected
        if expected:
            assert signals

    def test_signal_names(self):
        asking, signals = is_question("how do I create a deployment?")
        assert asking
        assert "terminal-question-mark" in signals
        assert "lead-word:how" in signals


class TestClassifyType:
    @pytest.mark.parametrize("text,_,expected", LABELED_QUERIES)
    def test_labeled_fixture(self, text, _, expected):
        assert classify_type(text).qtype == expected

    def test_cascade_resolves_overlap_to_troubleshooting(self):
        # matches both "why is" (what-is family lead) and failure vocabulary;
        # the cascade must resolve to troubleshooting
        result = classify_type("why is my job failing with error 500?")
        assert result.qtype == "troubleshooting"

    def test_non_question_is_other(self):
        result = classify_type("pricing")
        assert result.is_question is False
        assert result.qtype == "other"
        assert result.signals == ()

    def test_question_signals_nonempty(self):
        result = classify_type("what is a deployment?")
        assert result.is_question
        assert result.signals

    def test_determinism(self):
        text = "how do I create a project?"
        assert classify_type(text) == classify_type(text)

    def test_every_input_gets_exactly_one_type(self):
        for text, _, _ in LABELED_QUERIES:
            assert classify_type(text).qtype in ("what-is", "how-to", "troubleshooting", "other")


class TestRuleFile:
    def test_load_custom_cascade(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(
            json.dumps({"billing": [r"\binvoice\b"], "how-to": [r"\bhow\b"]}),
            encoding="utf-8",
        )
        rules = load_rules(path)
        assert classify_type("where is my invoice?", rules).qtype == "billing"
        assert classify_type("how do I pay?", rules).qtype == "how-to"
