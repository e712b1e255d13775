from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from docqa.config import AppConfig
from docqa.service import create_app
from conftest import CO2_QUESTION, write_co2_corpus


@pytest.fixture
def client(tmp_path):
    corpus_dir = write_co2_corpus(tmp_path / "docs", edited=True)
    config = AppConfig(
        corpus_root=str(corpus_dir),
        eval_data_dir=str(tmp_path / "eval"),
        log_path=str(tmp_path / "pipeline.jsonl"),
        admin_token="t0ken",
    )
    app = create_app(config)
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


def ask(client, text=CO2_QUESTION, **kwargs):
    return client.post("/ask", json={"text": text}, **kwargs)


class TestAsk:
    def test_valid_ask_answers_with_links(self, client):
        response = ask(client)
        assert response.status_code == 200
        body = response.json()
        assert body["outcome"] == "answered"
        assert body["links"][0]["topic_id"] == "earth-co2"
        assert "280 parts per million" in body["answer_html"]
        assert "trace" not in body

    def test_missing_text_field_is_400(self, client):
        response = client.post("/ask", json={"locale": "en"})
        assert response.status_code == 400

    def test_injection_is_422_with_category(self, client):
        response = ask(client, text="<script>alert(1)</script> how to login")
        assert response.status_code == 422
        detail = response.json()["detail"]
        assert detail["outcome"] == "rejected"
        assert "injection" in detail["categories"]

    def test_trace_requires_debug_and_admin_token(self, client):
        plain = ask(client, params={"debug": 1})
        assert "trace" not in plain.json()
        gated = ask(client, params={"debug": 1}, headers={"X-Admin-Token": "t0ken"})
        trace = gated.json()["trace"]
        assert [r["stage"] for r in trace][:3] == ["screen", "language", "classify"]

    def test_no_stack_traces_in_answers(self, client):
        response = ask(client)
        assert "Traceback" not in response.text


class TestFeedback:
    def test_click_roundtrip(self, client):
        request_id = ask(client).json()["request_id"]
        response = client.post("/feedback", json={"request_id": request_id, "rating": "helpful"})
        assert response.status_code == 200
        assert response.json() == {"ok": True, "orphan": False}

    def test_fourth_rating_rejected(self, client):
        response = client.post("/feedback", json={"request_id": "x", "rating": "amazing"})
        assert response.status_code == 400

    def test_orphan_flagged(self, client):
        response = client.post("/feedback", json={"request_id": "never-seen", "rating": "unhelpful"})
        assert response.json() == {"ok": True, "orphan": True}


class TestEvalEndpoints:
    def annotate(self, client, record_id, verdicts):
        return client.post(f"/eval/records/{record_id}/annotate", json={"verdicts": verdicts})

    def test_records_listed_and_filtered(self, client):
        rid = ask(client).json()["request_id"]
        ask(client, text="pricing")
        everything = client.get("/eval/records").json()
        assert {r["record_id"] for r in everything} >= {rid}
        self.annotate(client, rid, {"article_exists": "yes", "search_success": "no"})
        filtered = client.get("/eval/records", params={"filter": "article_exists=yes AND search_success=no"})
        assert [r["record_id"] for r in filtered.json()] == [rid]

    def test_bad_filter_400(self, client):
        assert client.get("/eval/records", params={"filter": "garbage==="}).status_code == 400

    def test_annotate_roundtrip(self, client):
        rid = ask(client).json()["request_id"]
        response = self.annotate(client, rid, {"valid_question": "yes"})
        assert response.status_code == 200
        assert response.json()["verdicts"]["valid_question"] == "yes"

    def test_workflow_violation_422(self, client):
        rid = ask(client).json()["request_id"]
        self.annotate(client, rid, {"article_exists": "yes", "search_success": "no"})
        response = self.annotate(client, rid, {"good_answer": "yes"})
        assert response.status_code == 422
        assert "good_answer" in response.json()["detail"]

    def test_unknown_record_404(self, client):
        assert self.annotate(client, "ghost", {"valid_question": "yes"}).status_code == 404

    def test_funnel_endpoint(self, client):
        rid = ask(client).json()["request_id"]
        self.annotate(
            client,
            rid,
            {"valid_question": "yes", "correct_class": "yes", "article_exists": "yes", "search_success": "yes"},
        )
        report = client.get("/eval/funnel").json()
        assert report["total"] >= 1
        assert report["stages"][0]["name"] == "valid_question"

    def test_funnel_empty_period_404(self, client):
        response = client.get("/eval/funnel", params={"from": "2999-01-01"})
        assert response.status_code == 404

    def test_stats_endpoint(self, client):
        rid = ask(client).json()["request_id"]
        ask(client, text="pricing")
        client.post("/feedback", json={"request_id": rid, "rating": "helpful"})
        stats = client.get("/eval/stats").json()
        assert stats["answered"] >= 1
        assert stats["feedback_events"] == 1
        share = list(stats["nl_question_share"].values())
        assert share and 0 < share[0] < 1


class TestAdminAndHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body == {"status": "ok", "topics": 2}

    def test_reload_requires_token(self, client):
        assert client.post("/admin/reload").status_code == 403
        ok = client.post("/admin/reload", headers={"X-Admin-Token": "t0ken"})
        assert ok.status_code == 200
        assert ok.json() == {"reloaded": True, "topics": 2}

    def test_reload_picks_up_corpus_edit(self, client, tmp_path):
        before = ask(client).json()["answer_html"]
        page = (tmp_path / "docs" / "earth-co2.html").read_text(encoding="utf-8")
        (tmp_path / "docs" / "earth-co2.html").write_text(
            page.replace("interglacial periods", "interglacial ages"), encoding="utf-8"
        )
        client.post("/admin/reload", headers={"X-Admin-Token": "t0ken"})
        after = ask(client).json()["answer_html"]
        assert before != after
        assert "interglacial ages" in after
