"""HTTP wire-contract tests: real clients against a local stub server."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from docqa.generate import GroundingDoc, HttpGenerativeClient, build_prompt
from docqa.pipeline import WebhookSink
from docqa.retrieve import HttpSearchClient, SearchUnavailable, external_search
from docqa.rewrite import AugmentedQuery


class _StubHandler(BaseHTTPRequestHandler):
    received: list[dict] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).received.append({"path": self.path, "body": body})
        if self.path == "/search":
            payload = {"hits": [{"topic_id": "creds", "score": 2.0}, {"topic_id": "deploy", "score": 1.0}]}
        elif self.path == "/generate":
            payload = {"text": "Rotate credentials monthly.", "finish": "complete"}
        elif self.path == "/slow":
            time.sleep(1.0)
            payload = {"hits": []}
        elif self.path == "/hook":
            payload = {"ok": True}
        elif self.path == "/broken":
            self.send_response(500)
            self.end_headers()
            return
        else:
            self.send_response(404)
            self.end_headers()
            return
        data = json.dumps(payload).encode("utf-8")
        try:
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except BrokenPipeError:
            pass  # timed-out clients hang up before the slow route responds

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


@pytest.fixture(autouse=True)
def clear_received():
    _StubHandler.received = []


class TestHttpSearchClient:
    def test_request_and_response_shapes(self, stub_server):
        client = HttpSearchClient(f"{stub_server}/search", timeout=2.0)
        q = AugmentedQuery(
            original="rotate creds",
            rewritten="rotate credentials",
            added_terms=(),
            boost_terms=(),
        )
        hits = external_search(client, q)
        assert [(h.topic_id, h.rank, h.source) for h in hits] == [
            ("creds", 1, "external"),
            ("deploy", 2, "external"),
        ]
        sent = _StubHandler.received[0]["body"]
        assert sent == {"query": "rotate credentials", "terms": [], "boosts": {}}

    def test_timeout_maps_to_unavailable(self, stub_server):
        client = HttpSearchClient(f"{stub_server}/slow", timeout=0.2)
        with pytest.raises(SearchUnavailable) as err:
            external_search(client, AugmentedQuery.plain("q"))
        assert err.value.reason == "timeout"

    def test_http_error_maps_to_transport(self, stub_server):
        client = HttpSearchClient(f"{stub_server}/broken", timeout=2.0)
        with pytest.raises(SearchUnavailable) as err:
            external_search(client, AugmentedQuery.plain("q"))
        assert err.value.reason == "transport"


class TestHttpGenerativeClient:
    def test_request_and_response_shapes(self, stub_server):
        client = HttpGenerativeClient("remote-model", f"{stub_server}/generate", max_tokens=128, timeout=2.0)
        prompt = build_prompt(
            "how do I rotate credentials?",
            [GroundingDoc(topic_id="creds", title="Credentials", text="Rotate credentials monthly.")],
        )
        candidate = client.generate(prompt)
        assert candidate.text == "Rotate credentials monthly."
        assert candidate.finish == "complete"
        assert candidate.model_id == "remote-model"
        sent = _StubHandler.received[0]["body"]
        assert sent["prompt"] == prompt.rendered
        assert sent["max_tokens"] == 128
        assert sent["temperature"] == 0  # pinned for reproducibility


class TestWebhookSink:
    def test_post_delivered(self, stub_server):
        sink = WebhookSink(f"{stub_server}/hook", timeout=2.0)
        sink.write({"request_id": "r1", "outcome": "answered"})
        assert _StubHandler.received[0]["body"]["request_id"] == "r1"

    def test_server_error_raises_for_isolation_layer(self, stub_server):
        sink = WebhookSink(f"{stub_server}/broken", timeout=2.0)
        with pytest.raises(Exception):
            sink.write({"request_id": "r1"})
