from __future__ import annotations

from pathlib import Path

import pytest

from docqa.corpus import Corpus, load_corpus, parse_topic
from docqa.faq import FaqRegistry
from docqa.pipeline import PipelineRuntime
from docqa.retrieve import build_index

CO2_SENTENCE_UNEDITED = (
    "Over the past 400,000 years, CO2 concentrations have shown several cycles "
    "of variation from about 180 parts per million during the deep glaciations "
    "of the Holocene and Pleistocene to 280 parts per million during the "
    "interglacial periods."
)

# the one-phrase edit that lets retrieval-grounded extraction find the answer
CO2_SENTENCE_EDITED = CO2_SENTENCE_UNEDITED[:-1] + " until the pre-industrial era."

CO2_QUESTION = "what is the pre-industrial level of co2 on earth?"

CREDENTIALS_BODY = (
    "<h1>Credentials</h1>"
    "<p>Credentials are the user ID and password for authenticating with the service. "
    "Credentials are important, they prevent others using your service instance.</p>"
)

REAL_CREDENTIAL_QUESTIONS = [
    "Where do I find my credentials?",
    "How do I get my credentials?",
    "Where can I look up my credentials?",
]

GENERATED_CREDENTIAL_QUESTIONS = [
    "What are credentials?",
    "Why are credentials important?",
    "What do credentials prevent?",
]


def co2_topic_file(edited: bool) -> str:
    sentence = CO2_SENTENCE_EDITED if edited else CO2_SENTENCE_UNEDITED
    return (
        "---\n"
        "id: earth-co2\n"
        "title: Atmospheric carbon dioxide\n"
        "lang: en\n"
        "updated: 2024-03-01T00:00:00Z\n"
        "---\n"
        "<h1>Atmospheric carbon dioxide</h1>\n"
        f"<p>The level of CO2 on Earth has varied through geological time. {sentence}</p>\n"
    )


DISTRACTOR_TOPIC_FILE = (
    "---\n"
    "id: earth-other\n"
    "title: Geological periods of the planet\n"
    "lang: en\n"
    "updated: 2024-03-01T00:00:00Z\n"
    "---\n"
    "<h1>Geological periods of the planet</h1>\n"
    "<p>The Holocene is the current geological epoch, following the Pleistocene.</p>\n"
    "<p>Glaciations and interglacial periods alternate across geological time.</p>\n"
)


def write_co2_corpus(root: Path, edited: bool) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "earth-co2.html").write_text(co2_topic_file(edited), encoding="utf-8")
    (root / "earth-other.html").write_text(DISTRACTOR_TOPIC_FILE, encoding="utf-8")
    return root


@pytest.fixture
def co2_corpus_dir(tmp_path) -> Path:
    return write_co2_corpus(tmp_path / "docs", edited=True)


@pytest.fixture
def co2_corpus(co2_corpus_dir) -> Corpus:
    return load_corpus(co2_corpus_dir)


@pytest.fixture
def co2_corpus_unedited(tmp_path) -> Corpus:
    return load_corpus(write_co2_corpus(tmp_path / "docs-unedited", edited=False))


@pytest.fixture
def credentials_topic():
    return parse_topic(CREDENTIALS_BODY, "html-subset", "credentials")


def make_runtime(corpus: Corpus, **overrides) -> PipelineRuntime:
    overrides.setdefault("registry", FaqRegistry())
    return PipelineRuntime(corpus=corpus, index=build_index(corpus), **overrides)


@pytest.fixture
def co2_runtime(co2_corpus) -> PipelineRuntime:
    return make_runtime(co2_corpus)
