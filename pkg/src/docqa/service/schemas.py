"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class AskBody(BaseModel):
    text: str = Field(min_length=1)
    locale: str | None = None


class LinkModel(BaseModel):
    topic_id: str
    title: str
    url: str


class StageModel(BaseModel):
    stage: str
    duration_ms: int
    verdict: str
    detail: dict


class AskResponseModel(BaseModel):
    request_id: str
    outcome: str
    answer_html: str | None = None
    links: list[LinkModel] = []
    highlighted_terms: list[str] = []
    trace: list[StageModel] | None = None


class FeedbackBody(BaseModel):
    request_id: str
    rating: Literal["helpful", "somewhat-helpful", "unhelpful"]


class FeedbackAck(BaseModel):
    ok: bool
    orphan: bool


class RecordModel(BaseModel):
    record_id: str
    question: str
    language: str
    qclass: str
    answer_html: str
    links: list[dict]
    outcome: str
    created_at: str
    verdicts: dict[str, str]
    key_terms: list[dict]
    tags: list[str]
    feedback: str | None = None


class AnnotateBody(BaseModel):
    verdicts: dict[str, str] = {}
    key_terms: list[dict] | None = None
    tags: list[str] | None = None
    annotator: str = ""


class FunnelStageModel(BaseModel):
    name: str
    count: int
    eligible: int
    excluded_unset: int
    rate: float


class FunnelModel(BaseModel):
    period: str
    total: int
    stages: list[FunnelStageModel]
    content_gap_rate: float
    search_failure_rate: float


class StatsModel(BaseModel):
    nl_question_share: dict[str, float]
    feedback_distribution: dict[str, float] | None
    feedback_rate: float
    answered: int
    feedback_events: int


class HealthModel(BaseModel):
    status: str
    topics: int


class ReloadModel(BaseModel):
    reloaded: bool
    topics: int
