"""FastAPI service wrapping the pipeline, eval store, and admin surface."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..bootstrap import build_runtime_from_config
from ..config import AppConfig
from ..evalstore import (
    BadFilter,
    EmptyPeriod,
    EvalStore,
    UnknownRecord,
    WorkflowViolation,
    funnel_report,
    usage_stats,
)
from ..pipeline import AnswerResponse, AskRequest, FeedbackEvent, PipelineRuntime, answer_question, record_feedback
from .schemas import (
    AnnotateBody,
    AskBody,
    AskResponseModel,
    FeedbackAck,
    FeedbackBody,
    FunnelModel,
    FunnelStageModel,
    HealthModel,
    LinkModel,
    RecordModel,
    ReloadModel,
    StageModel,
    StatsModel,
)


class AppState:
    """Holds the current runtime snapshot; reload swaps it atomically."""

    def __init__(self, config: AppConfig, runtime: PipelineRuntime | None = None):
        self.config = config
        self.eval_store = EvalStore(config.eval_data_dir) if config.eval_data_dir else EvalStore()
        self.runtime = runtime or build_runtime_from_config(config, eval_store=self.eval_store)
        if runtime is not None and runtime.sinks.eval_store is not None:
            self.eval_store = runtime.sinks.eval_store

    def reload(self) -> None:
        self.runtime = build_runtime_from_config(self.config, eval_store=self.eval_store)


def _response_model(response: AnswerResponse, include_trace: bool) -> AskResponseModel:
    return AskResponseModel(
        request_id=response.request_id,
        outcome=response.outcome,
        answer_html=response.answer_html,
        links=[LinkModel(**l.to_dict()) for l in response.links],
        highlighted_terms=list(response.highlighted_terms),
        trace=[
            StageModel(stage=r.stage, duration_ms=r.duration_ms, verdict=r.verdict, detail=r.detail)
            for r in response.trace
        ]
        if include_trace
        else None,
    )


def _record_model(record) -> RecordModel:
    return RecordModel(
        record_id=record.record_id,
        question=record.question,
        language=record.language,
        qclass=record.qclass,
        answer_html=record.answer_html,
        links=record.links,
        outcome=record.outcome,
        created_at=record.created_at,
        verdicts=record.verdicts,
        key_terms=record.key_terms,
        tags=record.tags,
        feedback=record.feedback,
    )


def create_app(config: AppConfig | None = None, runtime: PipelineRuntime | None = None) -> FastAPI:
    config = config or AppConfig()
    state = AppState(config, runtime=runtime)
    app = FastAPI(title="docqa", version="0.1.0")
    app.state.docqa = state

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # schema violations are client errors, not unprocessable pipeline output
        return JSONResponse(status_code=400, content={"detail": "invalid request body"})

    @app.exception_handler(Exception)
    async def internal_handler(request: Request, exc: Exception):
        # never leak stack traces
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    def _admin_ok(token: str | None) -> bool:
        return bool(state.config.admin_token) and token == state.config.admin_token

    @app.post("/ask", response_model=AskResponseModel, response_model_exclude_none=True)
    async def ask(
        body: AskBody,
        debug: int = Query(default=0),
        x_admin_token: str | None = Header(default=None),
    ):
        response = answer_question(
            AskRequest(text=body.text, client_locale=body.locale), state.runtime
        )
        if response.outcome == "rejected":
            screen = next((r for r in response.trace if r.stage == "screen"), None)
            categories = screen.detail.get("findings", []) if screen else []
            raise HTTPException(status_code=422, detail={"outcome": "rejected", "categories": categories})
        include_trace = bool(debug) and _admin_ok(x_admin_token)
        return _response_model(response, include_trace)

    @app.post("/feedback", response_model=FeedbackAck)
    async def feedback(body: FeedbackBody):
        ack = record_feedback(FeedbackEvent(request_id=body.request_id, rating=body.rating), state.runtime)
        return FeedbackAck(**ack)

    @app.get("/eval/records", response_model=list[RecordModel])
    async def eval_records(filter: str = Query(default="")):
        try:
            records = state.eval_store.query_records(filter)
        except BadFilter as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return [_record_model(r) for r in records]

    @app.post("/eval/records/{record_id}/annotate", response_model=RecordModel)
    async def annotate(record_id: str, body: AnnotateBody):
        try:
            record = state.eval_store.annotate_record(
                record_id,
                verdicts=body.verdicts,
                key_terms=body.key_terms,
                tags=body.tags,
                annotator=body.annotator,
            )
        except UnknownRecord:
            raise HTTPException(status_code=404, detail=f"unknown record {record_id}")
        except WorkflowViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _record_model(record)

    @app.get("/eval/funnel", response_model=FunnelModel)
    async def funnel(
        from_: str = Query(default="", alias="from"),
        to: str = Query(default=""),
    ):
        records = state.eval_store.all_records()
        if from_:
            records = [r for r in records if r.created_at >= from_]
        if to:
            records = [r for r in records if r.created_at <= to]
        try:
            report = funnel_report(records, period=f"{from_}..{to}")
        except EmptyPeriod as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return FunnelModel(
            period=report.period,
            total=report.total,
            stages=[
                FunnelStageModel(
                    name=s.name,
                    count=s.count,
                    eligible=s.eligible,
                    excluded_unset=s.excluded_unset,
                    rate=s.rate,
                )
                for s in report.stages
            ],
            content_gap_rate=report.content_gap_rate,
            search_failure_rate=report.search_failure_rate,
        )

    @app.get("/eval/stats", response_model=StatsModel)
    async def stats():
        lines = []
        if state.config.log_path and Path(state.config.log_path).exists():
            for line in Path(state.config.log_path).read_text(encoding="utf-8").splitlines():
                if line.strip():
                    lines.append(json.loads(line))
        result = usage_stats(lines)
        return StatsModel(
            nl_question_share=result.nl_question_share,
            feedback_distribution=result.feedback_distribution,
            feedback_rate=result.feedback_rate,
            answered=result.answered,
            feedback_events=result.feedback_events,
        )

    @app.post("/admin/reload", response_model=ReloadModel)
    async def reload(x_admin_token: str | None = Header(default=None)):
        if not _admin_ok(x_admin_token):
            raise HTTPException(status_code=403, detail="admin token required")
        state.reload()
        return ReloadModel(reloaded=True, topics=len(state.runtime.corpus))

    @app.get("/health", response_model=HealthModel)
    async def health():
        return HealthModel(status="ok", topics=len(state.runtime.corpus))

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
