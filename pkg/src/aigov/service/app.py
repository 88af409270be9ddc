"""HTTP+JSON API over the assessment workflow.

Thin layer: request validation, domain-error-to-status mapping, and the
workflow functions do the rest.  The UI depends on these endpoints only.
"""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from pydantic import BaseModel

from ..errors import (
    GovError,
    GuardrailFailure,
    NoScriptedRule,
    ParseError,
    StateTransitionError,
    UnknownAssessment,
    UnknownRisk,
    VersionConflict,
)
from .context import AppContext
from .report import report_bytes
from .store import AssessmentStore
from . import workflow

logger = logging.getLogger(__name__)


class CreateBody(BaseModel):
    intent: str


class ConfirmBody(BaseModel):
    expected_version: int
    tasks: Optional[list[str]] = None
    answer_overrides: Optional[dict[str, list[str]]] = None


class EvaluateBody(BaseModel):
    model: str
    benchmark: Optional[str] = None
    guardrail: Optional[str] = None


class ResolutionBody(BaseModel):
    risk: str
    guardrail_runs: Optional[list] = None
    plan: Optional[str] = None
    actions_done: Optional[dict] = None
    documentation: Optional[str] = None
    resolve: bool = False


def _status_for(exc: GovError) -> int:
    if isinstance(exc, UnknownAssessment):
        return 404
    if isinstance(exc, (VersionConflict, StateTransitionError)):
        return 409
    if isinstance(exc, NoScriptedRule):
        return 502  # fixture gap, not a client mistake
    if isinstance(exc, (ParseError, UnknownRisk, GuardrailFailure)):
        return 422
    return 400


def create_app(ctx: AppContext, store: Optional[AssessmentStore] = None) -> FastAPI:
    def check_token(authorization: Optional[str] = Header(default=None)):
        if ctx.api_token is None:
            return
        if authorization != f"Bearer {ctx.api_token}":
            raise HTTPException(status_code=401, detail="missing or wrong API token")

    app = FastAPI(title="aigov", version="0.1.0", dependencies=[Depends(check_token)])
    store = store or AssessmentStore(ctx.data_dir, clock=ctx.clock, actor=ctx.actor)

    @app.exception_handler(GovError)
    async def govenor_error_handler(request, exc: GovError):  # pragma: no cover - glue
        raise HTTPException(status_code=_status_for(exc), detail=str(exc))

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GovError as exc:
            raise HTTPException(status_code=_status_for(exc), detail=str(exc)) from exc

    @app.post("/assessments", status_code=201)
    def create_assessment(body: CreateBody):
        if not body.intent.strip():
            raise HTTPException(status_code=422, detail="intent must not be empty")
        assessment = run(workflow.create_assessment, ctx, store, body.intent)
        return assessment.to_dict()

    @app.get("/assessments")
    def list_assessments():
        return {"ids": store.list_ids()}

    @app.get("/assessments/{assessment_id}")
    def get_assessment(assessment_id: str):
        return run(store.get, assessment_id).to_dict()

    @app.post("/assessments/{assessment_id}/confirm")
    def confirm(assessment_id: str, body: ConfirmBody):
        assessment = run(
            workflow.confirm_assessment,
            ctx,
            store,
            assessment_id,
            tasks=body.tasks,
            answer_overrides=body.answer_overrides,
            expected_version=body.expected_version,
        )
        return assessment.to_dict()

    @app.get("/assessments/{assessment_id}/recommendations")
    def recommendations(assessment_id: str, policy: str = "default"):
        try:
            return run(workflow.compute_recommendation, ctx, store, assessment_id, policy)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no policy named {policy!r}") from None

    @app.post("/assessments/{assessment_id}/evaluations")
    def evaluations(assessment_id: str, body: EvaluateBody):
        return {
            "results": run(
                workflow.run_evaluations,
                ctx,
                store,
                assessment_id,
                model=body.model,
                benchmark=body.benchmark,
                guardrail=body.guardrail,
            )
        }

    @app.get("/assessments/{assessment_id}/report")
    def report(assessment_id: str):
        document = run(workflow.get_report, ctx, store, assessment_id)
        return Response(content=report_bytes(document), media_type="application/json")

    @app.post("/assessments/{assessment_id}/resolutions")
    def resolutions(assessment_id: str, body: ResolutionBody):
        record, unmet = run(
            workflow.upsert_resolution,
            ctx,
            store,
            assessment_id,
            risk_id=body.risk,
            guardrail_runs=body.guardrail_runs,
            plan_id=body.plan,
            actions_done=body.actions_done,
            documentation=body.documentation,
            resolve=body.resolve,
        )
        if body.resolve and unmet:
            raise HTTPException(status_code=409, detail={"unmet": unmet})
        return record

    @app.get("/assessments/{assessment_id}/audit")
    def audit(assessment_id: str):
        records = run(store.audit_records, assessment_id)
        if not records:
            raise HTTPException(status_code=404, detail=f"no assessment {assessment_id!r}")
        ok, bad_index = store.verify_audit(assessment_id)
        return {
            "records": [r.to_dict() for r in records],
            "valid": ok,
            "first_invalid": bad_index,
        }

    return app
