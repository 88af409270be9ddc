"""Workflow orchestration shared by the CLI and the HTTP endpoints.

Each step loads state, applies one domain operation, and persists through
the store (which versions the state and appends to the audit chain).
Domain errors bubble up typed; the HTTP layer maps them to status codes.
"""

from __future__ import annotations

import logging
from typing import Optional

from ..errors import (
    GuardrailFailure,
    NoCandidatesAfterFilter,
    ParseError,
    StateTransitionError,
    UnknownRisk,
    UnmetResolutionConditions,
)
from ..eval_runner import build_guardrail, run_benchmark, run_with_guardrail, select_evaluations
from ..mitigation import ResolutionRecord, check_resolved_invariant, mark_resolved
from ..questionnaire import AutoAnswer, auto_fill
from ..recommender import recommend
from ..risk_engine import build_profile, profile_from_dict
from .context import AppContext
from .report import build_report
from .store import Assessment, AssessmentStore

logger = logging.getLogger(__name__)


def _answer_to_dict(answer: AutoAnswer) -> dict:
    return {
        "question_id": answer.question_id,
        "values": answer.values,
        "explanation": answer.explanation,
        "bullets": answer.bullets,
        "mode": answer.mode,
        "needs_user": answer.needs_user,
        "source": answer.source,
    }


def _answers_from_dicts(raw: list[dict]) -> list[AutoAnswer]:
    return [
        AutoAnswer(
            question_id=a["question_id"],
            values=list(a.get("values", [])),
            explanation=a.get("explanation", ""),
            bullets=list(a.get("bullets", [])),
            mode=a.get("mode", "few_shot"),
            needs_user=bool(a.get("needs_user", False)),
            source=a.get("source", "auto"),
        )
        for a in raw
    ]


def create_assessment(ctx: AppContext, store: AssessmentStore, intent: str) -> Assessment:
    """Auto-fill the questionnaire from the intent and persist a draft."""
    if not intent or not intent.strip():
        raise ParseError("intent must not be empty")
    answers = auto_fill(intent.strip(), ctx.questionnaire, ctx.gateway, mode="few_shot")
    suggested: list[str] = []
    for answer in answers:
        if answer.question_id == ctx.task_question_id:
            suggested = list(answer.values)
    assessment = Assessment(
        id="pending",
        intent=intent.strip(),
        answers=[_answer_to_dict(a) for a in answers],
        suggested_tasks=suggested,
    )
    return store.create(assessment)


def confirm_assessment(
    ctx: AppContext,
    store: AssessmentStore,
    assessment_id: str,
    tasks: Optional[list[str]] = None,
    answer_overrides: Optional[dict[str, list[str]]] = None,
    expected_version: Optional[int] = None,
) -> Assessment:
    """Apply human overrides, then identify and prioritize risks."""

    def apply(assessment: Assessment) -> None:
        if assessment.status != "draft":
            raise StateTransitionError(
                f"assessment {assessment.id} was already confirmed ({assessment.status})"
            )
        by_id = {a["question_id"]: a for a in assessment.answers}
        for question_id, values in (answer_overrides or {}).items():
            question = ctx.questionnaire.question(question_id)
            cleaned = [str(v) for v in values]
            if question.kind == "multiple_choice":
                bad = [v for v in cleaned if v not in question.options]
                if bad:
                    raise ParseError(f"override for {question_id} has unknown options {bad}")
            if question.kind == "binary":
                cleaned = [v.lower() for v in cleaned]
                if cleaned not in (["yes"], ["no"]):
                    raise ParseError(f"override for {question_id} must be yes or no")
            entry = by_id.get(question_id)
            if entry is None:
                entry = _answer_to_dict(AutoAnswer(question_id=question_id, values=[]))
                assessment.answers.append(entry)
                by_id[question_id] = entry
            entry["values"] = cleaned
            entry["source"] = "human"
            entry["needs_user"] = False
            if question.kind == "freeform":
                entry["bullets"] = cleaned

        assessment.confirmed_tasks = [str(t) for t in (tasks or assessment.suggested_tasks)]
        profile = build_profile(
            _answers_from_dicts(assessment.answers),
            ctx.questionnaire,
            ctx.risk_catalog,
            ctx.gateway,
            measurable_risks=ctx.eval_catalog.measurable_risks(),
            use_case_id=assessment.id,
            ai_tasks=assessment.confirmed_tasks,
        )
        assessment.profile = profile.to_dict()
        assessment.advance("tasks_confirmed")

    return store.mutate(
        assessment_id,
        "confirm",
        apply,
        expected_version=expected_version,
        payload={"tasks": tasks, "answer_overrides": answer_overrides},
    )


def compute_recommendation(
    ctx: AppContext,
    store: AssessmentStore,
    assessment_id: str,
    policy_name: str = "default",
    incumbent: Optional[str] = None,
) -> dict:
    """Rank candidate models for the assessment under a named policy.

    Stores the result (and advances draft workflows to 'assessed') unless
    the assessment is already reported, in which case the stored case file
    is frozen and the fresh computation is only returned.
    """
    policy = ctx.policy(policy_name)  # KeyError -> 404 at the edge
    assessment = store.get(assessment_id)
    if not assessment.at_least("tasks_confirmed"):
        raise StateTransitionError("confirm the assessment before asking for recommendations")

    profile = profile_from_dict(assessment.profile or {"findings": []}, ctx.risk_catalog)
    candidates = ctx.graph.entities_of_kind("AiModel")
    try:
        recommendation = recommend(
            profile, candidates, policy, ctx.graph, ctx.eval_catalog, incumbent=incumbent
        ).to_dict()
    except NoCandidatesAfterFilter as exc:
        # An all-excluded inventory is an answer, not a failure: the case
        # file records why nothing could be ranked.
        recommendation = {
            "policy": policy_name,
            "ranked": [],
            "excluded": [{"model": m, "reason": r} for m, r in exc.exclusions],
            "missing_evals": {},
            "unknown_flags": {},
            "comparison": None,
        }

    if assessment.status == "reported":
        return recommendation

    def apply(assessment: Assessment) -> None:
        assessment.recommendation = recommendation
        if assessment.status == "tasks_confirmed":
            assessment.advance("assessed")

    store.mutate(
        assessment_id, "recommend", apply, payload={"policy": policy_name}
    )
    return recommendation


def run_evaluations(
    ctx: AppContext,
    store: AssessmentStore,
    assessment_id: str,
    model: str,
    benchmark: Optional[str] = None,
    guardrail: Optional[str] = None,
) -> list[dict]:
    """Run the selected (or one named) benchmark for a model, optionally
    guarded, persist results into the graph, and record them on the
    assessment."""
    assessment = store.get(assessment_id)
    if not assessment.at_least("tasks_confirmed"):
        raise StateTransitionError("confirm the assessment before running evaluations")

    if benchmark is not None:
        specs = [ctx.eval_catalog.benchmark(benchmark)]
    else:
        profile = profile_from_dict(assessment.profile or {"findings": []}, ctx.risk_catalog)
        specs = select_evaluations(profile, ctx.eval_catalog)

    adapter = ctx.model_adapter_for(model)
    guard = None
    if guardrail is not None:
        entry = ctx.mitigations.guardrail(guardrail)
        if entry.filter_kind != "output":
            raise GuardrailFailure(
                f"guardrail {guardrail!r} is an {entry.filter_kind} filter; "
                "only output filters can post-process benchmark runs"
            )
        guard = build_guardrail(entry)

    results = []
    for spec in specs:
        if guard is not None:
            pre, post, delta = run_with_guardrail(spec, adapter, guard, ctx.graph, now=ctx.clock)
            results.append({"pre": pre.to_dict(), "post": post.to_dict(), "delta": delta})
        else:
            outcome = run_benchmark(spec, adapter, ctx.graph, now=ctx.clock)
            results.append(outcome.to_dict())
    ctx.persist_graph()

    def apply(assessment: Assessment) -> None:
        assessment.evaluations.extend(results)

    store.mutate(
        assessment_id,
        "evaluate",
        apply,
        payload={"model": model, "benchmark": benchmark, "guardrail": guardrail},
    )
    return results


def get_report(ctx: AppContext, store: AssessmentStore, assessment_id: str) -> dict:
    """Generate (or refresh) the stored report for an assessed case."""
    assessment = store.get(assessment_id)
    if not assessment.at_least("assessed"):
        raise StateTransitionError(
            "the report needs a computed recommendation; call recommendations first"
        )
    check_resolved_invariant(assessment.resolutions, ctx.mitigations)
    report = build_report(assessment, ctx)
    if assessment.report == report:
        return report

    def apply(assessment: Assessment) -> None:
        assessment.report = report
        if assessment.status == "assessed":
            assessment.advance("reported")

    store.mutate(assessment_id, "report", apply, payload={})
    return report


def upsert_resolution(
    ctx: AppContext,
    store: AssessmentStore,
    assessment_id: str,
    risk_id: str,
    guardrail_runs: Optional[list] = None,
    plan_id: Optional[str] = None,
    actions_done: Optional[dict] = None,
    documentation: Optional[str] = None,
    resolve: bool = False,
) -> tuple[dict, list[str]]:
    """Update a risk's resolution record; optionally attempt to resolve.

    Returns (record, unmet_conditions).  A failed resolve attempt still
    persists the updates (the attempt itself belongs in the audit trail)
    and the unmet conditions come back for display.
    """
    ctx.risk_catalog.risk(risk_id)  # UnknownRisk if bogus
    assessment = store.get(assessment_id)
    if not assessment.at_least("assessed"):
        raise StateTransitionError("resolutions apply to assessed cases")
    check_resolved_invariant(assessment.resolutions, ctx.mitigations)

    unmet: list[str] = []

    def apply(assessment: Assessment) -> None:
        raw = assessment.resolutions.get(risk_id)
        record = (
            ResolutionRecord.from_dict(raw)
            if raw
            else ResolutionRecord(assessment_id=assessment.id, risk_id=risk_id)
        )
        for item in guardrail_runs or []:
            gid, delta = item[0], float(item[1])
            ctx.mitigations.guardrail(gid)
            record.guardrail_runs.append((str(gid), delta))
        if plan_id is not None:
            ctx.mitigations.plan(plan_id)
            record.plan_id = plan_id
        for step, info in (actions_done or {}).items():
            record.actions_done[int(step)] = {
                "done": bool(info.get("done", True)),
                "note": str(info.get("note", "")),
                "timestamp": ctx.clock(),
            }
        if documentation is not None:
            record.documentation = documentation
        if resolve:
            try:
                mark_resolved(record, ctx.mitigations)
            except UnmetResolutionConditions as exc:
                unmet.extend(exc.conditions)
        assessment.resolutions[risk_id] = record.to_dict()

    assessment = store.mutate(
        assessment_id,
        "resolve" if resolve else "resolution-update",
        apply,
        payload={
            "risk": risk_id,
            "plan": plan_id,
            "resolve": resolve,
            "documentation": bool(documentation),
        },
    )
    return assessment.resolutions[risk_id], unmet
