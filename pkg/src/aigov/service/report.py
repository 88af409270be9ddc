"""Report assembly: the machine-readable case file for one assessment.

Pure projection of assessment state plus the static catalogs: the same
state always yields byte-identical output.  Volatile identity (the
assessment id, wall-clock times) stays out of the body for that reason.
"""

from __future__ import annotations

import json

from ..mitigation import recommend_mitigations
from ..risk_engine import profile_from_dict
from .context import AppContext
from .store import Assessment


def build_report(assessment: Assessment, ctx: AppContext) -> dict:
    profile = profile_from_dict(assessment.profile or {"findings": []}, ctx.risk_catalog)
    advice = recommend_mitigations(profile, ctx.mitigations)

    questions = []
    answers_by_id = {a["question_id"]: a for a in assessment.answers}
    for question in ctx.questionnaire.questions:
        answer = answers_by_id.get(question.id, {})
        questions.append(
            {
                "question_id": question.id,
                "text": question.text,
                "kind": question.kind,
                "values": answer.get("values", []),
                "explanation": answer.get("explanation", ""),
                "bullets": answer.get("bullets", []),
                "source": answer.get("source", "auto"),
                "needs_user": answer.get("needs_user", False),
            }
        )

    risk_cards = []
    for finding in profile.findings:
        card = finding.to_dict()
        card["mitigations"] = advice[finding.risk.id].to_dict()
        card["resolution"] = assessment.resolutions.get(finding.risk.id)
        risk_cards.append(card)

    return {
        "intent": assessment.intent,
        "ai_tasks": assessment.confirmed_tasks or assessment.suggested_tasks,
        "questionnaire": questions,
        "risks": risk_cards,
        "models": assessment.recommendation or {},
        "evaluations": assessment.evaluations,
        "resolutions": {k: v for k, v in sorted(assessment.resolutions.items())},
    }


def report_bytes(report: dict) -> bytes:
    """Canonical serialized form (what 'byte-identical' is measured on)."""
    return (
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    ).encode("utf-8")
