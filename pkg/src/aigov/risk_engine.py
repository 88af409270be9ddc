"""Connect answered questions to risks, score them, classify severity.

A judge call per (question, answer, linked risk) decides whether the
answer amplifies, reduces, or leaves the risk unchanged, with a strength
score; risks with at least one amplifying pair become findings.  Severity
classification is also judged, with a fail-safe: if the verdict cannot be
parsed the finding defaults to High and is flagged for human review: a
governance tool must not silently under-report risk.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from statistics import fmean
from typing import Optional

from .gateway import Gateway
from .questionnaire import AutoAnswer, Questionnaire
from .taxonomy import RiskCatalog, RiskEntry

logger = logging.getLogger(__name__)

SEVERITIES = ("High", "Medium", "Low")
_SEVERITY_RANK = {"High": 0, "Medium": 1, "Low": 2}
_DIRECTION_SCORE = re.compile(
    r"^\s*(amplifies|reduces|neutral)\b[\s:,-]*([01](?:\.\d+)?|\.\d+)?", re.IGNORECASE
)
_SEVERITY_WORD = re.compile(r"\b(high|medium|low)\b", re.IGNORECASE)


@dataclass
class QaPair:
    question_id: str
    question_text: str
    answer: str
    direction: str  # "amplifies" | "reduces" | "neutral"
    score: float

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "question_text": self.question_text,
            "answer": self.answer,
            "direction": self.direction,
            "score": self.score,
        }


@dataclass
class RiskFinding:
    risk: RiskEntry
    qa_pairs: list[QaPair]
    avg_score: float
    severity: str = "High"
    explanation: str = ""
    measurable: bool = False
    severity_flagged: bool = False

    def to_dict(self) -> dict:
        return {
            "risk_id": self.risk.id,
            "risk_name": self.risk.name,
            "description": self.risk.description,
            "qa_pairs": [p.to_dict() for p in self.qa_pairs],
            "avg_score": self.avg_score,
            "score_pct": score_percent(self.avg_score),
            "severity": self.severity,
            "explanation": self.explanation,
            "measurable": self.measurable,
            "severity_flagged": self.severity_flagged,
        }


@dataclass
class RiskProfile:
    use_case_id: str
    findings: list[RiskFinding]
    ai_tasks: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "use_case_id": self.use_case_id,
            "ai_tasks": self.ai_tasks,
            "findings": [f.to_dict() for f in self.findings],
        }


def score_percent(score: float) -> str:
    return f"{int(round(score * 100))}%"


def parse_direction_verdict(text: str) -> Optional[tuple[str, float]]:
    """Parse the fixed `<direction> <score>` response grammar; None when the
    verdict does not start with a direction word."""
    match = _DIRECTION_SCORE.match(text or "")
    if not match:
        return None
    direction = match.group(1).lower()
    score = float(match.group(2)) if match.group(2) else 0.0
    return direction, min(1.0, max(0.0, score))


def identify_risks(
    answers: list[AutoAnswer],
    questionnaire: Questionnaire,
    catalog: RiskCatalog,
    gateway: Gateway,
) -> list[tuple[RiskEntry, list[QaPair]]]:
    """Judge every (answered question, linked risk) pair.

    Neutral pairs are dropped; unparseable verdicts are logged and treated
    as neutral.  A risk surfaces only if at least one pair amplifies it.
    """
    pairs_by_risk: dict[str, list[QaPair]] = {}
    answer_by_id = {a.question_id: a for a in answers}

    for question in questionnaire.questions:
        if not question.linked_risks:
            continue
        answer = answer_by_id.get(question.id)
        if answer is None or answer.needs_user or not answer.values:
            continue
        answer_text = ", ".join(answer.values)
        for risk_id in question.linked_risks:
            risk = catalog.risk(risk_id)
            response = gateway.ask(
                "risk_link_judge",
                {
                    "question_text": question.text,
                    "question_output": answer_text,
                    "risk_name": risk.name,
                    "risk_desc": risk.description,
                },
            )
            verdict = parse_direction_verdict(response)
            if verdict is None:
                logger.info(
                    "unparseable risk verdict %r for (%s, %s); treating as neutral",
                    response, question.id, risk_id,
                )
                continue
            direction, score = verdict
            if direction == "neutral":
                continue
            pairs_by_risk.setdefault(risk_id, []).append(
                QaPair(
                    question_id=question.id,
                    question_text=question.text,
                    answer=answer_text,
                    direction=direction,
                    score=score,
                )
            )

    out = []
    for risk_id in sorted(pairs_by_risk):
        pairs = pairs_by_risk[risk_id]
        if any(p.direction == "amplifies" for p in pairs):
            out.append((catalog.risk(risk_id), pairs))
    return out


def aggregate_score(qa_pairs: list[QaPair]) -> float:
    """Arithmetic mean of the amplifying pair scores."""
    amplifying = [p.score for p in qa_pairs if p.direction == "amplifies"]
    if not amplifying:
        raise ValueError("aggregate_score needs at least one amplifying pair")
    return fmean(amplifying)


def parse_severity(text: str) -> Optional[str]:
    """First of High/Medium/Low named in the first sentence, else None."""
    stripped = (text or "").strip()
    first_sentence = re.split(r"[.!?\n]", stripped, maxsplit=1)[0]
    match = _SEVERITY_WORD.search(first_sentence)
    return match.group(1).capitalize() if match else None


def classify_severity(finding: RiskFinding, gateway: Gateway) -> tuple[str, str]:
    """Severity verdict for a finding; defaults to High (flagged) when the
    response names no class."""
    questions = "; ".join(p.question_text for p in finding.qa_pairs)
    answers = "; ".join(p.answer for p in finding.qa_pairs)
    response = gateway.ask(
        "severity_judge",
        {
            "question_text": questions,
            "question_output": answers,
            "risk_desc": finding.risk.description,
            "risk_score": score_percent(finding.avg_score),
        },
    )
    severity = parse_severity(response)
    if severity is None:
        finding.severity_flagged = True
        logger.warning(
            "severity verdict unparseable for %s; defaulting to High", finding.risk.id
        )
        return "High", response
    return severity, response


def prioritize(findings: list[RiskFinding], use_case_id: str = "",
               ai_tasks: Optional[list[str]] = None) -> RiskProfile:
    """Stable total order: severity, then score descending, then risk id."""
    ordered = sorted(
        findings,
        key=lambda f: (_SEVERITY_RANK[f.severity], -f.avg_score, f.risk.id),
    )
    return RiskProfile(use_case_id=use_case_id, findings=ordered, ai_tasks=list(ai_tasks or []))


def profile_from_dict(raw: dict, catalog: RiskCatalog) -> RiskProfile:
    """Rehydrate a stored profile; risk entries resolve via the catalog."""
    findings = []
    for f in raw.get("findings", []):
        findings.append(
            RiskFinding(
                risk=catalog.risk(f["risk_id"]),
                qa_pairs=[
                    QaPair(
                        question_id=p["question_id"],
                        question_text=p["question_text"],
                        answer=p["answer"],
                        direction=p["direction"],
                        score=float(p["score"]),
                    )
                    for p in f.get("qa_pairs", [])
                ],
                avg_score=float(f["avg_score"]),
                severity=str(f["severity"]),
                explanation=str(f.get("explanation", "")),
                measurable=bool(f.get("measurable", False)),
                severity_flagged=bool(f.get("severity_flagged", False)),
            )
        )
    return RiskProfile(
        use_case_id=str(raw.get("use_case_id", "")),
        findings=findings,
        ai_tasks=list(raw.get("ai_tasks", [])),
    )


def build_profile(
    answers: list[AutoAnswer],
    questionnaire: Questionnaire,
    catalog: RiskCatalog,
    gateway: Gateway,
    measurable_risks: Optional[set[str]] = None,
    use_case_id: str = "",
    ai_tasks: Optional[list[str]] = None,
) -> RiskProfile:
    """identify -> aggregate -> classify -> prioritize, in one pass.

    ``measurable_risks`` is the set of risk ids with at least one linked
    benchmark in the evaluation catalog.
    """
    findings = []
    for risk, pairs in identify_risks(answers, questionnaire, catalog, gateway):
        finding = RiskFinding(
            risk=risk,
            qa_pairs=pairs,
            avg_score=aggregate_score(pairs),
            measurable=risk.id in (measurable_risks or set()),
        )
        finding.severity, finding.explanation = classify_severity(finding, gateway)
        findings.append(finding)
    return prioritize(findings, use_case_id=use_case_id, ai_tasks=ai_tasks)
