"""Guardrail and action-plan catalogs, and the resolution lifecycle.

Mitigations come in two flavors: deployment guardrails (input/output
filters whose impact can be measured) and curated manual action plans
(ordered steps, some requiring a human).  A risk resolves only once at
least one path is actually walked (a guardrail run recorded, or every
human-required step of the followed plan done) and the outcome is
documented.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .errors import ParseError, UnmetResolutionConditions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GuardrailEntry:
    id: str
    linked_risks: tuple[str, ...]
    description: str
    filter_kind: str  # "input" | "output"
    config: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.linked_risks:
            raise ParseError(f"guardrail {self.id!r} links no risk")
        if self.filter_kind not in ("input", "output"):
            raise ParseError(f"guardrail {self.id!r}: filter_kind must be input or output")


@dataclass(frozen=True)
class ActionStep:
    text: str
    depends_on: tuple[int, ...] = ()
    requires_human: bool = False


@dataclass(frozen=True)
class ActionPlan:
    id: str
    linked_risks: tuple[str, ...]
    steps: tuple[ActionStep, ...]

    def __post_init__(self):
        if not self.linked_risks:
            raise ParseError(f"action plan {self.id!r} links no risk")
        for i, step in enumerate(self.steps):
            if any(dep >= i for dep in step.depends_on):
                raise ParseError(
                    f"action plan {self.id!r}: step {i} depends on a later step"
                )


@dataclass
class MitigationCatalog:
    guardrails: list[GuardrailEntry] = field(default_factory=list)
    action_plans: list[ActionPlan] = field(default_factory=list)

    def guardrail(self, guardrail_id: str) -> GuardrailEntry:
        for entry in self.guardrails:
            if entry.id == guardrail_id:
                return entry
        raise ParseError(f"guardrail {guardrail_id!r} not in catalog")

    def plan(self, plan_id: str) -> ActionPlan:
        for plan in self.action_plans:
            if plan.id == plan_id:
                return plan
        raise ParseError(f"action plan {plan_id!r} not in catalog")

    def guardrails_for(self, risk_id: str) -> list[GuardrailEntry]:
        return sorted(
            (g for g in self.guardrails if risk_id in g.linked_risks), key=lambda g: g.id
        )

    def plans_for(self, risk_id: str) -> list[ActionPlan]:
        return sorted(
            (p for p in self.action_plans if risk_id in p.linked_risks), key=lambda p: p.id
        )


def load_mitigations(
    guardrails_path: Union[str, Path], plans_path: Union[str, Path]
) -> MitigationCatalog:
    catalog = MitigationCatalog()

    raw = yaml.safe_load(Path(guardrails_path).read_text(encoding="utf-8"))
    for item in (raw or {}).get("guardrails", []):
        catalog.guardrails.append(
            GuardrailEntry(
                id=str(item["id"]),
                linked_risks=tuple(str(r) for r in item.get("linked_risks", [])),
                description=str(item.get("description", "")),
                filter_kind=str(item.get("filter_kind", "output")),
                config={str(k): str(v) for k, v in (item.get("config") or {}).items()},
            )
        )

    raw = yaml.safe_load(Path(plans_path).read_text(encoding="utf-8"))
    for item in (raw or {}).get("action_plans", []):
        steps = tuple(
            ActionStep(
                text=str(s["text"]),
                depends_on=tuple(int(d) for d in s.get("depends_on", [])),
                requires_human=bool(s.get("requires_human", False)),
            )
            for s in item.get("steps", [])
        )
        catalog.action_plans.append(
            ActionPlan(
                id=str(item["id"]),
                linked_risks=tuple(str(r) for r in item.get("linked_risks", [])),
                steps=steps,
            )
        )
    return catalog


@dataclass
class MitigationAdvice:
    risk_id: str
    guardrails: list[GuardrailEntry]
    action_plans: list[ActionPlan]
    ordering: tuple[str, str]  # section order for the risk card
    uncovered: bool = False

    def to_dict(self) -> dict:
        return {
            "risk_id": self.risk_id,
            "ordering": list(self.ordering),
            "guardrails": [
                {
                    "id": g.id,
                    "description": g.description,
                    "filter_kind": g.filter_kind,
                }
                for g in self.guardrails
            ],
            "action_plans": [
                {
                    "id": p.id,
                    "steps": [
                        {
                            "text": s.text,
                            "depends_on": list(s.depends_on),
                            "requires_human": s.requires_human,
                        }
                        for s in p.steps
                    ],
                }
                for p in self.action_plans
            ],
            "uncovered": self.uncovered,
        }


def recommend_mitigations(profile, catalog: MitigationCatalog) -> dict[str, MitigationAdvice]:
    """Catalog entries per finding, deterministically ordered.

    Measurable risks lead with guardrails (their impact can be evidenced);
    non-measurable ones lead with manual action plans.  Risks nothing in
    the catalog covers are flagged, not dropped.
    """
    advice: dict[str, MitigationAdvice] = {}
    for finding in profile.findings:
        risk_id = finding.risk.id
        guardrails = catalog.guardrails_for(risk_id)
        plans = catalog.plans_for(risk_id)
        ordering = (
            ("guardrails", "action_plans") if finding.measurable
            else ("action_plans", "guardrails")
        )
        advice[risk_id] = MitigationAdvice(
            risk_id=risk_id,
            guardrails=guardrails,
            action_plans=plans,
            ordering=ordering,
            uncovered=not guardrails and not plans,
        )
    return advice


@dataclass
class ResolutionRecord:
    assessment_id: str
    risk_id: str
    guardrail_runs: list[tuple[str, float]] = field(default_factory=list)
    plan_id: Optional[str] = None
    actions_done: dict[int, dict] = field(default_factory=dict)  # step -> {done, note, timestamp}
    status: str = "open"  # "open" | "resolved"
    documentation: str = ""
    resolved_via: Optional[str] = None  # "guardrail" | "actions"

    def to_dict(self) -> dict:
        return {
            "assessment_id": self.assessment_id,
            "risk_id": self.risk_id,
            "guardrail_runs": [[g, d] for g, d in self.guardrail_runs],
            "plan_id": self.plan_id,
            "actions_done": {str(k): v for k, v in sorted(self.actions_done.items())},
            "status": self.status,
            "documentation": self.documentation,
            "resolved_via": self.resolved_via,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ResolutionRecord":
        return cls(
            assessment_id=str(raw["assessment_id"]),
            risk_id=str(raw["risk_id"]),
            guardrail_runs=[(str(g), float(d)) for g, d in raw.get("guardrail_runs", [])],
            plan_id=raw.get("plan_id"),
            actions_done={int(k): dict(v) for k, v in raw.get("actions_done", {}).items()},
            status=str(raw.get("status", "open")),
            documentation=str(raw.get("documentation", "")),
            resolved_via=raw.get("resolved_via"),
        )


def unmet_conditions(record: ResolutionRecord, catalog: MitigationCatalog) -> list[str]:
    """Conditions still blocking resolution; empty means resolvable."""
    conditions = []
    if not record.documentation.strip():
        conditions.append("documentation of the actions taken is empty")

    guardrail_path = bool(record.guardrail_runs)
    actions_path = False
    if record.plan_id is not None:
        plan = catalog.plan(record.plan_id)
        pending = [
            i for i, step in enumerate(plan.steps)
            if step.requires_human and not record.actions_done.get(i, {}).get("done")
        ]
        if pending:
            conditions.append(
                f"plan {record.plan_id} has pending human steps: "
                + ", ".join(str(i) for i in pending)
            )
        else:
            actions_path = True
    if not guardrail_path and not actions_path and record.plan_id is None:
        conditions.append("no guardrail run recorded and no action plan followed")
    return conditions


def mark_resolved(record: ResolutionRecord, catalog: MitigationCatalog) -> ResolutionRecord:
    """Transition to resolved, or raise with every unmet condition.

    Idempotent: resolving an already-resolved record changes nothing.
    """
    if record.status == "resolved":
        return record
    conditions = unmet_conditions(record, catalog)
    if conditions:
        raise UnmetResolutionConditions(conditions)
    record.status = "resolved"
    record.resolved_via = "guardrail" if record.guardrail_runs else "actions"
    return record


def check_resolved_invariant(records: dict, catalog: MitigationCatalog) -> None:
    """Guard run on every load of persisted resolutions: a record marked
    resolved must still satisfy the resolution conditions, else the state
    file was edited behind the engine's back."""
    for risk_id, raw in records.items():
        record = raw if isinstance(raw, ResolutionRecord) else ResolutionRecord.from_dict(raw)
        if record.status != "resolved":
            continue
        conditions = unmet_conditions(record, catalog)
        if conditions:
            raise UnmetResolutionConditions(
                [f"stored resolution for {risk_id} is invalid: {c}" for c in conditions]
            )
