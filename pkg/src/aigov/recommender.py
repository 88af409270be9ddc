"""Model ranking under a customer policy.

Benchmark scores are first normalized to a coarse tri-score against the
average over reference models (1 above, 0 inside the epsilon band, -1
below, with polarity per benchmark direction), categorical facts map onto
the same scale (known-acceptable / not-known / known-unacceptable), and a
weighted mean of the known tri-scores gives one comparable number per
candidate.  Categorical -1 filters a model out entirely; unknown (0)
never does, it is only flagged.  Higher totals rank first: 1 means
better-than-average, so the top of the list is the lowest-risk choice.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Optional, Sequence, Union

import yaml

from .errors import (
    AllWeightsZero,
    DisjointRiskSets,
    EmptyReference,
    NoCandidatesAfterFilter,
    ParseError,
)
from .kg import Entity, KnowledgeGraph
from .risk_engine import RiskProfile

logger = logging.getLogger(__name__)

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"


@dataclass(frozen=True)
class CategoricalRule:
    attribute: str  # e.g. "license"
    acceptable: frozenset[str]


@dataclass
class PolicyConfig:
    weights: dict[str, float]
    acceptable_licenses: set[str] = field(default_factory=set)
    categorical_rules: list[CategoricalRule] = field(default_factory=list)
    epsilon: float = 0.0
    reference_models: list[str] = field(default_factory=list)
    name: str = "policy"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ParseError("policy epsilon must be >= 0")
        if not any(w > 0 for w in self.weights.values()):
            raise ParseError("policy needs at least one positive weight")


def load_policy(path: Union[str, Path]) -> PolicyConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read policy {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: policy must be a mapping")
    licenses = {str(v).lower() for v in raw.get("acceptable_licenses", [])}
    rules = [
        CategoricalRule(
            attribute=str(item["attribute"]),
            acceptable=frozenset(str(v).lower() for v in item.get("acceptable", [])),
        )
        for item in raw.get("categorical_rules", [])
    ]
    if licenses and not any(r.attribute == "license" for r in rules):
        rules.append(CategoricalRule(attribute="license", acceptable=frozenset(licenses)))
    return PolicyConfig(
        weights={str(k): float(v) for k, v in (raw.get("weights") or {}).items()},
        acceptable_licenses=licenses,
        categorical_rules=rules,
        epsilon=float(raw.get("epsilon", 0.0)),
        reference_models=[str(m) for m in raw.get("reference_models", [])],
        name=str(raw.get("name", path.stem)),
    )


# -- tri-score normalization -------------------------------------------------


def normalize_quantitative(
    raw: float,
    reference_scores: Sequence[float],
    direction: str = HIGHER_BETTER,
    epsilon: float = 0.0,
) -> int:
    """Score relative to the reference average: 1 above, 0 within the
    epsilon band, -1 below.  ``lower_better`` flips the axis."""
    if not reference_scores:
        raise EmptyReference("reference score list must not be empty")
    mean = fmean(reference_scores)
    diff = (raw - mean) if direction == HIGHER_BETTER else (mean - raw)
    if diff > epsilon:
        return 1
    if diff < -epsilon:
        return -1
    return 0


def classify_categorical(
    model_facts: dict[str, list[str]],
    rule: CategoricalRule,
) -> int:
    """1 known-acceptable, 0 not known, -1 known-unacceptable.

    With several recorded values, all must be acceptable: one bad license
    taints the model.
    """
    values = model_facts.get(rule.attribute)
    if not values:
        return 0
    return 1 if all(v.lower() in rule.acceptable for v in values) else -1


# Attribute -> entity kind the fact is read from in the KG.
_FACT_KINDS = {
    "license": "License",
    "organization": "Organization",
    "dataset": "Dataset",
}


def model_facts_from_graph(graph: KnowledgeGraph, model: Entity) -> dict[str, list[str]]:
    facts: dict[str, list[str]] = {}
    for attribute, kind in _FACT_KINDS.items():
        values = [other.label for other, _ in graph.neighbors(model, kind_filter=kind)]
        if values:
            facts[attribute] = values
    return facts


@dataclass
class FilterResult:
    kept: list[str]
    excluded: list[tuple[str, str]]  # (model_id, violated attribute)
    unknown_flags: dict[str, list[str]] = field(default_factory=dict)


def filter_candidates(
    models: Sequence[Entity],
    policy: PolicyConfig,
    graph: KnowledgeGraph,
) -> FilterResult:
    """Drop models with any known-unacceptable categorical fact.

    Unknown facts never exclude; they are flagged so the report can say
    what the ranking did not know.
    """
    result = FilterResult(kept=[], excluded=[])
    seen: set[str] = set()
    for model in models:
        if model.label in seen:  # one verdict per model identity
            continue
        seen.add(model.label)
        facts = model_facts_from_graph(graph, model)
        violations = []
        unknowns = []
        for rule in policy.categorical_rules:
            status = classify_categorical(facts, rule)
            if status == -1:
                violations.append(rule.attribute)
            elif status == 0:
                unknowns.append(rule.attribute)
        if violations:
            result.excluded.append((model.label, violations[0]))
        else:
            result.kept.append(model.label)
            if unknowns:
                result.unknown_flags[model.label] = unknowns
    return result


def total_risk(per_risk_tri_scores: dict[str, Optional[int]], weights: dict[str, float]) -> float:
    """Weighted mean over risks with known tri-scores.

    Missing weights count as zero (logged); risks without a score simply
    do not participate; "not evaluated" must stay distinct from "scored
    average".
    """
    num = 0.0
    den = 0.0
    for risk_id, score in sorted(per_risk_tri_scores.items()):
        if score is None:
            continue
        weight = weights.get(risk_id)
        if weight is None:
            logger.info("risk %s has no policy weight; contributing 0", risk_id)
            weight = 0.0
        num += weight * score
        den += weight
    if den == 0:
        raise AllWeightsZero("no scored risk carries positive weight")
    return num / den


@dataclass
class RiskScoreDetail:
    tri: Optional[int]  # None = missing evaluation
    benchmark_id: Optional[str] = None
    raw_score: Optional[float] = None
    evidence: list[str] = field(default_factory=list)  # result entity ids

    def to_dict(self) -> dict:
        return {
            "tri": self.tri,
            "benchmark_id": self.benchmark_id,
            "raw_score": self.raw_score,
            "evidence": self.evidence,
        }


@dataclass
class Recommendation:
    ranked: list[tuple[str, float, dict[str, RiskScoreDetail]]]
    excluded: list[tuple[str, str]]
    missing_evals: dict[str, list[str]]
    unknown_flags: dict[str, list[str]] = field(default_factory=dict)
    comparison: Optional[dict] = None
    policy: str = ""

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "ranked": [
                {
                    "model": model,
                    "total_risk_value": total,
                    "per_risk": {rid: d.to_dict() for rid, d in sorted(per_risk.items())},
                }
                for model, total, per_risk in self.ranked
            ],
            "excluded": [{"model": m, "reason": r} for m, r in self.excluded],
            "missing_evals": self.missing_evals,
            "unknown_flags": self.unknown_flags,
            "comparison": self.comparison,
        }


def compare_challenger(
    incumbent: str,
    challenger: str,
    per_risk_scores: dict[str, dict[str, Optional[int]]],
) -> dict:
    """Component-wise strengths/weaknesses of a challenger vs the incumbent.

    Risks scored for only one side land in 'incomparable'; equal scores
    are omitted.
    """
    inc = per_risk_scores.get(incumbent, {})
    cha = per_risk_scores.get(challenger, {})
    shared = [
        r for r in set(inc) | set(cha)
        if inc.get(r) is not None and cha.get(r) is not None
    ]
    if not shared:
        raise DisjointRiskSets(
            f"{incumbent!r} and {challenger!r} share no scored risk"
        )
    strengths = sorted(r for r in shared if cha[r] > inc[r])  # type: ignore[operator]
    weaknesses = sorted(r for r in shared if cha[r] < inc[r])  # type: ignore[operator]
    incomparable = sorted(
        r for r in set(inc) | set(cha)
        if (inc.get(r) is None) != (cha.get(r) is None)
    )
    return {
        "incumbent": incumbent,
        "challenger": challenger,
        "strengths": strengths,
        "weaknesses": weaknesses,
        "incomparable": incomparable,
    }


def recommend(
    profile: RiskProfile,
    candidates: Sequence[Entity],
    policy: PolicyConfig,
    graph: KnowledgeGraph,
    catalog,
    incumbent: Optional[str] = None,
) -> Recommendation:
    """Filter, normalize per prioritized risk, total, rank.

    ``catalog`` is the benchmark catalog (eval_runner.EvalCatalog); it maps
    profile risks to benchmark specs.  Per-risk scores come from
    AiEvalResult facts already in the graph; where a profile risk has no
    result for a model, the gap is proposed in ``missing_evals`` instead
    of being imputed.
    """
    if not candidates:
        raise NoCandidatesAfterFilter([])

    filtered = filter_candidates(candidates, policy, graph)
    if not filtered.kept:
        raise NoCandidatesAfterFilter(filtered.excluded)
    by_label = {m.label: m for m in candidates}

    risk_ids = sorted({f.risk.id for f in profile.findings})
    ranked: list[tuple[str, float, dict[str, RiskScoreDetail]]] = []
    missing: dict[str, list[str]] = {}

    for model_label in filtered.kept:
        model = by_label[model_label]
        per_risk: dict[str, RiskScoreDetail] = {}
        for risk_id in risk_ids:
            detail = _score_risk_for_model(model, risk_id, graph, policy, catalog)
            per_risk[risk_id] = detail
            if detail.tri is None:
                missing.setdefault(model_label, []).append(risk_id)
        tri_map = {rid: d.tri for rid, d in per_risk.items()}
        try:
            total = total_risk(tri_map, policy.weights)
        except AllWeightsZero:
            total = 0.0  # nothing scored yet; rank by id among peers
        ranked.append((model_label, total, per_risk))

    ranked.sort(key=lambda item: (-item[1], item[0]))

    comparison = None
    if incumbent is not None:
        scores = {m: {rid: d.tri for rid, d in per_risk.items()} for m, _, per_risk in ranked}
        challenger = next((m for m, _, _ in ranked if m != incumbent), None)
        if challenger is not None and incumbent in scores:
            comparison = compare_challenger(incumbent, challenger, scores)

    return Recommendation(
        ranked=ranked,
        excluded=filtered.excluded,
        missing_evals=missing,
        unknown_flags=filtered.unknown_flags,
        comparison=comparison,
        policy=policy.name,
    )


def _score_risk_for_model(
    model: Entity,
    risk_id: str,
    graph: KnowledgeGraph,
    policy: PolicyConfig,
    catalog,
) -> RiskScoreDetail:
    """Tri-score one (model, risk) from persisted eval results.

    Several benchmarks may cover one risk; the most conservative tri-score
    wins so a good score on one axis cannot mask a bad one on another.
    """
    specs = catalog.benchmarks_for_risk(risk_id)
    best: Optional[RiskScoreDetail] = None
    for spec in specs:
        for result, _triple in graph.neighbors(model, kind_filter="AiEvalResult"):
            if result.attrs.get("benchmark") != spec.id:
                continue
            if result.attrs.get("guardrail"):
                continue  # ranking uses unguarded behavior
            raw = float(result.attrs["score"])
            refs = [
                spec.reference_scores[m]
                for m in (policy.reference_models or sorted(spec.reference_scores))
                if m in spec.reference_scores
            ]
            if not refs:
                refs = list(spec.reference_scores.values())
            tri = normalize_quantitative(raw, refs, spec.direction, policy.epsilon)
            detail = RiskScoreDetail(
                tri=tri, benchmark_id=spec.id, raw_score=raw, evidence=[result.id]
            )
            if best is None or best.tri is None or (detail.tri is not None and detail.tri < best.tri):
                best = detail
    return best if best is not None else RiskScoreDetail(tri=None)
