from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from aigov.errors import (
    AllWeightsZero,
    DisjointRiskSets,
    EmptyReference,
    NoCandidatesAfterFilter,
    ParseError,
)
from aigov.eval_runner import load_eval_catalog
from aigov.kg import KnowledgeGraph
from aigov.recommender import (
    CategoricalRule,
    PolicyConfig,
    classify_categorical,
    compare_challenger,
    filter_candidates,
    load_policy,
    model_facts_from_graph,
    normalize_quantitative,
    recommend,
    total_risk,
)
from aigov.risk_engine import RiskFinding, RiskProfile
from aigov.taxonomy import bundled_data_dir


def test_normalize_above_average():
    assert normalize_quantitative(0.80, [0.70, 0.75, 0.65], "higher_better", 0.01) == 1


def test_normalize_band_center_is_zero():
    refs = [0.70, 0.75, 0.65]
    mean = sum(refs) / 3
    assert normalize_quantitative(mean, refs, "higher_better", 0.0) == 0


def test_normalize_below_average():
    assert normalize_quantitative(0.30, [0.70], "higher_better", 0.0) == -1


def test_normalize_lower_better_flips():
    assert normalize_quantitative(0.30, [0.70], "lower_better", 0.0) == 1
    assert normalize_quantitative(0.90, [0.70], "lower_better", 0.0) == -1


def test_normalize_empty_reference():
    with pytest.raises(EmptyReference):
        normalize_quantitative(0.5, [], "higher_better", 0.0)


@given(
    raws=st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=8),
    mean=st.floats(-1, 1, allow_nan=False),
    eps=st.floats(0, 0.5, allow_nan=False),
)
def test_normalize_monotone_in_raw(raws, mean, eps):
    ordered = sorted(raws)
    tris = [normalize_quantitative(r, [mean], "higher_better", eps) for r in ordered]
    assert tris == sorted(tris)
    flipped = [normalize_quantitative(r, [mean], "lower_better", eps) for r in ordered]
    assert flipped == sorted(flipped, reverse=True)


LICENSE_RULE = CategoricalRule(attribute="license", acceptable=frozenset({"apache-2.0", "mit"}))


def test_categorical_membership():
    assert classify_categorical({"license": ["apache-2.0"]}, LICENSE_RULE) == 1
    assert classify_categorical({}, LICENSE_RULE) == 0
    assert classify_categorical({"license": ["proprietary-restricted"]}, LICENSE_RULE) == -1


def test_categorical_mixed_values_taint():
    assert classify_categorical({"license": ["apache-2.0", "proprietary"]}, LICENSE_RULE) == -1


def make_policy(**kwargs):
    defaults = dict(
        weights={"r1": 1.0},
        categorical_rules=[LICENSE_RULE],
        epsilon=0.0,
        reference_models=["ref-a"],
        name="test",
    )
    defaults.update(kwargs)
    return PolicyConfig(**defaults)


def inventory_graph(schema):
    g = KnowledgeGraph(schema)
    apache = g.upsert_entity("license", "apache-2.0")
    bad = g.upsert_entity("license", "proprietary-restricted")
    m1 = g.upsert_entity("aimodel", "model-a")
    m2 = g.upsert_entity("aimodel", "model-b")
    m3 = g.upsert_entity("aimodel", "model-c")
    g.add_triple(m1, apache, "licensed under")
    g.add_triple(m2, bad, "licensed under")
    return g, (m1, m2, m3)


def test_filter_excludes_only_known_unacceptable(schema):
    g, (m1, m2, m3) = inventory_graph(schema)
    result = filter_candidates([m1, m2, m3], make_policy(), g)
    assert result.kept == ["model-a", "model-c"]
    assert result.excluded == [("model-b", "license")]
    assert result.unknown_flags == {"model-c": ["license"]}


def test_filter_all_unknown_kept_and_flagged(schema):
    g = KnowledgeGraph(schema)
    models = [g.upsert_entity("aimodel", f"m{i}") for i in range(3)]
    result = filter_candidates(models, make_policy(), g)
    assert len(result.kept) == 3
    assert all(result.unknown_flags[m.label] == ["license"] for m in models)


def test_filter_empty_candidates(schema):
    g = KnowledgeGraph(schema)
    result = filter_candidates([], make_policy(), g)
    assert result.kept == [] and result.excluded == []


def test_total_risk_weighted_mean():
    assert total_risk({"A": 1, "B": -1}, {"A": 2.0, "B": 1.0}) == pytest.approx(1 / 3)
    assert total_risk({"A": 0, "B": 0}, {"A": 1.0, "B": 1.0}) == 0.0
    assert total_risk({"A": -1}, {"A": 1.0}) == -1.0


def test_total_risk_missing_scores_and_weights():
    # unscored risks contribute nothing; unweighted risks count as zero weight
    assert total_risk({"A": 1, "B": None}, {"A": 2.0, "B": 5.0}) == 1.0
    assert total_risk({"A": 1, "C": 1}, {"A": 2.0}) == 1.0
    with pytest.raises(AllWeightsZero):
        total_risk({"A": None}, {"A": 2.0})
    with pytest.raises(AllWeightsZero):
        total_risk({"A": 1}, {"B": 1.0})


def test_total_risk_bounds():
    rng = random.Random(3)
    for _ in range(200):
        scores = {f"r{i}": rng.choice([-1, 0, 1]) for i in range(5)}
        weights = {f"r{i}": rng.uniform(0.1, 5) for i in range(5)}
        assert -1.0 <= total_risk(scores, weights) <= 1.0


def profile_for(risk_catalog, risk_ids):
    findings = [
        RiskFinding(risk=risk_catalog.risk(rid), qa_pairs=[], avg_score=0.5,
                    severity="High", measurable=True)
        for rid in risk_ids
    ]
    return RiskProfile(use_case_id="c", findings=findings)


def scored_inventory(schema):
    """Two candidates with toxicity results 0.9 (good) and 0.3 (bad)."""
    g = KnowledgeGraph(schema)
    apache = g.upsert_entity("license", "apache-2.0")
    good = g.upsert_entity("aimodel", "good-model")
    bad = g.upsert_entity("aimodel", "bad-model")
    for model, score in ((good, 0.9), (bad, 0.3)):
        g.add_triple(model, apache, "licensed under")
        result = g.upsert_entity(
            "aievalresult", f"toxicity-stub {model.label}",
            attrs={"benchmark": "toxicity-stub", "score": repr(score), "guardrail": ""},
        )
        g.add_triple(model, result, "scored")
    return g, (good, bad)


@pytest.fixture(scope="module")
def eval_catalog():
    return load_eval_catalog(bundled_data_dir() / "benchmarks.yaml")


def test_recommend_dominance_and_evidence(schema, risk_catalog, eval_catalog):
    g, (good, bad) = scored_inventory(schema)
    policy = make_policy(
        weights={"IBM:atlas-toxic-output": 2.0},
        reference_models=["reference-model-a", "reference-model-b"],
    )
    profile = profile_for(risk_catalog, ["IBM:atlas-toxic-output"])
    rec = recommend(profile, [good, bad], policy, g, eval_catalog)
    assert [m for m, _, _ in rec.ranked] == ["good-model", "bad-model"]
    top = rec.ranked[0]
    assert top[1] == 1.0
    detail = top[2]["IBM:atlas-toxic-output"]
    assert detail.tri == 1
    assert detail.evidence  # result entity ids backing the score


def test_recommend_missing_eval_proposed(schema, risk_catalog, eval_catalog):
    g, (good, bad) = scored_inventory(schema)
    policy = make_policy(
        weights={"IBM:atlas-toxic-output": 2.0, "IBM:atlas-output-bias": 1.0},
        reference_models=["reference-model-a", "reference-model-b"],
    )
    profile = profile_for(risk_catalog, ["IBM:atlas-toxic-output", "IBM:atlas-output-bias"])
    rec = recommend(profile, [good, bad], policy, g, eval_catalog)
    assert rec.missing_evals["good-model"] == ["IBM:atlas-output-bias"]


def test_recommend_tie_breaks_by_model_id(schema, risk_catalog, eval_catalog):
    g = KnowledgeGraph(schema)
    apache = g.upsert_entity("license", "apache-2.0")
    models = [g.upsert_entity("aimodel", name) for name in ("zzz", "aaa")]
    for model in models:
        g.add_triple(model, apache, "licensed under")
        result = g.upsert_entity(
            "aievalresult", f"toxicity-stub {model.label}",
            attrs={"benchmark": "toxicity-stub", "score": "0.9", "guardrail": ""},
        )
        g.add_triple(model, result, "scored")
    policy = make_policy(weights={"IBM:atlas-toxic-output": 1.0},
                         reference_models=["reference-model-a"])
    profile = profile_for(risk_catalog, ["IBM:atlas-toxic-output"])
    rec = recommend(profile, models, policy, g, eval_catalog)
    assert [m for m, _, _ in rec.ranked] == ["aaa", "zzz"]


def test_recommend_all_filtered_raises(schema, risk_catalog, eval_catalog):
    g = KnowledgeGraph(schema)
    bad_license = g.upsert_entity("license", "proprietary-restricted")
    model = g.upsert_entity("aimodel", "locked")
    g.add_triple(model, bad_license, "licensed under")
    profile = profile_for(risk_catalog, ["IBM:atlas-toxic-output"])
    with pytest.raises(NoCandidatesAfterFilter) as err:
        recommend(profile, [model], make_policy(), g, eval_catalog)
    assert ("locked", "license") in err.value.exclusions


def test_ranking_invariant_under_weight_rescaling():
    rng = random.Random(11)
    risks = [f"r{i}" for i in range(6)]
    for _ in range(50):
        weights = {r: rng.uniform(0.01, 5.0) for r in risks}
        scale = rng.uniform(0.01, 100.0)
        models = {
            f"m{j}": {r: rng.choice([-1, 0, 1]) for r in risks} for j in range(5)
        }
        def ranking(wts):
            totals = {m: total_risk(scores, wts) for m, scores in models.items()}
            return sorted(totals, key=lambda m: (-totals[m], m))
        assert ranking(weights) == ranking({r: w * scale for r, w in weights.items()})


def test_recommend_with_incumbent_attaches_comparison(schema, risk_catalog, eval_catalog):
    g, (good, bad) = scored_inventory(schema)
    policy = make_policy(
        weights={"IBM:atlas-toxic-output": 2.0},
        reference_models=["reference-model-a", "reference-model-b"],
    )
    profile = profile_for(risk_catalog, ["IBM:atlas-toxic-output"])
    rec = recommend(profile, [good, bad], policy, g, eval_catalog, incumbent="bad-model")
    assert rec.comparison is not None
    assert rec.comparison["incumbent"] == "bad-model"
    assert rec.comparison["challenger"] == "good-model"
    assert rec.comparison["strengths"] == ["IBM:atlas-toxic-output"]


def test_compare_challenger():
    scores = {
        "incumbent": {"tox": 0, "bias": 1, "halluc": None, "inj": 0},
        "challenger": {"tox": 1, "bias": -1, "halluc": 0, "inj": 0},
    }
    out = compare_challenger("incumbent", "challenger", scores)
    assert out["strengths"] == ["tox"]
    assert out["weaknesses"] == ["bias"]
    assert out["incomparable"] == ["halluc"]


def test_compare_identical_vectors():
    scores = {"a": {"tox": 1}, "b": {"tox": 1}}
    out = compare_challenger("a", "b", scores)
    assert out["strengths"] == [] and out["weaknesses"] == []


def test_compare_disjoint_raises():
    scores = {"a": {"tox": 1, "bias": None}, "b": {"tox": None, "bias": -1}}
    with pytest.raises(DisjointRiskSets):
        compare_challenger("a", "b", scores)


def test_policy_loader_and_validation(tmp_path):
    path = tmp_path / "p.yaml"
    path.write_text(
        "name: strict\nweights:\n  r1: 2\nacceptable_licenses: [MIT]\nepsilon: 0.1\n"
        "reference_models: [ref-a]\n"
    )
    policy = load_policy(path)
    assert policy.name == "strict"
    assert policy.acceptable_licenses == {"mit"}
    assert any(r.attribute == "license" for r in policy.categorical_rules)

    with pytest.raises(ParseError):
        PolicyConfig(weights={"r": 0.0})
    with pytest.raises(ParseError):
        PolicyConfig(weights={"r": 1.0}, epsilon=-1)


def test_model_facts_from_graph(schema):
    g, (m1, m2, m3) = inventory_graph(schema)
    org = g.upsert_entity("organization", "acme")
    g.add_triple(org, m1, "develops")
    facts = model_facts_from_graph(g, m1)
    assert facts == {"license": ["apache-2.0"], "organization": ["acme"]}
