from __future__ import annotations

import pytest

from aigov.errors import AdapterFailure, GuardrailFailure, ParseError
from aigov.eval_runner import (
    ADAPTERS,
    BenchmarkSpec,
    BlockAllGuardrail,
    EvalCatalog,
    IdentityGuardrail,
    KeywordFilterGuardrail,
    ScriptedModelAdapter,
    build_guardrail,
    fixed_clock,
    load_eval_catalog,
    load_scripted_models,
    run_benchmark,
    run_with_guardrail,
    select_evaluations,
)
from aigov.kg import KnowledgeGraph
from aigov.mitigation import GuardrailEntry
from aigov.risk_engine import RiskFinding, RiskProfile
from aigov.taxonomy import bundled_data_dir

CLOCK = fixed_clock("2025-06-01T00:00:00Z")


@pytest.fixture(scope="module")
def catalog():
    return load_eval_catalog(bundled_data_dir() / "benchmarks.yaml")


def toxicity_spec(catalog):
    return catalog.benchmark("toxicity-stub")


def failing_model(n_failures: int) -> ScriptedModelAdapter:
    """Fails the first n toxicity items with distinct unsafe markers."""
    markers = ["idiot", "stupid", "worthless", "pathetic"]
    items = ADAPTERS["toxicity_stub"].items
    rules = [
        (items[i].prompt[:25], f"you {markers[i % len(markers)]}, obviously")
        for i in range(n_failures)
    ]
    return ScriptedModelAdapter("test-model", rules, default="A careful, safe reply.")


def finding(risk_catalog, rid, severity="High"):
    return RiskFinding(risk=risk_catalog.risk(rid), qa_pairs=[], avg_score=0.5,
                       severity=severity, measurable=True)


def test_select_orders_by_severity_then_id(risk_catalog, catalog):
    profile = RiskProfile(use_case_id="c", findings=[
        finding(risk_catalog, "IBM:atlas-output-bias", "Low"),
        finding(risk_catalog, "IBM:atlas-toxic-output", "High"),
        finding(risk_catalog, "IBM:atlas-prompt-injection", "Medium"),
    ])
    specs = select_evaluations(profile, catalog)
    assert [s.id for s in specs] == ["toxicity-stub", "injection-stub", "bias-stub"]


def test_select_empty_profile(catalog):
    assert select_evaluations(RiskProfile(use_case_id="c", findings=[]), catalog) == []


def test_select_dedupes_shared_benchmark(risk_catalog, catalog):
    profile = RiskProfile(use_case_id="c", findings=[
        finding(risk_catalog, "IBM:atlas-toxic-output", "High"),
        finding(risk_catalog, "IBM:atlas-harmful-output", "Medium"),
    ])
    specs = select_evaluations(profile, catalog)
    assert [s.id for s in specs] == ["toxicity-stub"]


def test_run_benchmark_scores_and_persists(schema, catalog):
    graph = KnowledgeGraph(schema)
    outcome = run_benchmark(toxicity_spec(catalog), failing_model(3), graph, now=CLOCK)
    assert outcome.score == pytest.approx(0.7)
    assert outcome.sample_count == 10
    assert outcome.correct_count == 7
    assert outcome.timestamp == "2025-06-01T00:00:00Z"

    model = graph.get_entity("AiModel", "test-model")
    results = graph.neighbors(model, kind_filter="AiEvalResult")
    assert len(results) == 1
    stored = results[0][0]
    assert float(stored.attrs["score"]) == outcome.score  # exact round-trip
    evaluation = graph.get_entity("AiEvaluation", "toxicity-stub")
    assert graph.find_triple(evaluation, stored) is not None


def test_run_benchmark_reuses_subclassed_model_entity(schema, catalog):
    graph = KnowledgeGraph(schema)
    llm = graph.upsert_entity("LargeLanguageModel", "test-model")
    run_benchmark(toxicity_spec(catalog), failing_model(2), graph, now=CLOCK)
    # no sibling AiModel entity minted for the same label
    models = graph.entities_of_kind("AiModel")
    assert [m.id for m in models] == [llm.id]
    assert graph.neighbors(llm, kind_filter="AiEvalResult")


def test_run_benchmark_reproducible(schema, catalog):
    a = run_benchmark(toxicity_spec(catalog), failing_model(2), KnowledgeGraph(schema), now=CLOCK)
    b = run_benchmark(toxicity_spec(catalog), failing_model(2), KnowledgeGraph(schema), now=CLOCK)
    assert a.to_dict() == b.to_dict()


def test_refusal_rule_scores_safe(schema, catalog):
    refuser = ScriptedModelAdapter("refuser", [], default="I cannot help with that.")
    outcome = run_benchmark(toxicity_spec(catalog), refuser, KnowledgeGraph(schema), now=CLOCK)
    assert outcome.score == 1.0  # refusals count as safe for the stub suites


def test_unregistered_adapter_fails_before_model_call(schema):
    spec = BenchmarkSpec(
        id="mystery", linked_risks=("IBM:atlas-toxic-output",),
        direction="higher_better", metric_name="x", adapter="not_registered",
    )

    class Exploding:
        model_id = "m"

        def answer(self, prompt):
            raise AssertionError("model must not be called")

    with pytest.raises(AdapterFailure):
        run_benchmark(spec, Exploding(), KnowledgeGraph(schema), now=CLOCK)


def test_adapter_failure_writes_nothing(schema, catalog):
    class FailsMidway:
        model_id = "m"

        def __init__(self):
            self.calls = 0

        def answer(self, prompt):
            self.calls += 1
            if self.calls > 4:
                raise RuntimeError("backend went away")
            return "fine"

    graph = KnowledgeGraph(schema)
    with pytest.raises(AdapterFailure):
        run_benchmark(toxicity_spec(catalog), FailsMidway(), graph, now=CLOCK)
    assert not graph.entities  # no partial results


def test_guardrail_delta_counts_exactly(schema, catalog):
    # 3 failing items; the filter blocks 2 of them -> delta is exactly +0.2
    guardrail = KeywordFilterGuardrail("kw", ["idiot", "stupid"])
    pre, post, delta = run_with_guardrail(
        toxicity_spec(catalog), failing_model(3), guardrail, KnowledgeGraph(schema), now=CLOCK
    )
    assert pre.score == pytest.approx(0.7)
    assert post.score == pytest.approx(0.9)
    assert delta == 0.2
    assert post.guardrail_id == "kw"
    assert pre.guardrail_id is None


def test_identity_guardrail_zero_delta(schema, catalog):
    _, _, delta = run_with_guardrail(
        toxicity_spec(catalog), failing_model(3), IdentityGuardrail(), KnowledgeGraph(schema),
        now=CLOCK,
    )
    assert delta == 0.0


def test_block_all_guardrail_hits_refusal_score(schema, catalog):
    _, post, _ = run_with_guardrail(
        toxicity_spec(catalog), failing_model(3), BlockAllGuardrail(), KnowledgeGraph(schema),
        now=CLOCK,
    )
    assert post.score == 1.0  # replacement text is safe for every item


def test_guarded_and_raw_results_coexist(schema, catalog):
    graph = KnowledgeGraph(schema)
    run_with_guardrail(
        toxicity_spec(catalog), failing_model(3),
        KeywordFilterGuardrail("kw", ["idiot"]), graph, now=CLOCK,
    )
    model = graph.get_entity("AiModel", "test-model")
    results = graph.neighbors(model, kind_filter="AiEvalResult")
    assert len(results) == 2
    flags = sorted(r.attrs.get("guardrail", "") for r, _ in results)
    assert flags == ["", "kw"]


def test_build_guardrail_from_catalog_entry():
    entry = GuardrailEntry(
        id="g", linked_risks=("IBM:atlas-toxic-output",), description="",
        filter_kind="output",
        config={"impl": "keyword_filter", "blocklist": "foo,bar", "replacement": "[x]"},
    )
    guardrail = build_guardrail(entry)
    assert guardrail.apply("contains FOO here") == "[x]"
    assert guardrail.apply("clean") == "clean"

    with pytest.raises(GuardrailFailure):
        build_guardrail(GuardrailEntry(
            id="g2", linked_risks=("IBM:atlas-toxic-output",), description="",
            filter_kind="output", config={"impl": "quantum"},
        ))


def test_bundled_catalog_adapters_registered(catalog):
    for spec in catalog.benchmarks:
        assert spec.adapter in ADAPTERS
        assert len(ADAPTERS[spec.adapter].items) == 10


def test_bundled_scripted_models_parse():
    adapters = load_scripted_models(bundled_data_dir() / "scripts" / "model_adapters.yaml")
    assert "granite-3-8b-instruct" in adapters
    granite = adapters["granite-3-8b-instruct"]
    assert granite.answer("The support bot useless complaint") != granite.default


def test_catalog_validation():
    with pytest.raises(ParseError):
        BenchmarkSpec(id="b", linked_risks=(), direction="higher_better",
                      metric_name="m", adapter="a")
    with pytest.raises(ParseError):
        BenchmarkSpec(id="b", linked_risks=("r",), direction="sideways",
                      metric_name="m", adapter="a")
    catalog = EvalCatalog()
    with pytest.raises(ParseError):
        catalog.benchmark("ghost")
