from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from aigov.errors import (
    EmptyLabel,
    IllegalRelation,
    ParseError,
    SelfLoop,
    UnknownEntity,
    UnknownKind,
    UnknownTriple,
)
from aigov.kg import (
    Evidence,
    KnowledgeGraph,
    default_confidence,
    export_graph,
    import_graph,
    normalize_label,
)


def ev(run=1, doc="doc-1", method="graph_prompt"):
    return Evidence(doc_id=doc, chunk_index=0, method=method, run_index=run, confidence=0.5)


def test_normalize_label_rules():
    assert normalize_label("  Granite-8B-Code-Base-4K ") == "granite-8b-code-base-4k"
    assert normalize_label("a\t b\n  c") == "a b c"


@given(st.text(min_size=1).filter(lambda s: normalize_label(s)))
def test_normalization_is_idempotent(raw):
    assert normalize_label(normalize_label(raw)) == normalize_label(raw)


def test_upsert_dedupes_on_normalized_label(graph):
    a = graph.upsert_entity("aimodel", "Granite-8B-Code-Base-4K")
    b = graph.upsert_entity("aimodel", "granite-8b-code-base-4k")
    assert a is b
    assert len(graph.entities) == 1


def test_upsert_organization(graph):
    entity = graph.upsert_entity("organization", "ibm research")
    assert entity.kind == "Organization"
    assert entity.label == "ibm research"


def test_empty_label_rejected(graph):
    with pytest.raises(EmptyLabel):
        graph.upsert_entity("license", "   ")


def test_unknown_kind_rejected(graph):
    with pytest.raises(UnknownKind):
        graph.upsert_entity("flavor", "vanilla")


def test_add_triple_with_evidence(graph):
    model = graph.upsert_entity("aimodel", "granite-8b-code-base-4k")
    lic = graph.upsert_entity("license", "apache-2.0")
    triple = graph.add_triple(model, lic, "licensed under", ev())
    assert len(triple.evidence) == 1
    assert triple.subject is model  # AiModel -> License is the rule direction


def test_readd_same_pair_appends_evidence(graph):
    model = graph.upsert_entity("aimodel", "granite-8b-code-base-4k")
    lic = graph.upsert_entity("license", "apache-2.0")
    first = graph.add_triple(model, lic, "licensed under", ev(run=1))
    second = graph.add_triple(model, lic, "has license", ev(run=2))
    assert first is second
    assert len(first.evidence) == 2
    assert len(graph.triples) == 1


def test_license_license_illegal(graph):
    a = graph.upsert_entity("license", "apache-2.0")
    b = graph.upsert_entity("license", "mit")
    with pytest.raises(IllegalRelation):
        graph.add_triple(a, b, None, ev())


def test_self_loop_rejected(graph):
    a = graph.upsert_entity("risk", "toxic output")
    with pytest.raises(SelfLoop):
        graph.add_triple(a, a, None, ev())


def test_direction_canonicalized_both_insert_orders(graph):
    org = graph.upsert_entity("organization", "ibm research")
    model = graph.upsert_entity("aimodel", "granite-8b-code-base-4k")
    t1 = graph.add_triple(model, org, "developed by", ev(run=1))
    t2 = graph.add_triple(org, model, "develops", ev(run=2))
    assert t1 is t2
    assert len(graph.triples) == 1
    assert len(t1.evidence) == 2
    assert t1.subject.kind == "Organization"  # the rule direction


def test_both_directions_legal_uses_lexicographic_order(graph):
    a = graph.upsert_entity("risk", "aaa risk")
    b = graph.upsert_entity("risk", "bbb risk")
    t_fwd = graph.add_triple(b, a, "maps to", ev())
    assert t_fwd.subject is a  # smaller (kind, label) first
    assert graph.add_triple(a, b, "maps to", ev()) is t_fwd


def test_neighbors_filter_and_order(graph):
    model = graph.upsert_entity("aimodel", "granite-8b-code-base-4k")
    lic = graph.upsert_entity("license", "apache-2.0")
    res_b = graph.upsert_entity("aievalresult", "bias result")
    res_a = graph.upsert_entity("aievalresult", "attack result")
    graph.add_triple(model, lic, None, ev())
    graph.add_triple(model, res_b, None, ev())
    graph.add_triple(model, res_a, None, ev())

    results = graph.neighbors(model, kind_filter="AiEvalResult")
    assert [e.label for e, _ in results] == ["attack result", "bias result"]
    licenses = graph.neighbors(model, kind_filter="License")
    assert [e.label for e, _ in licenses] == ["apache-2.0"]


def test_neighbors_of_isolated_entity(graph):
    lonely = graph.upsert_entity("dataset", "the stack")
    assert graph.neighbors(lonely) == []


def test_neighbors_unknown_entity(graph, schema):
    other = KnowledgeGraph(schema).upsert_entity("dataset", "the stack")
    with pytest.raises(UnknownEntity):
        graph.neighbors(other)


def test_evidence_sorted_and_curated_convention(graph):
    model = graph.upsert_entity("aimodel", "m")
    guard = graph.upsert_entity("guardrail", "filter")
    risk = graph.upsert_entity("risk", "toxic output")
    triple = graph.add_triple(guard, risk, "mitigates", Evidence.curated())
    records = graph.evidence_for(triple)
    assert records[0].method == "curated"
    assert records[0].confidence == 1.0

    lic = graph.upsert_entity("license", "mit")
    t = graph.add_triple(model, lic, None, [ev(run=2, doc="b"), ev(run=1, doc="a")])
    assert [(e.doc_id, e.run_index) for e in graph.evidence_for(t)] == [("a", 1), ("b", 2)]


def test_evidence_for_unknown_triple(graph, schema):
    other = KnowledgeGraph(schema)
    a = other.upsert_entity("aimodel", "m")
    b = other.upsert_entity("license", "mit")
    t = other.add_triple(a, b, None, ev())
    with pytest.raises(UnknownTriple):
        graph.evidence_for(t)


def build_fixture_graph(schema):
    g = KnowledgeGraph(schema)
    org = g.upsert_entity("organization", "ibm research")
    models = [g.upsert_entity("aimodel", f"model-{i}") for i in range(4)]
    lic = g.upsert_entity("license", "apache-2.0")
    datasets = [g.upsert_entity("dataset", f"data-{i}") for i in range(4)]
    for i, m in enumerate(models):
        g.add_triple(org, m, "develops", ev(run=i + 1))
        g.add_triple(m, lic, "licensed under", ev())
    assert len(g.entities) == 10 and len(g.triples) == 8
    return g


def test_export_import_round_trip(tmp_path, schema):
    g = build_fixture_graph(schema)
    path = tmp_path / "graph.jsonl"
    export_graph(g, path)
    loaded = import_graph(path, schema)
    assert len(loaded.entities) == 10
    assert len(loaded.triples) == 8
    assert loaded == g


def test_export_import_empty_graph(tmp_path, schema):
    g = KnowledgeGraph(schema)
    path = tmp_path / "empty.jsonl"
    export_graph(g, path)
    assert path.read_text() == ""
    assert import_graph(path, schema) == g


def test_import_dangling_reference_names_line(tmp_path, schema):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"t": "E", "id": "license:mit", "kind": "License", "label": "mit"}\n'
        '{"t": "T", "subject": "license:mit", "object": "aimodel:ghost", '
        '"label": null, "evidence": []}\n',
        encoding="utf-8",
    )
    with pytest.raises(ParseError) as err:
        import_graph(path, schema)
    assert ":2:" in str(err.value)
    assert "ghost" in str(err.value)


def test_default_confidence_formula():
    assert default_confidence(0) == 1.0
    assert default_confidence(1) == 0.5
    assert default_confidence(3) == 0.25
    with pytest.raises(ValueError):
        default_confidence(-1)


def test_evidence_validation():
    with pytest.raises(ValueError):
        Evidence(doc_id="d", confidence=1.5)
    with pytest.raises(ValueError):
        Evidence(doc_id="d", run_index=0)
    with pytest.raises(ValueError):
        Evidence(doc_id="d", chunk_index=-1)


def test_clone_is_independent(graph):
    model = graph.upsert_entity("aimodel", "m")
    lic = graph.upsert_entity("license", "mit")
    graph.add_triple(model, lic, None, ev())
    snapshot = graph.clone()
    assert snapshot == graph
    graph.upsert_entity("dataset", "later")
    assert len(snapshot.entities) == 2
