"""Operator entry points.

Every workflow is scriptable: exit code 0 on success, 1 on domain errors,
2 on usage errors, and `--format json` turns each human table into a
machine-readable record.  `--offline` forces the scripted backend so CI
runs never open a network connection.
"""

from __future__ import annotations

import functools
import json
import logging
from pathlib import Path

import click

from . import figures as figs
from .errors import GovError
from .extraction import get_strategy, run_extraction, write_run_logs
from .gateway import Gateway, ScriptedBackend, load_default_templates
from .ingest import (
    DEFAULT_MAX_CHARS,
    DEFAULT_OVERLAP_CHARS,
    SourceDocument,
    chunk_document,
    classify_document,
    load_lexicon,
)
from .kg import KnowledgeGraph, export_graph, import_graph
from .kg_eval import exact_match, graph_predictions, judge_match, load_gold, multi_run_curve
from .ontology import load_default_schema, load_schema
from .questionnaire import evaluate_accuracy, load_cases, load_questionnaire
from .recommender import load_policy
from .service.context import build_context
from .service.report import report_bytes
from .service.store import AssessmentStore
from .service import workflow
from .taxonomy import bundled_data_dir

logger = logging.getLogger(__name__)


def domain_errors(fn):
    """Map GovError to exit code 1 with the message on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GovError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _gateway(offline: bool, script: str | None) -> Gateway:
    templates = load_default_templates()
    if offline:
        path = script or bundled_data_dir() / "scripts" / "demo_assess.yaml"
        return Gateway(templates, ScriptedBackend.from_file(path))
    from .service.context import _http_config_from_env
    from .gateway import HttpBackend

    return Gateway(templates, HttpBackend(_http_config_from_env()))


@click.group()
@click.option("--verbose", is_flag=True, help="Log at INFO level.")
def main(verbose: bool):
    """Risk assessment workflows for AI use cases."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


# -- ingest -------------------------------------------------------------------


@main.command()
@click.option("--doc", "doc_path", required=True, type=click.Path(exists=True))
@click.option("--doc-id", default=None, help="Defaults to the file stem.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--schema", "schema_path", type=click.Path(exists=True), default=None)
@click.option("--strategy", default="custom_prompt",
              type=click.Choice(["graph_prompt", "rag_query", "custom_prompt"]))
@click.option("--runs", default=1, show_default=True)
@click.option("--max-chars", default=DEFAULT_MAX_CHARS, show_default=True)
@click.option("--overlap-chars", default=DEFAULT_OVERLAP_CHARS, show_default=True)
@click.option("--graph", "graph_path", required=True, type=click.Path(),
              help="Graph file to create or extend.")
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None,
              help="Scripted-backend rules (offline mode).")
@click.option("--format", "fmt", default="human", type=click.Choice(["human", "json"]))
@domain_errors
def ingest(doc_path, doc_id, lexicon_path, schema_path, strategy, runs,
           max_chars, overlap_chars, graph_path, log_path, offline, script, fmt):
    """Chunk a document, extract triples, accumulate them into a graph."""
    schema = load_schema(schema_path) if schema_path else load_default_schema()
    text = Path(doc_path).read_text(encoding="utf-8")
    doc = SourceDocument(id=doc_id or Path(doc_path).stem, text=text)
    lexicon = load_lexicon(lexicon_path or bundled_data_dir() / "lexicon.tsv")

    doc_class = classify_document(doc, lexicon, schema)
    labels = [f"subject:{doc_class.primary_subject[0]}:{doc_class.primary_subject[1]}"] \
        if doc_class.primary_subject else []
    chunks = chunk_document(doc, max_chars, overlap_chars, labels=labels + doc_class.flags)

    gateway = _gateway(offline, script)
    graph_file = Path(graph_path)
    graph = import_graph(graph_file, schema) if graph_file.exists() else KnowledgeGraph(schema)
    graph, logs = run_extraction(
        chunks, get_strategy(strategy), doc_class.ontology_subset, gateway, schema, graph, runs
    )
    export_graph(graph, graph_file)
    if log_path:
        write_run_logs(logs, log_path)
    summary = {
        "doc_id": doc.id,
        "primary_subject": list(doc_class.primary_subject) if doc_class.primary_subject else None,
        "chunks": len(chunks),
        "entities": len(graph.entities),
        "triples": len(graph.triples),
        "runs": runs,
        "graph": str(graph_file),
    }
    if fmt == "json":
        click.echo(json.dumps(summary))
    else:
        click.echo(
            f"{doc.id}: {len(chunks)} chunks, {len(graph.entities)} entities, "
            f"{len(graph.triples)} triples after {runs} run(s)"
        )


# -- kg-eval ------------------------------------------------------------------


def _print_match_rows(rows: list[dict], fmt: str):
    if fmt == "json":
        for row in rows:
            click.echo(json.dumps(row))
        return
    header = f"{'Method':<24} {'Match':<6} {'Runs':>4} {'P':>7} {'R':>7} {'F1':>7}"
    click.echo(header)
    click.echo("-" * len(header))
    for row in rows:
        click.echo(
            f"{row['method']:<24} {row['match']:<6} {row['runs']:>4} "
            f"{row['precision']:>7.3f} {row['recall']:>7.3f} {row['f1']:>7.3f}"
        )


@main.command(name="kg-eval")
@click.option("--pred", "pred_paths", multiple=True, required=True,
              type=click.Path(exists=True),
              help="Predicted graph file; repeat for cumulative run prefixes.")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--mode", default="exact", type=click.Choice(["exact", "judge"]))
@click.option("--method", default="custom_prompt", help="Label for the report rows.")
@click.option("--runs", default=None, type=int,
              help="Run count label when a single graph is given.")
@click.option("--schema", "schema_path", type=click.Path(exists=True), default=None)
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", default="human", type=click.Choice(["human", "json"]))
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="Write a score-over-runs figure (multiple --pred).")
@domain_errors
def kg_eval(pred_paths, gold_path, mode, method, runs, schema_path, offline,
            script, fmt, plot_path):
    """Score predicted triples against gold truth (exact or judge match)."""
    schema = load_schema(schema_path) if schema_path else load_default_schema()
    gold = load_gold(gold_path)
    gateway = _gateway(offline, script) if mode == "judge" else None

    graphs = [import_graph(p, schema) for p in pred_paths]
    if len(graphs) > 1:
        reports = multi_run_curve(graphs, gold, mode=mode, gateway=gateway)
    else:
        pred = graph_predictions(graphs[0])
        n = runs or 1
        reports = [
            judge_match(pred, gold, gateway, runs=n) if mode == "judge"
            else exact_match(pred, gold, runs=n)
        ]
    rows = [r.row(method) for r in reports]
    _print_match_rows(rows, fmt)
    if plot_path:
        figs.recall_curve_figure(rows, plot_path)
        click.echo(f"figure written to {plot_path}", err=True)


# -- qa-eval ------------------------------------------------------------------


@main.command(name="qa-eval")
@click.option("--cases", "cases_path", type=click.Path(exists=True), default=None)
@click.option("--mode", default="few_shot", type=click.Choice(["zero_shot", "few_shot"]))
@click.option("--questionnaire", "questionnaire_path", type=click.Path(exists=True),
              default=None)
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", default="human", type=click.Choice(["human", "json"]))
@domain_errors
def qa_eval(cases_path, mode, questionnaire_path, offline, script, fmt):
    """Measure questionnaire auto-fill accuracy on gold-annotated intents."""
    bundle = bundled_data_dir()
    cases = load_cases(cases_path or bundle / "qa_cases.yaml")
    questionnaire = load_questionnaire(questionnaire_path or bundle / "questionnaire.yaml")
    gateway = _gateway(offline, script or bundle / "scripts" / "qa_eval.yaml")

    report = evaluate_accuracy(cases, questionnaire, gateway, mode=mode)
    if fmt == "json":
        click.echo(json.dumps(report.to_dict()))
        return
    click.echo(f"{'Question kind':<18} {'N':>4} {'1 choice':>9} {'user choice':>12}")
    for kind, entry in report.per_kind.items():
        one = "n/a" if entry["one_choice"] is None else f"{entry['one_choice']:.3f}"
        user = entry.get("user_choice")
        user_s = "-" if user is None else f"{user:.3f}"
        click.echo(f"{kind:<18} {int(entry['total']):>4} {one:>9} {user_s:>12}")


# -- assessment workflow --------------------------------------------------------


def _context(data_dir, offline, script):
    return build_context(data_dir, offline=offline, script_path=script)


@main.command()
@click.option("--intent", default=None)
@click.option("--intent-file", type=click.Path(exists=True), default=None)
@click.option("--policy", default="default", show_default=True)
@click.option("--data-dir", default="aigov-data", show_default=True, type=click.Path())
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the report here instead of stdout.")
@click.option("--figures", "figures_dir", type=click.Path(), default=None,
              help="Also render tables and charts into this directory.")
@domain_errors
def assess(intent, intent_file, policy, data_dir, offline, script, out_path, figures_dir):
    """End-to-end: intent -> questionnaire -> risks -> ranking -> report."""
    if intent is None and intent_file is None:
        raise click.UsageError("provide --intent or --intent-file")
    if intent is None:
        intent = Path(intent_file).read_text(encoding="utf-8").strip()

    ctx = _context(data_dir, offline, script)
    store = AssessmentStore(ctx.data_dir, clock=ctx.clock, actor=ctx.actor)
    assessment = workflow.create_assessment(ctx, store, intent)
    workflow.confirm_assessment(
        ctx, store, assessment.id, expected_version=assessment.version
    )
    try:
        workflow.compute_recommendation(ctx, store, assessment.id, policy_name=policy)
    except KeyError:
        raise click.ClickException(f"no policy named {policy!r}") from None
    report = workflow.get_report(ctx, store, assessment.id)

    payload = report_bytes(report)
    if out_path:
        Path(out_path).write_bytes(payload)
        click.echo(f"assessment {assessment.id}: report written to {out_path}", err=True)
    else:
        click.echo(payload.decode("utf-8"), nl=False)
    if figures_dir:
        for path in figs.render_report_outputs(report, figures_dir):
            click.echo(f"wrote {path}", err=True)


@main.command()
@click.option("--assessment", "assessment_id", required=True)
@click.option("--policy", default="default", show_default=True,
              help="Policy name, or path to a policy file.")
@click.option("--incumbent", default=None, help="Model id to compare challengers against.")
@click.option("--data-dir", default="aigov-data", show_default=True, type=click.Path())
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", default="human", type=click.Choice(["human", "json"]))
@domain_errors
def recommend(assessment_id, policy, incumbent, data_dir, offline, script, fmt):
    """Rank candidate models for an existing assessment."""
    ctx = _context(data_dir, offline, script)
    store = AssessmentStore(ctx.data_dir, clock=ctx.clock, actor=ctx.actor)
    if policy.endswith((".yaml", ".yml")):
        loaded = load_policy(policy)  # ParseError (exit 1) when missing
        ctx.policies[loaded.name] = loaded
        policy = loaded.name
    try:
        rec = workflow.compute_recommendation(
            ctx, store, assessment_id, policy_name=policy, incumbent=incumbent
        )
    except KeyError:
        raise click.ClickException(f"no policy named {policy!r}") from None

    if fmt == "json":
        click.echo(json.dumps(rec))
        return
    click.echo(f"{'Model':<32} {'Total':>7}  Notes")
    for entry in rec["ranked"]:
        missing = rec["missing_evals"].get(entry["model"], [])
        note = f"missing {len(missing)} eval(s)" if missing else ""
        click.echo(f"{entry['model']:<32} {entry['total_risk_value']:>7.3f}  {note}")
    for item in rec["excluded"]:
        click.echo(f"{item['model']:<32} {'---':>7}  excluded: {item['reason']}")
    comparison = rec.get("comparison")
    if comparison:
        click.echo(
            f"challenger {comparison['challenger']} vs incumbent {comparison['incumbent']}:"
        )
        click.echo(f"  strengths:  {', '.join(comparison['strengths']) or '-'}")
        click.echo(f"  weaknesses: {', '.join(comparison['weaknesses']) or '-'}")
        if comparison["incomparable"]:
            click.echo(f"  incomparable: {', '.join(comparison['incomparable'])}")


@main.command()
@click.option("--assessment", "assessment_id", required=True)
@click.option("--model", required=True)
@click.option("--benchmark", default=None)
@click.option("--guardrail", default=None)
@click.option("--data-dir", default="aigov-data", show_default=True, type=click.Path())
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", default="human", type=click.Choice(["human", "json"]))
@domain_errors
def evaluate(assessment_id, model, benchmark, guardrail, data_dir, offline, script, fmt):
    """Run the assessment's benchmark selection (or one benchmark) on a model."""
    ctx = _context(data_dir, offline, script)
    store = AssessmentStore(ctx.data_dir, clock=ctx.clock, actor=ctx.actor)
    results = workflow.run_evaluations(
        ctx, store, assessment_id, model=model, benchmark=benchmark, guardrail=guardrail
    )
    if fmt == "json":
        click.echo(json.dumps(results))
        return
    for result in results:
        if "delta" in result:
            pre, post = result["pre"], result["post"]
            click.echo(
                f"{pre['benchmark_id']}: {pre['score']:.2f} -> {post['score']:.2f} "
                f"(delta {result['delta']:+.2f} with {post['guardrail_id']})"
            )
        else:
            click.echo(
                f"{result['benchmark_id']}: score {result['score']:.2f} "
                f"on {result['sample_count']} items"
            )


@main.command()
@click.option("--assessment", "assessment_id", required=True)
@click.option("--data-dir", default="aigov-data", show_default=True, type=click.Path())
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--figures", "figures_dir", type=click.Path(), default=None)
@domain_errors
def report(assessment_id, data_dir, offline, script, out_path, figures_dir):
    """Emit the stored report (regenerating it from current state)."""
    ctx = _context(data_dir, offline, script)
    store = AssessmentStore(ctx.data_dir, clock=ctx.clock, actor=ctx.actor)
    document = workflow.get_report(ctx, store, assessment_id)
    payload = report_bytes(document)
    if out_path:
        Path(out_path).write_bytes(payload)
        click.echo(f"report written to {out_path}", err=True)
    else:
        click.echo(payload.decode("utf-8"), nl=False)
    if figures_dir:
        for path in figs.render_report_outputs(document, figures_dir):
            click.echo(f"wrote {path}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", default="aigov-data", show_default=True, type=click.Path())
@click.option("--offline/--online", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True), default=None)
@domain_errors
def serve(host, port, data_dir, offline, script):
    """Serve the HTTP API."""
    import uvicorn

    from .service.app import create_app

    ctx = _context(data_dir, offline, script)
    uvicorn.run(create_app(ctx), host=host, port=port)


if __name__ == "__main__":
    main()
