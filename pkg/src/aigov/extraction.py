"""Triple extraction over chunks, and multi-run accumulation into the KG.

Three strategies share one pipeline: render the strategy's template with
the chunk text and the allowed entity kinds, send it through the gateway,
salvage whatever structure the response holds, normalize, and keep the
triples whose kinds resolve against the schema.  Accumulating several
runs has union semantics; every occurrence of a fact adds one evidence
record carrying its run index, so the triple count never decreases with
more runs while the evidence trail keeps growing.
"""

from __future__ import annotations

import ast
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ParseGaveNothing, GovError
from .gateway import Decoding, Gateway, run_seed
from .ingest import Chunk
from .kg import KnowledgeGraph, Evidence, default_confidence, normalize_label
from .ontology import OntologySchema

logger = logging.getLogger(__name__)

PROPERTY_KIND = "PropertyValue"


@dataclass(frozen=True)
class ExtractionStrategy:
    id: str
    template_id: str
    parse_mode: str  # "json-list" | "field-structure"


STRATEGIES: dict[str, ExtractionStrategy] = {
    "graph_prompt": ExtractionStrategy("graph_prompt", "extract_graph", "json-list"),
    "rag_query": ExtractionStrategy("rag_query", "extract_rag", "json-list"),
    "custom_prompt": ExtractionStrategy("custom_prompt", "extract_fields", "field-structure"),
}


def get_strategy(name: str) -> ExtractionStrategy:
    try:
        return STRATEGIES[name]
    except KeyError:
        raise GovError(
            f"unknown extraction strategy {name!r}; pick one of {sorted(STRATEGIES)}"
        ) from None


@dataclass
class RawTriple:
    subject_label: str
    subject_kind: str
    object_label: str
    object_kind: str
    relation_label: Optional[str] = None
    description: Optional[str] = None
    doc_id: str = ""
    chunk_index: int = 0
    method: str = ""


@dataclass
class ChunkLog:
    chunk_index: int
    emitted: int = 0
    parsed: int = 0
    dropped: int = 0
    drop_reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "chunk_index": self.chunk_index,
            "emitted": self.emitted,
            "parsed": self.parsed,
            "dropped": self.dropped,
            "drop_reasons": self.drop_reasons,
        }


@dataclass
class RunLog:
    strategy: str
    run_index: int
    chunks: list[ChunkLog] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "run_index": self.run_index,
            "chunks": [c.to_dict() for c in self.chunks],
        }


# -- salvage parsing -----------------------------------------------------
#
# Model responses wrap their payload in fences, prose, or single-quoted
# pseudo-JSON; the salvage pass digs out the first parseable structure.

_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)


def _balanced_slice(text: str, start: int) -> Optional[str]:
    openers = {"[": "]", "{": "}"}
    closer = openers[text[start]]
    opener = text[start]
    depth = 0
    quote: Optional[str] = None
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if quote:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch == opener:
            depth += 1
        elif ch == closer:
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _loads_forgiving(snippet: str):
    try:
        return json.loads(snippet)
    except json.JSONDecodeError:
        pass
    try:
        # Single-quoted lists and None/True/False literals.
        return ast.literal_eval(snippet)
    except (ValueError, SyntaxError):
        return None


def salvage_structure(text: str):
    """First JSON-ish list or object found in a completion, or raise."""
    candidates = [text.strip()]
    candidates += [m.strip() for m in _FENCE.findall(text)]
    for candidate in candidates:
        value = _loads_forgiving(candidate)
        if isinstance(value, (list, dict)):
            return value
    for i, ch in enumerate(text):
        if ch in "[{":
            snippet = _balanced_slice(text, i)
            if snippet is None:
                continue
            value = _loads_forgiving(snippet)
            if isinstance(value, (list, dict)):
                return value
    raise ParseGaveNothing("completion held no parseable list or object")


def _items_from_json_list(value) -> list[dict]:
    if isinstance(value, dict):  # some models wrap the list
        for key in ("triples", "facts", "items", "relations"):
            if isinstance(value.get(key), list):
                value = value[key]
                break
        else:
            return []
    items = []
    for entry in value:
        if isinstance(entry, (list, tuple)) and len(entry) >= 4:
            items.append(
                {
                    "subject": entry[0],
                    "subject_kind": entry[1],
                    "object": entry[2],
                    "object_kind": entry[3],
                    "relation": entry[4] if len(entry) > 4 else None,
                }
            )
        elif isinstance(entry, dict):
            items.append(
                {
                    "subject": entry.get("subject") or entry.get("subject_label"),
                    "subject_kind": entry.get("subject_kind") or entry.get("subject_type"),
                    "object": entry.get("object") or entry.get("object_label"),
                    "object_kind": entry.get("object_kind") or entry.get("object_type"),
                    "relation": entry.get("relation") or entry.get("relationship"),
                    "description": entry.get("description"),
                }
            )
    return items


# Field layout answered by the custom_prompt strategy: each field names the
# entity kind its values carry and the relation wording documents tend to use.
FIELD_STRUCTURE: dict[str, tuple[str, str]] = {
    "developed_by": ("Organization", "developed by"),
    "license": ("License", "licensed under"),
    "training_data": ("Dataset", "trained on"),
    "parameters": (PROPERTY_KIND, "has property"),
    "benchmark_results": ("AiEvalResult", "scored"),
    "part_of_system": ("AiSystem", "part of"),
}


def _items_from_field_structure(value) -> list[dict]:
    if not isinstance(value, dict):
        return []
    subject = value.get("model_name")
    if not subject:
        return []
    items = []
    for fieldname, (kind, relation) in FIELD_STRUCTURE.items():
        raw = value.get(fieldname)
        if raw is None:
            continue
        values = raw if isinstance(raw, (list, tuple)) else [raw]
        for v in values:
            if v is None or str(v).strip() == "":
                continue
            items.append(
                {
                    "subject": str(subject),
                    "subject_kind": "AiModel",
                    "object": str(v),
                    "object_kind": kind,
                    "relation": relation,
                }
            )
    return items


def _resolve_kind(schema: OntologySchema, raw_kind: Optional[str]) -> Optional[str]:
    if not raw_kind:
        return None
    squash = re.sub(r"[^a-z0-9]", "", str(raw_kind).lower())
    for kind in schema.kinds:
        if re.sub(r"[^a-z0-9]", "", kind.name.lower()) == squash:
            return kind.name
    return None


def _value_bearing(label: str) -> bool:
    # numbers with units, version-tagged license names, energy figures:
    # anything carrying a digit; bare words are not property values
    return any(ch.isdigit() for ch in label)


def promote_properties(raw: RawTriple, schema: OntologySchema) -> RawTriple:
    """Give value-bearing objects a home as PropertyValue entities.

    Applies only when the object kind does not resolve, the object label
    carries a value, and the (resolved) subject kind admits a
    PropertyValue relation.  Schema-valid triples pass through unchanged;
    non-value objects of unknown kind stay unknown and drop upstream.
    """
    if _resolve_kind(schema, raw.object_kind) is not None:
        return raw
    if not _value_bearing(raw.object_label):
        return raw
    subject_kind = _resolve_kind(schema, raw.subject_kind)
    if subject_kind is None:
        return raw
    if schema.allowed_relation(subject_kind, PROPERTY_KIND):
        raw.object_kind = PROPERTY_KIND
    return raw


def extract_chunk_logged(
    chunk: Chunk,
    strategy: ExtractionStrategy,
    ontology_subset: Iterable[str],
    gateway: Gateway,
    schema: OntologySchema,
    run_index: int = 1,
) -> tuple[list[RawTriple], ChunkLog]:
    log = ChunkLog(chunk_index=chunk.index)
    template = gateway.templates.get(strategy.template_id)
    variables = {"run": str(run_index), "chunk_text": chunk.text}
    if "kinds" in template.required_vars:
        variables["kinds"] = ", ".join(sorted(ontology_subset))
    decoding = Decoding(
        temperature=template.default_temperature,
        seed=run_seed(chunk.doc_id, run_index),
    )
    response = gateway.ask(strategy.template_id, variables, decoding)

    try:
        structure = salvage_structure(response)
    except ParseGaveNothing:
        logger.warning(
            "chunk %s/%d: response had no parseable structure", chunk.doc_id, chunk.index
        )
        log.drop_reasons.append("no parseable structure")
        return [], log

    if strategy.parse_mode == "field-structure":
        items = _items_from_field_structure(structure)
    else:
        items = _items_from_json_list(structure)
    log.emitted = len(items)

    kept: list[RawTriple] = []
    for item in items:
        raw = RawTriple(
            subject_label=normalize_label(str(item.get("subject") or "")),
            subject_kind=str(item.get("subject_kind") or ""),
            object_label=normalize_label(str(item.get("object") or "")),
            object_kind=str(item.get("object_kind") or ""),
            relation_label=item.get("relation"),
            description=item.get("description"),
            doc_id=chunk.doc_id,
            chunk_index=chunk.index,
            method=strategy.id,
        )
        if not raw.subject_label or not raw.object_label:
            log.dropped += 1
            log.drop_reasons.append("empty label")
            continue
        promote_properties(raw, schema)
        subject_kind = _resolve_kind(schema, raw.subject_kind)
        object_kind = _resolve_kind(schema, raw.object_kind)
        if subject_kind is None or object_kind is None:
            bad = raw.subject_kind if subject_kind is None else raw.object_kind
            log.dropped += 1
            log.drop_reasons.append(f"unknown kind: {bad}")
            continue
        raw.subject_kind = subject_kind
        raw.object_kind = object_kind
        kept.append(raw)
    log.parsed = len(kept)
    return kept, log


def extract_chunk(
    chunk: Chunk,
    strategy: ExtractionStrategy,
    ontology_subset: Iterable[str],
    gateway: Gateway,
    schema: OntologySchema,
    run_index: int = 1,
) -> list[RawTriple]:
    triples, _ = extract_chunk_logged(
        chunk, strategy, ontology_subset, gateway, schema, run_index
    )
    return triples


def accumulate_runs(
    run_outputs: list[list[RawTriple]],
    graph: KnowledgeGraph,
    first_run_index: int = 1,
) -> KnowledgeGraph:
    """Fold extraction runs into the graph with union semantics.

    Each occurrence of a fact appends an evidence record with its run
    index; illegal or degenerate triples are logged and skipped, never
    fatal.
    """
    for offset, run in enumerate(run_outputs):
        run_index = first_run_index + offset
        for raw in run:
            try:
                subject = graph.upsert_entity(raw.subject_kind, raw.subject_label)
                obj = graph.upsert_entity(raw.object_kind, raw.object_label)
                graph.add_triple(
                    subject,
                    obj,
                    raw.relation_label,
                    Evidence(
                        doc_id=raw.doc_id or "unknown",
                        chunk_index=raw.chunk_index,
                        method=raw.method or "extraction",
                        run_index=run_index,
                        confidence=default_confidence(0),
                        quote=raw.description,
                    ),
                )
            except GovError as exc:
                logger.info(
                    "run %d: skipped (%s, %s) -> (%s, %s): %s",
                    run_index, raw.subject_kind, raw.subject_label,
                    raw.object_kind, raw.object_label, exc,
                )
    return graph


def run_extraction(
    chunks: list[Chunk],
    strategy: ExtractionStrategy,
    ontology_subset: Iterable[str],
    gateway: Gateway,
    schema: OntologySchema,
    graph: KnowledgeGraph,
    runs: int = 1,
) -> tuple[KnowledgeGraph, list[RunLog]]:
    """Drive ``runs`` extraction passes over the chunks into one graph."""
    logs: list[RunLog] = []
    for run_index in range(1, runs + 1):
        run_log = RunLog(strategy=strategy.id, run_index=run_index)
        output: list[RawTriple] = []
        for chunk in chunks:
            triples, chunk_log = extract_chunk_logged(
                chunk, strategy, ontology_subset, gateway, schema, run_index
            )
            output.extend(triples)
            run_log.chunks.append(chunk_log)
        accumulate_runs([output], graph, first_run_index=run_index)
        logs.append(run_log)
    return graph, logs


def write_run_logs(logs: list[RunLog], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(json.dumps(log.to_dict(), ensure_ascii=False) + "\n")
