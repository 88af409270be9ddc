"""Domain graph plus evidence graph.

Facts are typed triples between deduplicated entities; every triple
carries provenance records (source document, chunk, extraction method,
run, confidence).  Triples are stored direction-normalized so the same
fact harvested in either order lands on one record, and the file format
is line-delimited so graphs diff cleanly under version control.

Writes must be serialized by the caller (single-writer contract per
graph); reads are safe to share.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import (
    EmptyLabel,
    IllegalRelation,
    ParseError,
    SelfLoop,
    UnknownEntity,
    UnknownKind,
    UnknownTriple,
)
from .ontology import OntologySchema

logger = logging.getLogger(__name__)

_WS = re.compile(r"\s+")


def normalize_label(label: str) -> str:
    """Unicode-lowercase, trim, collapse internal whitespace.

    Deliberately no stemming or alias folding: matching stays predictable.
    """
    return _WS.sub(" ", label.strip().lower())


def default_confidence(disagreeing_strategies: int = 0) -> float:
    """Confidence attached to extraction-sourced evidence.

    Placeholder formula 1 / (1 + number of disagreeing strategies);
    curated facts use 1.0.  Kept in one place so a better calibration can
    replace it without touching call sites.
    """
    if disagreeing_strategies < 0:
        raise ValueError("disagreeing_strategies must be >= 0")
    return 1.0 / (1.0 + disagreeing_strategies)


@dataclass(frozen=True)
class Evidence:
    """One provenance record backing a triple."""

    doc_id: str
    chunk_index: int = 0
    method: str = "curated"
    run_index: int = 1
    confidence: float = 1.0
    quote: Optional[str] = None

    def __post_init__(self):
        if self.chunk_index < 0:
            raise ValueError("chunk_index must be >= 0")
        if self.run_index < 1:
            raise ValueError("run_index must be >= 1")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must be within [0, 1]")

    @classmethod
    def curated(cls, doc_id: str = "curated", quote: Optional[str] = None) -> "Evidence":
        """Evidence for a manually asserted fact: method 'curated', full confidence."""
        return cls(doc_id=doc_id, method="curated", confidence=1.0, quote=quote)

    def to_dict(self) -> dict:
        rec = {
            "doc_id": self.doc_id,
            "chunk_index": self.chunk_index,
            "method": self.method,
            "run_index": self.run_index,
            "confidence": self.confidence,
        }
        if self.quote is not None:
            rec["quote"] = self.quote
        return rec

    @classmethod
    def from_dict(cls, rec: dict) -> "Evidence":
        return cls(
            doc_id=str(rec["doc_id"]),
            chunk_index=int(rec.get("chunk_index", 0)),
            method=str(rec.get("method", "curated")),
            run_index=int(rec.get("run_index", 1)),
            confidence=float(rec.get("confidence", 1.0)),
            quote=rec.get("quote"),
        )


@dataclass
class Entity:
    id: str
    kind: str
    label: str
    attrs: dict[str, str] = field(default_factory=dict)

    def key(self) -> tuple[str, str]:
        return (self.kind, self.label)


@dataclass
class Triple:
    subject: Entity
    object: Entity
    relation_label: Optional[str] = None
    evidence: list[Evidence] = field(default_factory=list)

    def key(self) -> tuple[str, str]:
        """Unordered pair key used for deduplication."""
        return tuple(sorted((self.subject.id, self.object.id)))  # type: ignore[return-value]

    def as_tuple(self) -> tuple[str, str, str, str]:
        """(subject_kind, subject_label, object_kind, object_label) in
        stored canonical direction (the shape evaluation compares)."""
        return (self.subject.kind, self.subject.label, self.object.kind, self.object.label)


class KnowledgeGraph:
    """In-memory domain + evidence graph validated against a schema."""

    def __init__(self, schema: OntologySchema):
        self.schema = schema
        self.entities: dict[str, Entity] = {}
        self._by_key: dict[tuple[str, str], str] = {}
        self.triples: dict[tuple[str, str], Triple] = {}

    # -- entities ----------------------------------------------------------

    def upsert_entity(
        self, kind: str, label: str, attrs: Optional[dict[str, str]] = None
    ) -> Entity:
        """Return the entity for (kind, normalized label), creating it if new.

        Attr maps merge on re-upsert; the newest value wins per key.
        """
        kind_name = self.schema.kind(kind).name  # raises UnknownKind
        norm = normalize_label(label)
        if not norm:
            raise EmptyLabel(f"entity of kind {kind_name} has empty label")
        key = (kind_name, norm)
        existing_id = self._by_key.get(key)
        if existing_id is not None:
            entity = self.entities[existing_id]
            if attrs:
                entity.attrs.update({str(k): str(v) for k, v in attrs.items()})
            return entity
        entity_id = f"{kind_name.lower()}:{norm}"
        entity = Entity(id=entity_id, kind=kind_name, label=norm,
                        attrs={str(k): str(v) for k, v in (attrs or {}).items()})
        self.entities[entity_id] = entity
        self._by_key[key] = entity_id
        return entity

    def get_entity(self, kind: str, label: str) -> Optional[Entity]:
        try:
            kind_name = self.schema.kind(kind).name
        except UnknownKind:
            return None
        entity_id = self._by_key.get((kind_name, normalize_label(label)))
        return self.entities.get(entity_id) if entity_id else None

    def entities_of_kind(self, kind: str, include_subclasses: bool = True) -> list[Entity]:
        kinds = (
            set(self.schema.descendants(kind)) if include_subclasses else {self.schema.kind(kind).name}
        )
        found = [e for e in self.entities.values() if e.kind in kinds]
        return sorted(found, key=lambda e: (e.label, e.kind))

    # -- triples -----------------------------------------------------------

    def _canonical_direction(self, a: Entity, b: Entity) -> tuple[Entity, Entity]:
        fwd = self.schema.allowed_relation(a.kind, b.kind)
        rev = self.schema.allowed_relation(b.kind, a.kind)
        if not fwd and not rev:
            raise IllegalRelation(
                f"no rule permits ({a.kind}, {b.kind}) in either direction"
            )
        if fwd and rev:
            # Both directions legal: smaller (kind, label) pair goes first
            # so repeated ingestion cannot mint two facts for one pair.
            return (a, b) if (a.kind, a.label) <= (b.kind, b.label) else (b, a)
        return (a, b) if fwd else (b, a)

    def add_triple(
        self,
        subject: Entity,
        object: Entity,
        relation_label: Optional[str] = None,
        evidence: Union[Evidence, Iterable[Evidence], None] = None,
    ) -> Triple:
        """Insert a fact, or append evidence to the existing one for this pair."""
        for ent in (subject, object):
            if self.entities.get(ent.id) is not ent:
                raise UnknownEntity(f"entity {ent.id!r} not in this graph")
        if subject.id == object.id:
            raise SelfLoop(f"triple links entity {subject.id!r} to itself")

        records: list[Evidence]
        if evidence is None:
            records = []
        elif isinstance(evidence, Evidence):
            records = [evidence]
        else:
            records = list(evidence)

        subj, obj = self._canonical_direction(subject, object)
        key = tuple(sorted((subj.id, obj.id)))
        existing = self.triples.get(key)  # type: ignore[arg-type]
        if existing is not None:
            existing.evidence.extend(records)
            return existing
        triple = Triple(subject=subj, object=obj, relation_label=relation_label, evidence=records)
        self.triples[key] = triple  # type: ignore[index]
        return triple

    def neighbors(
        self, entity: Entity, kind_filter: Optional[str] = None
    ) -> list[tuple[Entity, Triple]]:
        """Entities sharing a triple with ``entity``, label-ascending."""
        if self.entities.get(entity.id) is not entity:
            raise UnknownEntity(f"entity {entity.id!r} not in this graph")
        wanted: Optional[set[str]] = None
        if kind_filter is not None:
            wanted = set(self.schema.descendants(kind_filter))
        out = []
        for triple in self.triples.values():
            if triple.subject.id == entity.id:
                other = triple.object
            elif triple.object.id == entity.id:
                other = triple.subject
            else:
                continue
            if wanted is None or other.kind in wanted:
                out.append((other, triple))
        out.sort(key=lambda pair: (pair[0].label, pair[0].kind))
        return out

    def evidence_for(self, triple: Triple) -> list[Evidence]:
        stored = self.triples.get(triple.key())
        if stored is None:
            raise UnknownTriple(f"triple {triple.key()} not in this graph")
        return sorted(stored.evidence, key=lambda ev: (ev.doc_id, ev.run_index, ev.chunk_index))

    def find_triple(self, a: Entity, b: Entity) -> Optional[Triple]:
        return self.triples.get(tuple(sorted((a.id, b.id))))  # type: ignore[arg-type]

    # -- bulk views ------------------------------------------------------

    def triple_tuples(self) -> list[tuple[str, str, str, str]]:
        """All facts as (s_kind, s_label, o_kind, o_label), sorted."""
        return sorted(t.as_tuple() for t in self.triples.values())

    def clone(self) -> "KnowledgeGraph":
        """Cheap snapshot for read-only analysis."""
        other = KnowledgeGraph(self.schema)
        for entity in self.entities.values():
            clone = Entity(id=entity.id, kind=entity.kind, label=entity.label,
                           attrs=dict(entity.attrs))
            other.entities[clone.id] = clone
            other._by_key[clone.key()] = clone.id
        for key, triple in self.triples.items():
            other.triples[key] = Triple(
                subject=other.entities[triple.subject.id],
                object=other.entities[triple.object.id],
                relation_label=triple.relation_label,
                evidence=list(triple.evidence),
            )
        return other

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        mine = {e.id: (e.kind, e.label, e.attrs) for e in self.entities.values()}
        theirs = {e.id: (e.kind, e.label, e.attrs) for e in other.entities.values()}
        if mine != theirs:
            return False
        if set(self.triples) != set(other.triples):
            return False
        for key, triple in self.triples.items():
            peer = other.triples[key]
            if (triple.subject.id, triple.object.id, triple.relation_label) != (
                peer.subject.id,
                peer.object.id,
                peer.relation_label,
            ):
                return False
            if triple.evidence != peer.evidence:
                return False
        return True


# -- import / export ----------------------------------------------------------
#
# One JSON record per line, tagged "E" or "T", entities before the triples
# that reference them, stable field order.

def export_graph(graph: KnowledgeGraph, path: Union[str, Path]) -> None:
    path = Path(path)
    lines = []
    for entity in sorted(graph.entities.values(), key=lambda e: (e.kind, e.label)):
        rec = {"t": "E", "id": entity.id, "kind": entity.kind, "label": entity.label}
        if entity.attrs:
            rec["attrs"] = {k: entity.attrs[k] for k in sorted(entity.attrs)}
        lines.append(json.dumps(rec, ensure_ascii=False))
    for triple in sorted(graph.triples.values(), key=lambda t: (t.subject.id, t.object.id)):
        rec = {
            "t": "T",
            "subject": triple.subject.id,
            "object": triple.object.id,
            "label": triple.relation_label,
            "evidence": [ev.to_dict() for ev in triple.evidence],
        }
        lines.append(json.dumps(rec, ensure_ascii=False))
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def import_graph(path: Union[str, Path], schema: OntologySchema) -> KnowledgeGraph:
    path = Path(path)
    graph = KnowledgeGraph(schema)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read graph file {path}: {exc}") from exc

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: bad record: {exc}") from exc
        tag = rec.get("t")
        if tag == "E":
            try:
                entity = graph.upsert_entity(rec["kind"], rec["label"], rec.get("attrs"))
            except (KeyError, UnknownKind, EmptyLabel) as exc:
                raise ParseError(f"{path}:{lineno}: bad entity record: {exc}") from exc
            if entity.id != rec.get("id", entity.id):
                raise ParseError(
                    f"{path}:{lineno}: entity id {rec.get('id')!r} does not match "
                    f"derived id {entity.id!r}"
                )
        elif tag == "T":
            subject = graph.entities.get(rec.get("subject", ""))
            obj = graph.entities.get(rec.get("object", ""))
            if subject is None or obj is None:
                missing = rec.get("subject") if subject is None else rec.get("object")
                raise ParseError(f"{path}:{lineno}: triple references undeclared entity {missing!r}")
            evidence = [Evidence.from_dict(e) for e in rec.get("evidence", [])]
            try:
                graph.add_triple(subject, obj, rec.get("label"), evidence)
            except (IllegalRelation, SelfLoop) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
        else:
            raise ParseError(f"{path}:{lineno}: unknown record tag {tag!r}")
    return graph
