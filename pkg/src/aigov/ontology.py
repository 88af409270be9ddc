"""Governance ontology: entity kinds and the relation rules between them.

The schema is loaded from a declarative YAML file with two sections
(``kinds:`` and ``relations:``) and is immutable afterwards, so concurrent
readers need no locking.  Relation validity is decided purely by kind
pairs; the free-text labels on rules are informative only.  Rules are
closed under subclassing: a rule declared on a parent kind applies to all
of its descendants on either side.
"""

from __future__ import annotations

import importlib.resources
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .errors import ParseError, SchemaError, UnknownKind

logger = logging.getLogger(__name__)

CARDINALITIES = ("one-to-many", "many-to-many")


@dataclass(frozen=True)
class EntityKind:
    """A node type; ``parent`` links it into the subclass tree."""

    name: str
    parent: Optional[str] = None


@dataclass(frozen=True)
class RelationRule:
    """Declares that subject-kind entities may relate to object-kind ones.

    Direction matters: a rule (A, B) does not imply (B, A).
    """

    subject_kind: str
    object_kind: str
    label: str = ""
    cardinality: str = "many-to-many"


@dataclass(frozen=True)
class OntologySchema:
    kinds: tuple[EntityKind, ...]
    rules: tuple[RelationRule, ...]
    version: str = "1"
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)
    _pairs: frozenset = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {k.name: k for k in self.kinds})
        object.__setattr__(
            self, "_pairs", frozenset((r.subject_kind, r.object_kind) for r in self.rules)
        )

    # -- kind lookups -------------------------------------------------

    def kind(self, name: str) -> EntityKind:
        """Resolve a kind by name, case-insensitively.

        Raises UnknownKind when the name is not declared.
        """
        k = self._by_name.get(name)
        if k is not None:
            return k
        lowered = name.strip().lower()
        for cand in self.kinds:
            if cand.name.lower() == lowered:
                return cand
        raise UnknownKind(f"kind {name!r} not declared in schema")

    def has_kind(self, name: str) -> bool:
        try:
            self.kind(name)
            return True
        except UnknownKind:
            return False

    def ancestors(self, name: str) -> list[str]:
        """Kind name followed by its parents up to the tree root."""
        chain = [self.kind(name).name]
        while True:
            parent = self._by_name[chain[-1]].parent
            if parent is None:
                return chain
            chain.append(parent)

    def descendants(self, name: str) -> list[str]:
        base = self.kind(name).name
        return [k.name for k in self.kinds if base in self.ancestors(k.name)]

    # -- relation checks ------------------------------------------------

    def allowed_relation(self, subject_kind: str, object_kind: str) -> bool:
        """True iff some rule matches (subject, object), with subclass
        substitution on both sides.  Not symmetric."""
        for s in self.ancestors(subject_kind):
            for o in self.ancestors(object_kind):
                if (s, o) in self._pairs:
                    return True
        return False

    def related_kinds(self, name: str) -> set[str]:
        """Kinds one rule-hop away from ``name`` in either direction,
        including ``name`` itself (used to narrow extraction)."""
        anc = set(self.ancestors(name))
        out = {self.kind(name).name}
        for rule in self.rules:
            if rule.subject_kind in anc:
                out.update(self.descendants(rule.object_kind))
                out.add(rule.object_kind)
            if rule.object_kind in anc:
                out.update(self.descendants(rule.subject_kind))
                out.add(rule.subject_kind)
        return out

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "kinds": [
                {"name": k.name, **({"parent": k.parent} if k.parent else {})}
                for k in self.kinds
            ],
            "relations": [
                {
                    "subject": r.subject_kind,
                    "object": r.object_kind,
                    "label": r.label,
                    "cardinality": r.cardinality,
                }
                for r in self.rules
            ],
        }


def allowed_relation(schema: OntologySchema, subject_kind: str, object_kind: str) -> bool:
    """Module-level convenience wrapper around the schema method."""
    return schema.allowed_relation(subject_kind, object_kind)


def _parse_schema(raw: dict, source: str) -> OntologySchema:
    if not isinstance(raw, dict):
        raise ParseError(f"{source}: schema file must be a mapping")
    kinds_raw = raw.get("kinds")
    rules_raw = raw.get("relations", [])
    if not isinstance(kinds_raw, list) or not kinds_raw:
        raise ParseError(f"{source}: missing or empty 'kinds' section")

    kinds: list[EntityKind] = []
    seen: set[str] = set()
    for item in kinds_raw:
        if not isinstance(item, dict) or "name" not in item:
            raise ParseError(f"{source}: kind entries need a 'name'")
        name = str(item["name"])
        if name in seen:
            raise SchemaError(f"{source}: duplicate kind {name!r}")
        seen.add(name)
        parent = item.get("parent")
        kinds.append(EntityKind(name=name, parent=str(parent) if parent else None))

    # Parent references must resolve and the parent chain must be acyclic;
    # parentless kinds hang off an implicit common root.
    for k in kinds:
        if k.parent is not None and k.parent not in seen:
            raise SchemaError(f"{source}: kind {k.name!r} has undeclared parent {k.parent!r}")
    by_name = {k.name: k for k in kinds}
    for k in kinds:
        trail = {k.name}
        cur = k.parent
        while cur is not None:
            if cur in trail:
                raise SchemaError(f"{source}: subclass cycle through {cur!r}")
            trail.add(cur)
            cur = by_name[cur].parent

    rules: list[RelationRule] = []
    rule_keys: set[tuple[str, str, str]] = set()
    for item in rules_raw or []:
        if not isinstance(item, dict):
            raise ParseError(f"{source}: relation entries must be mappings")
        try:
            subject = str(item["subject"])
            obj = str(item["object"])
        except KeyError as exc:
            raise ParseError(f"{source}: relation entry missing {exc}") from exc
        label = str(item.get("label", ""))
        cardinality = str(item.get("cardinality", "many-to-many"))
        if cardinality not in CARDINALITIES:
            raise ParseError(f"{source}: bad cardinality {cardinality!r}")
        for kname in (subject, obj):
            if kname not in seen:
                raise SchemaError(f"{source}: relation references unknown kind {kname!r}")
        key = (subject, obj, label)
        if key in rule_keys:
            raise SchemaError(f"{source}: duplicate relation {key}")
        rule_keys.add(key)
        rules.append(
            RelationRule(subject_kind=subject, object_kind=obj, label=label, cardinality=cardinality)
        )

    return OntologySchema(
        kinds=tuple(kinds), rules=tuple(rules), version=str(raw.get("version", "1"))
    )


def load_schema(path: Union[str, Path]) -> OntologySchema:
    """Load and validate a declarative schema file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read schema file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: malformed schema file: {exc}") from exc
    return _parse_schema(raw, str(path))


def save_schema(schema: OntologySchema, path: Union[str, Path]) -> None:
    Path(path).write_text(
        yaml.safe_dump(schema.to_dict(), sort_keys=False), encoding="utf-8"
    )


def default_schema_path() -> Path:
    return Path(str(importlib.resources.files("aigov").joinpath("data/ontology.yaml")))


def load_default_schema() -> OntologySchema:
    """The schema bundled with the package."""
    return load_schema(default_schema_path())
