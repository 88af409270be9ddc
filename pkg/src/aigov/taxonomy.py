"""Risk taxonomies and cross-taxonomy SKOS mappings.

The base catalog is a desk-scale subset of the IBM AI Risk Atlas; peer
taxonomies (NIST, MIT, OWASP) are represented by the entries that appear
in bundled mapping tables.  Mappings load from SSSOM-style TSV files and
are never transitively closed: only asserted rows are trusted.
"""

from __future__ import annotations

import importlib.resources
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

import yaml

from .errors import ParseError, UnknownPredicate, UnknownRisk, UnknownTaxonomy

logger = logging.getLogger(__name__)


class MappingRelation(str, Enum):
    """Closed SKOS match vocabulary."""

    EXACT = "skos:exactMatch"
    CLOSE = "skos:closeMatch"
    BROAD = "skos:broadMatch"
    NARROW = "skos:narrowMatch"
    RELATED = "skos:relatedMatch"

    @classmethod
    def parse(cls, value: str) -> "MappingRelation":
        try:
            return cls(value)
        except ValueError:
            raise UnknownPredicate(f"unknown mapping predicate {value!r}") from None

    def inverse(self) -> "MappingRelation":
        """SKOS inverse: broad <-> narrow, the rest are self-inverse."""
        if self is MappingRelation.BROAD:
            return MappingRelation.NARROW
        if self is MappingRelation.NARROW:
            return MappingRelation.BROAD
        return self


@dataclass(frozen=True)
class RiskEntry:
    id: str  # namespaced, e.g. "IBM:atlas-toxic-output"
    taxonomy: str
    name: str
    description: str = ""
    dimension: Optional[str] = None  # input / output / training-data / non-technical


@dataclass(frozen=True)
class MappingRow:
    subject_id: str
    predicate: MappingRelation
    object_id: str


@dataclass
class RiskCatalog:
    """Declared taxonomies plus their risk entries, keyed by id."""

    taxonomies: dict[str, str] = field(default_factory=dict)  # id -> display name
    risks: dict[str, RiskEntry] = field(default_factory=dict)

    def risk(self, risk_id: str) -> RiskEntry:
        entry = self.risks.get(risk_id)
        if entry is None:
            raise UnknownRisk(f"risk {risk_id!r} not in catalog")
        return entry

    def has_taxonomy(self, taxonomy: str) -> bool:
        return taxonomy in self.taxonomies

    def risks_in(self, taxonomy: str) -> list[RiskEntry]:
        if not self.has_taxonomy(taxonomy):
            raise UnknownTaxonomy(f"taxonomy {taxonomy!r} not declared")
        return sorted(
            (r for r in self.risks.values() if r.taxonomy == taxonomy), key=lambda r: r.id
        )


@dataclass
class MappingTable:
    rows: list[MappingRow] = field(default_factory=list)


def load_risk_catalog(path: Union[str, Path]) -> RiskCatalog:
    """Load a risk catalog (same YAML-shaped style as the ontology schema)."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read risk catalog {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: malformed risk catalog: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: risk catalog must be a mapping")

    catalog = RiskCatalog()
    for item in raw.get("taxonomies") or []:
        catalog.taxonomies[str(item["id"])] = str(item.get("name", item["id"]))
    for item in raw.get("risks") or []:
        try:
            entry = RiskEntry(
                id=str(item["id"]),
                taxonomy=str(item["taxonomy"]),
                name=str(item["name"]),
                description=str(item.get("description", "")),
                dimension=item.get("dimension"),
            )
        except KeyError as exc:
            raise ParseError(f"{path}: risk entry missing {exc}") from exc
        if entry.id in catalog.risks:
            raise ParseError(f"{path}: duplicate risk id {entry.id!r}")
        if entry.taxonomy not in catalog.taxonomies:
            raise ParseError(f"{path}: risk {entry.id!r} names undeclared taxonomy {entry.taxonomy!r}")
        catalog.risks[entry.id] = entry
    return catalog


# -- SSSOM-style TSV ----------------------------------------------------------

_HEADER = ("subject_id", "predicate_id", "object_id")


def read_sssom_rows(path: Union[str, Path]) -> list[tuple[str, str, str]]:
    """Raw (subject, predicate, object) rows; no catalog validation.

    `#`-prefixed lines are comments; the first data line must be the header.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read mapping file {path}: {exc}") from exc

    rows: list[tuple[str, str, str]] = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.rstrip("\n").split("\t")
        if not header_seen:
            if tuple(c.strip() for c in cells[:3]) != _HEADER:
                raise ParseError(
                    f"{path}:{lineno}: expected header {'/'.join(_HEADER)}"
                )
            header_seen = True
            continue
        if len(cells) < 3:
            raise ParseError(f"{path}:{lineno}: expected 3 tab-separated columns")
        rows.append((cells[0].strip(), cells[1].strip(), cells[2].strip()))
    if not header_seen:
        raise ParseError(f"{path}: missing SSSOM header")
    return rows


def load_sssom(path: Union[str, Path], catalog: RiskCatalog) -> MappingTable:
    """Load and validate a mapping table against the risk catalog."""
    table = MappingTable()
    seen: set[tuple[str, str, str]] = set()
    for subject, predicate, obj in read_sssom_rows(path):
        relation = MappingRelation.parse(predicate)
        for risk_id in (subject, obj):
            if risk_id not in catalog.risks:
                raise UnknownRisk(f"{path}: mapping references unknown risk {risk_id!r}")
        if catalog.risks[subject].taxonomy == catalog.risks[obj].taxonomy:
            raise ParseError(
                f"{path}: mapping {subject!r} -> {obj!r} stays inside one taxonomy"
            )
        key = (subject, predicate, obj)
        if key in seen:
            raise ParseError(f"{path}: duplicate mapping row {key}")
        seen.add(key)
        table.rows.append(MappingRow(subject_id=subject, predicate=relation, object_id=obj))
    return table


def save_sssom(table: MappingTable, path: Union[str, Path]) -> None:
    lines = ["\t".join(_HEADER)]
    lines += [f"{r.subject_id}\t{r.predicate.value}\t{r.object_id}" for r in table.rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def map_risk(
    table: MappingTable,
    catalog: RiskCatalog,
    risk_id: str,
    target_taxonomy: str,
) -> list[tuple[RiskEntry, MappingRelation]]:
    """Counterparts of ``risk_id`` in ``target_taxonomy``.

    Rows read from the object side come back with the SKOS-inverted
    predicate.  Sorted by counterpart id; never returns entries from the
    queried risk's own taxonomy.
    """
    catalog.risk(risk_id)
    if not catalog.has_taxonomy(target_taxonomy):
        raise UnknownTaxonomy(f"taxonomy {target_taxonomy!r} not declared")

    out: list[tuple[RiskEntry, MappingRelation]] = []
    for row in table.rows:
        if row.subject_id == risk_id:
            counterpart = catalog.risk(row.object_id)
            predicate = row.predicate
        elif row.object_id == risk_id:
            counterpart = catalog.risk(row.subject_id)
            predicate = row.predicate.inverse()
        else:
            continue
        if counterpart.taxonomy == target_taxonomy:
            out.append((counterpart, predicate))
    out.sort(key=lambda pair: pair[0].id)
    return out


@dataclass
class MappingReport:
    dangling: list[tuple[str, str, str]] = field(default_factory=list)
    same_taxonomy: list[tuple[str, str, str]] = field(default_factory=list)
    duplicates: list[tuple[str, str, str]] = field(default_factory=list)
    bad_predicates: list[tuple[str, str, str]] = field(default_factory=list)

    def is_clean(self) -> bool:
        return not (self.dangling or self.same_taxonomy or self.duplicates or self.bad_predicates)


def validate_mappings(
    rows: Union[MappingTable, Iterable[tuple[str, str, str]]],
    catalog: RiskCatalog,
) -> MappingReport:
    """Report-only hygiene check over raw or loaded mapping rows."""
    if isinstance(rows, MappingTable):
        raw = [(r.subject_id, r.predicate.value, r.object_id) for r in rows.rows]
    else:
        raw = list(rows)

    report = MappingReport()
    seen: set[tuple[str, str, str]] = set()
    for row in raw:
        subject, predicate, obj = row
        if row in seen:
            report.duplicates.append(row)
            continue
        seen.add(row)
        try:
            MappingRelation.parse(predicate)
        except UnknownPredicate:
            report.bad_predicates.append(row)
            continue
        if subject not in catalog.risks or obj not in catalog.risks:
            report.dangling.append(row)
            continue
        if catalog.risks[subject].taxonomy == catalog.risks[obj].taxonomy:
            report.same_taxonomy.append(row)
    return report


def bundled_data_dir() -> Path:
    return Path(str(importlib.resources.files("aigov").joinpath("data")))


def load_default_catalog() -> RiskCatalog:
    return load_risk_catalog(bundled_data_dir() / "risk_atlas.yaml")


def load_default_mappings(catalog: Optional[RiskCatalog] = None) -> MappingTable:
    """Union of all bundled mapping tables."""
    catalog = catalog or load_default_catalog()
    table = MappingTable()
    for tsv in sorted((bundled_data_dir() / "mappings").glob("*.tsv")):
        table.rows.extend(load_sssom(tsv, catalog).rows)
    return table
