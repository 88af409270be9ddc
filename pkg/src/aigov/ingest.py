"""Document classification and chunking.

Classification is plain term frequency over a label lexicon: the most
mentioned label names the document's primary subject, which in turn
narrows the ontology subset the extractor is asked about.  Chunking
splits on paragraph, then sentence, then whitespace boundaries and gives
consecutive chunks a fixed-width shared overlap region, so stitching the
chunks back together (overlaps removed) reproduces the document exactly.

Both operations are pure functions of their inputs.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import InvalidConfig, ParseError
from .ontology import OntologySchema

logger = logging.getLogger(__name__)

DEFAULT_MAX_CHARS = 4000
DEFAULT_OVERLAP_CHARS = 200

_HEADING = re.compile(r"^(#{1,6})\s+(.+?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class SourceDocument:
    id: str
    text: str
    origin_kind: str = "other"  # model-card | technical-doc | eval-output | other
    origin_uri: str = ""

    def __post_init__(self):
        if not self.text:
            raise InvalidConfig(f"document {self.id!r} has empty text")


@dataclass
class DocClass:
    """Outcome of term-frequency classification."""

    primary_subject: Optional[tuple[str, str]]  # (kind, label) or None
    term_frequencies: dict[str, int]
    ontology_subset: set[str]
    flags: list[str] = field(default_factory=list)


@dataclass
class Chunk:
    doc_id: str
    index: int
    text: str
    span: tuple[int, int]
    section_title: Optional[str] = None
    labels: list[str] = field(default_factory=list)


def load_lexicon(path: Union[str, Path]) -> list[tuple[str, str]]:
    """TSV lexicon: one (label, kind) per line, '#' comments allowed."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) < 2:
            raise ParseError(f"{path}:{lineno}: lexicon lines need label<TAB>kind")
        entries.append((cells[0].strip(), cells[1].strip()))
    return entries


def classify_document(
    doc: SourceDocument,
    lexicon: list[tuple[str, str]],
    schema: OntologySchema,
) -> DocClass:
    """Pick the document's primary subject by lexicon term frequency.

    Counts are case-insensitive whole-token matches.  Ties break to the
    lexicographically smaller label and are flagged.  A document with no
    lexicon hit keeps the full ontology in scope and no subject.
    """
    if not lexicon:
        raise InvalidConfig("lexicon must not be empty")

    counts: dict[str, int] = {}
    kinds_by_label: dict[str, str] = {}
    for label, kind in lexicon:
        pattern = re.compile(
            r"(?<![A-Za-z0-9])" + re.escape(label) + r"(?![A-Za-z0-9])", re.IGNORECASE
        )
        hits = len(pattern.findall(doc.text))
        if hits:
            counts[label] = hits
            kinds_by_label[label] = kind

    if not counts:
        return DocClass(
            primary_subject=None,
            term_frequencies={},
            ontology_subset={k.name for k in schema.kinds},
            flags=["no-lexicon-hit"],
        )

    best = max(counts.values())
    leaders = sorted(label for label, n in counts.items() if n == best)
    winner = leaders[0]
    flags = []
    if len(leaders) > 1:
        flags.append("tie:" + ",".join(leaders))

    kind = schema.kind(kinds_by_label[winner]).name
    return DocClass(
        primary_subject=(kind, winner),
        term_frequencies=dict(sorted(counts.items())),
        ontology_subset=schema.related_kinds(kind),
        flags=flags,
    )


def _pick_split(text: str, lo: int, hi: int) -> int:
    """Best split position in (lo, hi]: prefer paragraph break, then
    sentence end, then whitespace; fall back to the hard limit."""
    window = text[lo:hi]
    para = window.rfind("\n\n")
    if para > 0:
        return lo + para + 2  # keep the blank line with the left chunk
    sentence = max(window.rfind(". "), window.rfind(".\n"),
                   window.rfind("! "), window.rfind("? "))
    if sentence > 0:
        return lo + sentence + 2
    space = max(window.rfind(" "), window.rfind("\n"))
    if space > 0:
        return lo + space + 1
    return hi


def chunk_document(
    doc: SourceDocument,
    max_chars: int = DEFAULT_MAX_CHARS,
    overlap_chars: int = DEFAULT_OVERLAP_CHARS,
    labels: Optional[list[str]] = None,
) -> list[Chunk]:
    """Split a document into overlapping chunks.

    Core windows advance at most ``max_chars`` of new text per chunk;
    every chunk after the first additionally carries the last
    ``overlap_chars`` characters of its predecessor, so chunk i+1 starts
    exactly that far before chunk i ends.
    """
    if max_chars <= 0 or overlap_chars < 0 or overlap_chars >= max_chars:
        raise InvalidConfig(
            f"need 0 <= overlap_chars < max_chars, got {overlap_chars} / {max_chars}"
        )

    text = doc.text
    headings = [(m.start(), m.group(2)) for m in _HEADING.finditer(text)]

    def title_for(pos: int) -> Optional[str]:
        current = None
        for start, title in headings:
            if start <= pos:
                current = title
            else:
                break
        return current

    chunks: list[Chunk] = []
    core_start = 0
    index = 0
    while core_start < len(text):
        hard_end = min(len(text), core_start + max_chars)
        core_end = hard_end if hard_end == len(text) else _pick_split(text, core_start, hard_end)
        if core_end <= core_start:  # pathological window; force progress
            core_end = hard_end
        start = max(0, core_start - overlap_chars) if index else 0
        chunks.append(
            Chunk(
                doc_id=doc.id,
                index=index,
                text=text[start:core_end],
                span=(start, core_end),
                section_title=title_for(start),
                labels=list(labels or []),
            )
        )
        core_start = core_end
        index += 1

    if not chunks:  # SourceDocument guarantees non-empty text, but stay total
        chunks = [Chunk(doc_id=doc.id, index=0, text=text, span=(0, len(text)),
                        section_title=title_for(0), labels=list(labels or []))]
    return chunks


def reassemble(chunks: list[Chunk]) -> str:
    """Invert chunking: concatenate chunk texts with overlaps removed."""
    parts = []
    emitted_to = 0
    for chunk in sorted(chunks, key=lambda c: c.index):
        parts.append(chunk.text[emitted_to - chunk.span[0]:])
        emitted_to = chunk.span[1]
    return "".join(parts)
