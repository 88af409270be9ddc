"""Precision / recall / F1 of a predicted triple set against ground truth.

Exact matching requires kinds and labels to agree component-wise in the
same order; the relation wording never matters.  Judge matching keeps the
exact matches and asks the gateway whether remaining cross pairs describe
the same fact, recovering direction swaps and aliases a lexical
comparison misses.  Matching is always a partial bijection: every
predicted and every gold triple is used at most once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import ParseError
from .gateway import Gateway
from .kg import KnowledgeGraph, normalize_label

logger = logging.getLogger(__name__)

# (subject_kind, subject_label, object_kind, object_label)
TripleTuple = tuple[str, str, str, str]


@dataclass(frozen=True)
class GoldTriple:
    subject_label: str
    subject_kind: str
    object_label: str
    object_kind: str

    def as_tuple(self) -> TripleTuple:
        return (self.subject_kind, self.subject_label, self.object_kind, self.object_label)


@dataclass
class MatchReport:
    precision: float
    recall: float
    f1: float
    matched: list[tuple[TripleTuple, TripleTuple]]
    unmatched_pred: list[TripleTuple]
    unmatched_gold: list[TripleTuple]
    mode: str  # "exact" | "judge"
    runs: int = 1
    empty_prediction: bool = False

    def row(self, method: str = "") -> dict:
        """Machine-readable record shaped like the familiar results table."""
        return {
            "method": method,
            "match": self.mode,
            "runs": self.runs,
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
        }


def f1_score(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def load_gold(path: Union[str, Path]) -> list[GoldTriple]:
    """Gold TSV: subject_label, subject_kind, object_label, object_kind."""
    gold = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) < 4:
            raise ParseError(f"{path}:{lineno}: gold rows need 4 tab-separated columns")
        gold.append(
            GoldTriple(
                subject_label=normalize_label(cells[0]),
                subject_kind=cells[1].strip(),
                object_label=normalize_label(cells[2]),
                object_kind=cells[3].strip(),
            )
        )
    return gold


def graph_predictions(graph: KnowledgeGraph) -> list[TripleTuple]:
    return graph.triple_tuples()


def _coerce(triples: Sequence) -> list[TripleTuple]:
    """Comparable form: kinds casefolded, labels normalized.

    Gold files write kinds the way documents do ('aimodel'); the graph
    stores schema casing ('AiModel'); neither difference is a mismatch.
    """
    out = []
    for t in triples:
        if isinstance(t, GoldTriple):
            t = t.as_tuple()
        sk, sl, ok, ol = t
        out.append((sk.lower(), normalize_label(sl), ok.lower(), normalize_label(ol)))
    return out


def _report(
    matched: list[tuple[TripleTuple, TripleTuple]],
    pred: list[TripleTuple],
    gold: list[TripleTuple],
    mode: str,
    runs: int,
) -> MatchReport:
    # remove by value, once per match: tuples may repeat in either set
    matched_pred: list[TripleTuple] = [p for p, _ in matched]
    matched_gold: list[TripleTuple] = [g for _, g in matched]
    unmatched_pred = list(pred)
    for p in matched_pred:
        unmatched_pred.remove(p)
    unmatched_gold = list(gold)
    for g in matched_gold:
        unmatched_gold.remove(g)

    empty = len(pred) == 0
    precision = 0.0 if empty else len(matched) / len(pred)
    recall = 0.0 if not gold else len(matched) / len(gold)
    return MatchReport(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        matched=matched,
        unmatched_pred=unmatched_pred,
        unmatched_gold=unmatched_gold,
        mode=mode,
        runs=runs,
        empty_prediction=empty,
    )


def exact_match(pred: Sequence, gold: Sequence, runs: int = 1) -> MatchReport:
    """Greedy unique pairing on component-wise tuple equality.

    An empty prediction set reports precision 0 with a flag rather than
    dividing by zero, keeping multi-run curves total.
    """
    pred_t = _coerce(pred)
    gold_t = _coerce(gold)

    matched: list[tuple[TripleTuple, TripleTuple]] = []
    gold_pool: dict[TripleTuple, int] = {}
    for g in gold_t:
        gold_pool[g] = gold_pool.get(g, 0) + 1
    for p in pred_t:
        if gold_pool.get(p, 0) > 0:
            gold_pool[p] -= 1
            matched.append((p, p))
    return _report(matched, pred_t, gold_t, "exact", runs)


def _format_triple(t: TripleTuple) -> str:
    return f"[{t[1]!r}, {t[0]!r}, {t[3]!r}, {t[2]!r}]"


def judge_match(
    pred: Sequence,
    gold: Sequence,
    gateway: Gateway,
    runs: int = 1,
) -> MatchReport:
    """Exact matches first, then gateway verdicts over leftover pairs.

    Candidate pairs must share at least one kind (bounds the pair volume);
    they are judged in sorted order and paired one-to-one as affirmative
    verdicts arrive.  An unparseable verdict counts as a non-match.
    """
    base = exact_match(pred, gold, runs)
    matched = list(base.matched)
    rem_pred = list(base.unmatched_pred)
    rem_gold = list(base.unmatched_gold)

    candidates = []
    for p in rem_pred:
        for g in rem_gold:
            if {p[0], p[2]} & {g[0], g[2]}:
                candidates.append((p, g))
    candidates.sort()

    used_pred: set[int] = set()
    used_gold: set[int] = set()
    for p, g in candidates:
        # indexes, not values: duplicates must not double-match
        try:
            pi = next(i for i, x in enumerate(rem_pred) if x == p and i not in used_pred)
            gi = next(i for i, x in enumerate(rem_gold) if x == g and i not in used_gold)
        except StopIteration:
            continue
        verdict = gateway.ask(
            "triple_judge",
            {"left": _format_triple(p), "right": _format_triple(g)},
        )
        first = verdict.strip().split()[0].lower().strip(".,:;!") if verdict.strip() else ""
        if first not in ("yes", "no"):
            logger.info("unparseable judge verdict %r for %s vs %s", verdict, p, g)
            continue
        if first == "yes":
            used_pred.add(pi)
            used_gold.add(gi)
            matched.append((p, g))

    pred_t = _coerce(pred)
    gold_t = _coerce(gold)
    report = _report(matched, pred_t, gold_t, "judge", runs)
    return report


def multi_run_curve(
    run_graphs: Sequence[KnowledgeGraph],
    gold: Sequence,
    mode: str = "exact",
    gateway: Optional[Gateway] = None,
) -> list[MatchReport]:
    """One report per cumulative run prefix (graphs must be prefixes)."""
    reports = []
    for i, graph in enumerate(run_graphs, start=1):
        pred = graph_predictions(graph)
        if mode == "judge":
            if gateway is None:
                raise ParseError("judge mode needs a gateway")
            reports.append(judge_match(pred, gold, gateway, runs=i))
        else:
            reports.append(exact_match(pred, gold, runs=i))
    return reports
