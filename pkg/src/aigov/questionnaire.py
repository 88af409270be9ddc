"""Compliance questionnaire auto-fill and its accuracy evaluation.

Answers are suggested from the stated intent with few-shot examples and
step-by-step reasoning; a user can always override them.  Parsing is
deliberately dumb and total: option names are scanned case-insensitively
on the first response line, binary answers read a leading yes/no token,
freeform answers are taken verbatim and condensed to bullets.  Anything
unrecognizable is flagged for the user, never guessed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import yaml

from .errors import BackendError, ParseError
from .gateway import Gateway
from .kg import normalize_label

logger = logging.getLogger(__name__)

QUESTION_KINDS = ("multiple_choice", "binary", "freeform")
MODES = ("zero_shot", "few_shot")

# Over-suggesting is tolerated up to this many options beyond the ground
# truth before an answer counts as wrong under user-choice scoring.
USER_CHOICE_EXTRA_LIMIT = 2


@dataclass(frozen=True)
class FewShot:
    intent: str
    answer: str
    explanation: str = ""


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    kind: str
    options: tuple[str, ...] = ()
    few_shots: tuple[FewShot, ...] = ()
    linked_risks: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in QUESTION_KINDS:
            raise ParseError(f"question {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "multiple_choice" and len(self.options) < 2:
            raise ParseError(f"question {self.id!r}: multiple_choice needs >= 2 options")
        if self.kind == "binary" and self.options not in ((), ("yes", "no")):
            raise ParseError(f"question {self.id!r}: binary options are fixed to yes/no")


@dataclass
class Questionnaire:
    questions: list[Question] = field(default_factory=list)

    def question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise ParseError(f"question {question_id!r} not in questionnaire")


@dataclass
class AutoAnswer:
    question_id: str
    values: list[str]
    explanation: str = ""
    bullets: list[str] = field(default_factory=list)
    mode: str = "few_shot"
    needs_user: bool = False
    source: str = "auto"  # "auto" | "human" (overrides)


@dataclass(frozen=True)
class EvalCase:
    intent: str
    gold: dict[str, list[str]]


def load_questionnaire(path: Union[str, Path]) -> Questionnaire:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not isinstance(raw.get("questions"), list):
        raise ParseError(f"{path}: questionnaire needs a 'questions' list")
    questions = []
    for item in raw["questions"]:
        try:
            questions.append(
                Question(
                    id=str(item["id"]),
                    text=str(item["text"]),
                    kind=str(item["kind"]),
                    options=tuple(str(o) for o in item.get("options", [])),
                    few_shots=tuple(
                        FewShot(
                            intent=str(s["intent"]),
                            answer=str(s["answer"]),
                            explanation=str(s.get("explanation", "")),
                        )
                        for s in item.get("few_shots", [])
                    ),
                    linked_risks=tuple(str(r) for r in item.get("linked_risks", [])),
                )
            )
        except KeyError as exc:
            raise ParseError(f"{path}: question entry missing {exc}") from exc
    return Questionnaire(questions=questions)


def load_cases(path: Union[str, Path]) -> list[EvalCase]:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    items = raw.get("cases") if isinstance(raw, dict) else raw
    if not isinstance(items, list):
        raise ParseError(f"{path}: case file needs a 'cases' list")
    cases = []
    for item in items:
        cases.append(
            EvalCase(
                intent=str(item["intent"]),
                gold={str(k): [str(v) for v in vs] for k, vs in item.get("gold", {}).items()},
            )
        )
    return cases


# -- prompting ----------------------------------------------------------------


def _examples_block(question: Question, mode: str) -> str:
    if mode != "few_shot" or not question.few_shots:
        return ""
    parts = []
    for shot in question.few_shots:
        parts.append(
            f"Example:\nIntent: {shot.intent}\nAnswer: {shot.answer}\n"
            f"Explanation: {shot.explanation}"
        )
    return "\n" + "\n\n".join(parts) + "\n"


def scan_options(line: str, options: Sequence[str]) -> list[str]:
    """Options named anywhere on the line, case-insensitive, option order."""
    lowered = line.lower()
    return [opt for opt in options if opt.lower() in lowered]


def _split_first_line(text: str) -> tuple[str, str]:
    stripped = text.strip()
    if not stripped:
        return "", ""
    first, _, rest = stripped.partition("\n")
    return first.strip(), rest.strip()


def parse_bullets(text: str) -> list[str]:
    """Bullet lines from a condensation response ('-', '*' or 'n.' markers;
    bare lines count too)."""
    bullets = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        line = re.sub(r"^([-*•]|\d+[.)])\s*", "", line).strip()
        if line:
            bullets.append(line)
    return bullets


def condense_freeform(answer_text: str, gateway: Gateway) -> list[str]:
    """Condense a freeform answer to short bullets (deterministic under a
    scripted backend)."""
    if not answer_text.strip():
        raise BackendError("cannot condense an empty answer")
    response = gateway.ask("condense_bullets", {"answer": answer_text})
    bullets = parse_bullets(response)
    if not bullets:
        raise BackendError("condensation returned no bullets")
    return bullets


def auto_fill(
    intent: str,
    questionnaire: Questionnaire,
    gateway: Gateway,
    mode: str = "few_shot",
) -> list[AutoAnswer]:
    """One suggested answer per question, parsed from gateway completions."""
    if not intent.strip():
        raise ParseError("intent must not be empty")
    if mode not in MODES:
        raise ParseError(f"unknown auto-fill mode {mode!r}")

    answers = []
    for question in questionnaire.questions:
        variables = {
            "examples": _examples_block(question, mode),
            "intent": intent,
            "question_text": question.text,
        }
        if question.kind == "multiple_choice":
            variables["options"] = ", ".join(question.options)
            response = gateway.ask("question_multiple_choice", variables)
            first, rest = _split_first_line(response)
            values = scan_options(first, question.options)
            answers.append(
                AutoAnswer(
                    question_id=question.id,
                    values=values,
                    explanation=rest,
                    mode=mode,
                    needs_user=not values,
                )
            )
        elif question.kind == "binary":
            response = gateway.ask("question_binary", variables)
            first, rest = _split_first_line(response)
            token = first.split()[0].lower().strip(".,:;!") if first else ""
            if token in ("yes", "no"):
                answers.append(
                    AutoAnswer(question_id=question.id, values=[token],
                               explanation=rest, mode=mode)
                )
            else:
                answers.append(
                    AutoAnswer(question_id=question.id, values=[], explanation=rest,
                               mode=mode, needs_user=True)
                )
        else:  # freeform
            response = gateway.ask("question_freeform", variables)
            text = response.strip()
            if not text:
                answers.append(
                    AutoAnswer(question_id=question.id, values=[], mode=mode, needs_user=True)
                )
                continue
            try:
                bullets = condense_freeform(text, gateway)
                flagged = False
            except BackendError:
                bullets = []
                flagged = True
            answers.append(
                AutoAnswer(
                    question_id=question.id,
                    values=[text],
                    bullets=bullets,
                    mode=mode,
                    needs_user=flagged,
                )
            )
    return answers


# -- scoring ------------------------------------------------------------------


def user_choice_correct(predicted_values: Sequence[str], gold_values: Sequence[str]) -> bool:
    """True iff every gold option was proposed and at most
    USER_CHOICE_EXTRA_LIMIT extras came along."""
    predicted = {normalize_label(v) for v in predicted_values}
    gold = {normalize_label(v) for v in gold_values}
    return gold <= predicted and len(predicted - gold) <= USER_CHOICE_EXTRA_LIMIT


def one_choice_correct(predicted_values: Sequence[str], gold_values: Sequence[str]) -> bool:
    return {normalize_label(v) for v in predicted_values} == {
        normalize_label(v) for v in gold_values
    }


def freeform_correct(predicted_bullets: Sequence[str], gold_bullets: Sequence[str]) -> bool:
    """Correct iff every gold bullet has a predicted twin under normalized
    string equality (no semantic grading)."""
    predicted = {normalize_label(b) for b in predicted_bullets}
    return all(normalize_label(g) in predicted for g in gold_bullets)


@dataclass
class AccuracyReport:
    per_kind: dict[str, dict[str, Optional[float]]]
    cases: int

    def to_dict(self) -> dict:
        return {"cases": self.cases, "per_kind": self.per_kind}


def evaluate_accuracy(
    cases: list[EvalCase],
    questionnaire: Questionnaire,
    gateway: Gateway,
    mode: str = "few_shot",
) -> AccuracyReport:
    """Auto-fill every case and score against its gold answers.

    Binary and multiple-choice use exact value-set agreement ("1 choice");
    multiple-choice additionally reports the relaxed user-choice rule.
    Kinds with no scored answers report n/a (None).
    """
    totals: dict[str, int] = {k: 0 for k in QUESTION_KINDS}
    correct: dict[str, int] = {k: 0 for k in QUESTION_KINDS}
    user_choice_correct_n = 0

    for case in cases:
        answers = {a.question_id: a for a in auto_fill(case.intent, questionnaire, gateway, mode)}
        for question in questionnaire.questions:
            gold = case.gold.get(question.id)
            if gold is None:
                continue
            answer = answers[question.id]
            totals[question.kind] += 1
            if question.kind == "freeform":
                if freeform_correct(answer.bullets, gold):
                    correct[question.kind] += 1
            else:
                if one_choice_correct(answer.values, gold):
                    correct[question.kind] += 1
                if question.kind == "multiple_choice" and user_choice_correct(
                    answer.values, gold
                ):
                    user_choice_correct_n += 1

    per_kind: dict[str, dict[str, Optional[float]]] = {}
    for kind in QUESTION_KINDS:
        n = totals[kind]
        entry: dict[str, Optional[float]] = {
            "total": float(n),
            "one_choice": (correct[kind] / n) if n else None,
        }
        if kind == "multiple_choice":
            entry["user_choice"] = (user_choice_correct_n / n) if n else None
        per_kind[kind] = entry
    return AccuracyReport(per_kind=per_kind, cases=len(cases))
