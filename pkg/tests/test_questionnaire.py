from __future__ import annotations

import random

import pytest

from aigov.errors import BackendError, ParseError
from aigov.gateway import Gateway, QueueBackend, load_default_templates
from aigov.questionnaire import (
    EvalCase,
    Question,
    Questionnaire,
    auto_fill,
    condense_freeform,
    evaluate_accuracy,
    freeform_correct,
    one_choice_correct,
    scan_options,
    user_choice_correct,
)

from conftest import make_gateway

CATEGORY_OPTIONS = (
    "Classification", "Recognition", "Generation", "Summarization",
    "Ideation", "Question/Answer", "Search and Information Seeking", "Other",
)


def small_questionnaire():
    return Questionnaire(questions=[
        Question(id="q_cat", text="What category of use does your use request fall under?",
                 kind="multiple_choice", options=CATEGORY_OPTIONS),
        Question(id="q_pi", text="Does the context include personal information?",
                 kind="binary"),
        Question(id="q_in", text="What is the expected input?", kind="freeform"),
    ])


def gateway_for(mc_response, binary_response="yes\nbecause", freeform="Text.",
                bullets="- Text"):
    return make_gateway([
        {"template": "question_multiple_choice", "response": mc_response},
        {"template": "question_binary", "response": binary_response},
        {"template": "question_freeform", "response": freeform},
        {"template": "condense_bullets", "response": bullets},
    ])


def test_category_answer_contains_generation():
    answers = auto_fill(
        "a medical triage chatbot", small_questionnaire(),
        gateway_for("Generation\nIt writes advice."),
    )
    by_id = {a.question_id: a for a in answers}
    assert "Generation" in by_id["q_cat"].values
    assert by_id["q_cat"].explanation == "It writes advice."


def test_two_option_answer_parsed_as_set():
    answers = auto_fill(
        "competitive analysis support", small_questionnaire(),
        gateway_for("Generation and Summarization\nboth apply"),
    )
    by_id = {a.question_id: a for a in answers}
    assert by_id["q_cat"].values == ["Generation", "Summarization"]


def test_unrecognizable_option_flags_needs_user():
    answers = auto_fill(
        "x", small_questionnaire(), gateway_for("No idea, sorry\nexplanation"),
    )
    by_id = {a.question_id: a for a in answers}
    assert by_id["q_cat"].needs_user
    assert by_id["q_cat"].values == []


def test_binary_parsing_and_flagging():
    answers = auto_fill("x", small_questionnaire(),
                        gateway_for("Other\n-", binary_response="No.\nNothing personal."))
    by_id = {a.question_id: a for a in answers}
    assert by_id["q_pi"].values == ["no"]

    answers = auto_fill("x", small_questionnaire(),
                        gateway_for("Other\n-", binary_response="maybe?\nhard to say"))
    by_id = {a.question_id: a for a in answers}
    assert by_id["q_pi"].needs_user


def test_freeform_condensed_to_bullets():
    gateway = gateway_for(
        "Other\n-",
        freeform="Text. The expected input includes client documents.",
        bullets="- Client RFP/RFI/Meeting notes/transcripts documentation",
    )
    answers = auto_fill("competitive analysis", small_questionnaire(), gateway)
    by_id = {a.question_id: a for a in answers}
    assert by_id["q_in"].bullets == ["Client RFP/RFI/Meeting notes/transcripts documentation"]
    assert by_id["q_in"].values[0].startswith("Text.")


def test_mc_values_always_subset_of_options():
    for response in ("Generation, Frobnication", "GENERATION and summarization", "zzz"):
        answers = auto_fill("x", small_questionnaire(), gateway_for(response + "\nr"))
        by_id = {a.question_id: a for a in answers}
        assert set(by_id["q_cat"].values) <= set(CATEGORY_OPTIONS)


def test_auto_fill_deterministic_under_scripted_backend():
    gateway = gateway_for("Generation\nIt writes advice.")
    a = auto_fill("intent", small_questionnaire(), gateway)
    b = auto_fill("intent", small_questionnaire(), gateway)
    assert a == b


def test_auto_fill_rejects_empty_intent():
    with pytest.raises(ParseError):
        auto_fill("  ", small_questionnaire(), gateway_for("x\n-"))


def test_few_shot_examples_enter_prompt(questionnaire, templates):
    captured = {}

    class Spy:
        def complete(self, template_id, prompt, decoding):
            captured.setdefault(template_id, []).append(prompt)
            from aigov.gateway import Completion
            return Completion(text="Generation\nok", usage={})

    gateway = Gateway(templates, Spy())
    question = questionnaire.question("q_category")
    qn = Questionnaire(questions=[question])
    auto_fill("intent", qn, gateway, mode="few_shot")
    assert "Example:" in captured["question_multiple_choice"][0]
    auto_fill("intent", qn, gateway, mode="zero_shot")
    assert "Example:" not in captured["question_multiple_choice"][1]


def test_condense_single_word():
    gateway = make_gateway([{"template": "condense_bullets", "response": "- Text"}])
    assert condense_freeform("Text", gateway) == ["Text"]


def test_condense_empty_response_is_error():
    gateway = make_gateway([{"template": "condense_bullets", "response": "   "}])
    with pytest.raises(BackendError):
        condense_freeform("Some answer", gateway)
    with pytest.raises(BackendError):
        condense_freeform("", gateway)


def test_user_choice_rule():
    assert user_choice_correct(["Generation", "Summarization", "Ideation"], ["Generation"])
    assert not user_choice_correct(
        ["Generation", "Summarization", "Ideation", "Question/Answer"], ["Generation"]
    )
    assert not user_choice_correct(["Summarization", "Ideation"], ["Generation"])
    assert user_choice_correct(["generation"], ["Generation"])  # normalized


def test_one_choice_is_exact_set_equality():
    assert one_choice_correct(["Generation", "Summarization"], ["Summarization", "Generation"])
    assert not one_choice_correct(["Generation", "Summarization"], ["Generation"])


def test_freeform_requires_every_gold_bullet():
    assert freeform_correct(["a", "b", "c"], ["a", "b"])
    assert not freeform_correct(["a"], ["a", "b"])
    assert freeform_correct(["A  b"], ["a b"])  # normalization


def test_user_choice_never_below_one_choice():
    rng = random.Random(7)
    options = [f"opt-{i}" for i in range(7)]
    for _ in range(100):
        gold = rng.sample(options, rng.randint(1, 3))
        predicted = rng.sample(options, rng.randint(0, 7))
        if one_choice_correct(predicted, gold):
            assert user_choice_correct(predicted, gold)


def test_accuracy_half_right_is_half():
    # 42 single-question cases; queue answers 21 right then 21 wrong
    question = Question(id="q", text="Pick one", kind="multiple_choice",
                        options=("Alpha", "Beta"))
    qn = Questionnaire(questions=[question])
    cases = [EvalCase(intent=f"case {i}", gold={"q": ["Alpha"]}) for i in range(42)]
    responses = ["Alpha\nok"] * 21 + ["Beta\nno"] * 21
    gateway = Gateway(load_default_templates(), QueueBackend(responses))
    report = evaluate_accuracy(cases, qn, gateway)
    assert report.per_kind["multiple_choice"]["one_choice"] == pytest.approx(21 / 42)
    assert report.cases == 42


def test_accuracy_all_correct_and_na_kinds():
    qn = small_questionnaire()
    gateway = gateway_for(
        "Generation\nok", binary_response="yes\nok",
        freeform="Text.", bullets="- Text",
    )
    cases = [EvalCase(intent="i", gold={
        "q_cat": ["Generation"], "q_pi": ["yes"], "q_in": ["Text"],
    })]
    report = evaluate_accuracy(cases, qn, gateway)
    assert report.per_kind["multiple_choice"]["one_choice"] == 1.0
    assert report.per_kind["binary"]["one_choice"] == 1.0
    assert report.per_kind["freeform"]["one_choice"] == 1.0


def test_accuracy_empty_case_list_reports_na():
    report = evaluate_accuracy([], small_questionnaire(), gateway_for("x\n-"))
    for kind in ("multiple_choice", "binary", "freeform"):
        assert report.per_kind[kind]["one_choice"] is None


def test_scan_options_is_case_insensitive_substring():
    assert scan_options("generation AND summarization", CATEGORY_OPTIONS) == [
        "Generation", "Summarization",
    ]
    assert scan_options("none of these", CATEGORY_OPTIONS) == []
