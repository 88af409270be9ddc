from __future__ import annotations

import pytest

from aigov.gateway import Gateway, ScriptedBackend, ScriptedRule, load_default_templates
from aigov.kg import KnowledgeGraph
from aigov.ontology import load_default_schema
from aigov.questionnaire import load_questionnaire
from aigov.taxonomy import bundled_data_dir, load_default_catalog


@pytest.fixture(scope="session")
def schema():
    return load_default_schema()


@pytest.fixture(scope="session")
def risk_catalog():
    return load_default_catalog()


@pytest.fixture(scope="session")
def templates():
    return load_default_templates()


@pytest.fixture(scope="session")
def questionnaire():
    return load_questionnaire(bundled_data_dir() / "questionnaire.yaml")


@pytest.fixture
def graph(schema):
    return KnowledgeGraph(schema)


def make_gateway(rules: list[dict]) -> Gateway:
    """Gateway over the bundled templates and inline scripted rules."""
    scripted = [
        ScriptedRule(
            response=rule["response"],
            template_id=rule.get("template"),
            contains=tuple(rule.get("contains", ())),
        )
        for rule in rules
    ]
    return Gateway(load_default_templates(), ScriptedBackend(scripted))
