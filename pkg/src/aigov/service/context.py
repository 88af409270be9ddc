"""Shared application context: catalogs, gateway, graph, policies, clock.

The CLI and the HTTP app both run on one of these.  Offline mode swaps
in the scripted backend, scripted model adapters and a fixed clock, so a
whole workflow is reproducible byte for byte with no network.
"""

from __future__ import annotations

import logging
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from ..errors import ParseError
from ..eval_runner import (
    EvalCatalog,
    GatewayModelAdapter,
    ModelAdapter,
    ScriptedModelAdapter,
    fixed_clock,
    load_eval_catalog,
    load_scripted_models,
    utc_now_iso,
)
from ..gateway import (
    Gateway,
    HttpBackend,
    HttpBackendConfig,
    ScriptedBackend,
    load_default_templates,
)
from ..kg import KnowledgeGraph, export_graph, import_graph
from ..mitigation import MitigationCatalog, load_mitigations
from ..ontology import OntologySchema, load_default_schema
from ..questionnaire import Questionnaire, load_questionnaire
from ..recommender import PolicyConfig, load_policy
from ..taxonomy import RiskCatalog, bundled_data_dir, load_default_catalog

logger = logging.getLogger(__name__)

ENV_PREFIX = "AIGOV_"


@dataclass
class AppContext:
    schema: OntologySchema
    risk_catalog: RiskCatalog
    questionnaire: Questionnaire
    gateway: Gateway
    eval_catalog: EvalCatalog
    mitigations: MitigationCatalog
    policies: dict[str, PolicyConfig]
    graph: KnowledgeGraph
    graph_path: Path
    data_dir: Path
    clock: Callable[[], str]
    offline: bool
    scripted_models: dict[str, ScriptedModelAdapter] = field(default_factory=dict)
    task_question_id: str = "q_category"
    actor: str = "system"
    api_token: Optional[str] = None  # static bearer token; None disables auth

    def model_adapter_for(self, model_id: str) -> ModelAdapter:
        if self.offline:
            adapter = self.scripted_models.get(model_id)
            return adapter or ScriptedModelAdapter(model_id)
        return GatewayModelAdapter(model_id, self.gateway)

    def policy(self, name: str) -> PolicyConfig:
        if name not in self.policies:
            raise KeyError(name)
        return self.policies[name]

    def persist_graph(self) -> None:
        export_graph(self.graph, self.graph_path)


def _http_config_from_env() -> HttpBackendConfig:
    endpoint = os.environ.get(ENV_PREFIX + "ENDPOINT", "")
    if not endpoint:
        raise ParseError(
            f"online mode needs {ENV_PREFIX}ENDPOINT (and usually "
            f"{ENV_PREFIX}MODEL, {ENV_PREFIX}API_KEY)"
        )
    return HttpBackendConfig(
        endpoint=endpoint,
        model=os.environ.get(ENV_PREFIX + "MODEL", ""),
        api_key=os.environ.get(ENV_PREFIX + "API_KEY", ""),
        timeout_seconds=float(os.environ.get(ENV_PREFIX + "TIMEOUT", "60")),
        max_in_flight=int(os.environ.get(ENV_PREFIX + "MAX_INFLIGHT", "4")),
    )


def build_context(
    data_dir: Union[str, Path],
    offline: bool = True,
    script_path: Optional[Union[str, Path]] = None,
    policy_paths: tuple = (),
    clock: Optional[Callable[[], str]] = None,
) -> AppContext:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    bundle = bundled_data_dir()

    schema = load_default_schema()
    risk_catalog = load_default_catalog()
    questionnaire = load_questionnaire(bundle / "questionnaire.yaml")
    eval_catalog = load_eval_catalog(bundle / "benchmarks.yaml")
    mitigations = load_mitigations(bundle / "guardrails.yaml", bundle / "action_plans.yaml")

    policies = {"default": load_policy(bundle / "policy.yaml")}
    for path in policy_paths:
        policy = load_policy(path)
        policies[policy.name] = policy

    graph_path = data_dir / "graph.jsonl"
    if not graph_path.exists():
        shutil.copy(bundle / "model_inventory.jsonl", graph_path)
    graph = import_graph(graph_path, schema)

    templates = load_default_templates()
    if offline:
        backend = ScriptedBackend.from_file(script_path or bundle / "scripts" / "demo_assess.yaml")
        scripted_models = load_scripted_models(bundle / "scripts" / "model_adapters.yaml")
        tick = clock or fixed_clock()
    else:
        backend = HttpBackend(_http_config_from_env())
        scripted_models = {}
        tick = clock or utc_now_iso

    return AppContext(
        schema=schema,
        risk_catalog=risk_catalog,
        questionnaire=questionnaire,
        gateway=Gateway(templates, backend),
        eval_catalog=eval_catalog,
        mitigations=mitigations,
        policies=policies,
        graph=graph,
        graph_path=graph_path,
        data_dir=data_dir,
        clock=tick,
        offline=offline,
        scripted_models=scripted_models,
        api_token=os.environ.get(ENV_PREFIX + "API_TOKEN") or None,
    )
