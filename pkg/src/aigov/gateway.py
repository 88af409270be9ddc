"""Single choke-point for all generative calls.

Every prompt in the system comes from a registered template; downstream
modules supply variables only and parse the raw text they get back.  Two
backends share one interface: a remote chat-completion endpoint and a
deterministic scripted backend that makes every LLM-dependent flow
reproducible offline.  The scripted backend is a pure function of
(script, rendered prompt) and raising on an unmatched prompt is a
feature: fixture gaps must never degrade into silent fallbacks.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import logging
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

import yaml

from .errors import (
    BackendHTTPError,
    BackendTimeout,
    MissingVariable,
    NoScriptedRule,
    ParseError,
    UnknownTemplate,
)

logger = logging.getLogger(__name__)

_PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}")


@dataclass(frozen=True)
class Decoding:
    max_tokens: int = 1024
    temperature: float = 0.0
    seed: Optional[int] = None


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str
    required_vars: frozenset[str]
    default_temperature: float = 0.0

    def __post_init__(self):
        found = set(_PLACEHOLDER.findall(self.text))
        if found != set(self.required_vars):
            missing = set(self.required_vars) - found
            extra = found - set(self.required_vars)
            raise ParseError(
                f"template {self.id!r}: placeholder mismatch"
                + (f"; declared but unused: {sorted(missing)}" if missing else "")
                + (f"; used but undeclared: {sorted(extra)}" if extra else "")
            )

    def render(self, variables: dict[str, str]) -> str:
        for name in sorted(self.required_vars):
            if name not in variables:
                raise MissingVariable(name)

        def sub(match: re.Match) -> str:
            return str(variables[match.group(1)])

        rendered = _PLACEHOLDER.sub(sub, self.text)
        assert "{{" not in rendered
        return rendered


@dataclass(frozen=True)
class CompletionRequest:
    template_id: str
    variables: dict[str, str]
    decoding: Optional[Decoding] = None


@dataclass(frozen=True)
class Completion:
    text: str
    usage: dict[str, Union[int, str]]


class TemplateRegistry:
    def __init__(self):
        self._templates: dict[str, PromptTemplate] = {}

    def register(self, template: PromptTemplate) -> None:
        self._templates[template.id] = template

    def get(self, template_id: str) -> PromptTemplate:
        template = self._templates.get(template_id)
        if template is None:
            raise UnknownTemplate(f"template {template_id!r} not registered")
        return template

    def ids(self) -> set[str]:
        return set(self._templates)

    @classmethod
    def load_dir(cls, directory: Union[str, Path]) -> "TemplateRegistry":
        """Load every *.yaml template file in a directory."""
        registry = cls()
        for path in sorted(Path(directory).glob("*.yaml")):
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
            if not isinstance(raw, dict) or "id" not in raw or "text" not in raw:
                raise ParseError(f"{path}: template needs 'id' and 'text'")
            registry.register(
                PromptTemplate(
                    id=str(raw["id"]),
                    text=str(raw["text"]),
                    required_vars=frozenset(str(v) for v in raw.get("vars", [])),
                    default_temperature=float(raw.get("temperature", 0.0)),
                )
            )
        return registry


# -- backends -------------------------------------------------------------


class Backend(Protocol):
    def complete(self, template_id: str, prompt: str, decoding: Decoding) -> Completion:
        ...


@dataclass(frozen=True)
class ScriptedRule:
    """First rule whose template matches and whose `contains` substrings all
    appear in the rendered prompt wins."""

    response: str
    template_id: Optional[str] = None
    contains: tuple[str, ...] = ()

    def matches(self, template_id: str, prompt: str) -> bool:
        if self.template_id is not None and self.template_id != template_id:
            return False
        return all(needle in prompt for needle in self.contains)


class ScriptedBackend:
    """Deterministic lookup backend; pure function of (script, prompt)."""

    def __init__(self, rules: list[ScriptedRule]):
        self.rules = list(rules)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScriptedBackend":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        rules_raw = raw.get("rules") if isinstance(raw, dict) else raw
        if not isinstance(rules_raw, list):
            raise ParseError(f"{path}: script file must hold a rule list")
        rules = []
        for item in rules_raw:
            if not isinstance(item, dict) or "response" not in item:
                raise ParseError(f"{path}: each rule needs a 'response'")
            contains = item.get("contains", [])
            if isinstance(contains, str):
                contains = [contains]
            rules.append(
                ScriptedRule(
                    response=str(item["response"]),
                    template_id=item.get("template"),
                    contains=tuple(str(c) for c in contains),
                )
            )
        return cls(rules)

    def complete(self, template_id: str, prompt: str, decoding: Decoding) -> Completion:
        for rule in self.rules:
            if rule.matches(template_id, prompt):
                return Completion(
                    text=rule.response,
                    usage={"backend": "scripted", "prompt_chars": len(prompt)},
                )
        raise NoScriptedRule(template_id, prompt)


class QueueBackend:
    """Test helper: replies with queued responses in order, then repeats the
    last one.  Useful for feeding a parser a fixed response sequence."""

    def __init__(self, responses: list[str]):
        if not responses:
            raise ValueError("QueueBackend needs at least one response")
        self._responses = list(responses)
        self._cursor = 0

    def complete(self, template_id: str, prompt: str, decoding: Decoding) -> Completion:
        text = self._responses[min(self._cursor, len(self._responses) - 1)]
        self._cursor += 1
        return Completion(text=text, usage={"backend": "queue"})


@dataclass
class HttpBackendConfig:
    endpoint: str
    model: str
    api_key: str = ""
    timeout_seconds: float = 60.0
    max_in_flight: int = 4
    max_attempts: int = 3
    backoff_base_seconds: float = 0.5


class HttpBackend:
    """Chat-completion over HTTP with JSON bodies, bounded retry and an
    in-flight cap.  Endpoint, model and key come from configuration; the
    engine does not care which model serves the route."""

    def __init__(self, config: HttpBackendConfig, sleep: Callable[[float], None] = time.sleep):
        import httpx  # deferred so offline use never needs it at import time

        self.config = config
        self._sleep = sleep
        self._semaphore = threading.Semaphore(config.max_in_flight)
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = httpx.Client(timeout=config.timeout_seconds, headers=headers)

    def complete(self, template_id: str, prompt: str, decoding: Decoding) -> Completion:
        import httpx

        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": decoding.temperature,
            "max_tokens": decoding.max_tokens,
        }
        if decoding.seed is not None:
            body["seed"] = decoding.seed

        last_error: Exception = BackendTimeout("no attempt made")
        with self._semaphore:
            for attempt in range(self.config.max_attempts):
                if attempt:
                    self._sleep(self.config.backoff_base_seconds * (2 ** (attempt - 1)))
                try:
                    response = self._client.post(self.config.endpoint, json=body)
                except httpx.TimeoutException as exc:
                    last_error = BackendTimeout(str(exc))
                    continue
                except httpx.HTTPError as exc:
                    last_error = BackendHTTPError(0, str(exc))
                    continue
                if response.status_code >= 500:
                    last_error = BackendHTTPError(response.status_code, response.text[:200])
                    continue
                if response.status_code >= 400:
                    raise BackendHTTPError(response.status_code, response.text[:200])
                payload = response.json()
                text = payload["choices"][0]["message"]["content"]
                usage = dict(payload.get("usage", {}))
                usage["backend"] = "http"
                return Completion(text=text, usage=usage)
        raise last_error


# -- gateway ----------------------------------------------------------------


def run_seed(doc_id: str, run_index: int) -> int:
    """Stable per-run seed so multi-run extraction reproduces exactly."""
    digest = hashlib.sha256(f"{doc_id}:{run_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


class Gateway:
    """Template registry plus a backend; everything generative goes through
    here.  Shareable across concurrent callers."""

    def __init__(self, templates: TemplateRegistry, backend: Backend):
        self.templates = templates
        self.backend = backend

    def render(self, template_id: str, variables: dict[str, str]) -> str:
        return self.templates.get(template_id).render(variables)

    def complete(self, request: CompletionRequest) -> Completion:
        template = self.templates.get(request.template_id)
        prompt = template.render(request.variables)
        if not prompt.strip():
            raise ParseError(f"template {request.template_id!r} rendered an empty prompt")
        decoding = request.decoding or Decoding(temperature=template.default_temperature)
        return self.backend.complete(request.template_id, prompt, decoding)

    def ask(
        self,
        template_id: str,
        variables: dict[str, str],
        decoding: Optional[Decoding] = None,
    ) -> str:
        """Render, complete, return raw text (parsing is the caller's job)."""
        return self.complete(
            CompletionRequest(template_id=template_id, variables=variables, decoding=decoding)
        ).text


def bundled_template_dir() -> Path:
    return Path(str(importlib.resources.files("aigov").joinpath("data/templates")))


def load_default_templates() -> TemplateRegistry:
    return TemplateRegistry.load_dir(bundled_template_dir())


def scripted_gateway(script_path: Union[str, Path]) -> Gateway:
    """Gateway over the bundled templates and a script file."""
    return Gateway(load_default_templates(), ScriptedBackend.from_file(script_path))
