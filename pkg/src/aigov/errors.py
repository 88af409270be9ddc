"""Exception hierarchy shared across the package.

Everything user-facing derives from GovError so the CLI can map domain
failures to exit code 1 while genuine bugs still surface as tracebacks.
"""

from __future__ import annotations


class GovError(Exception):
    """Base class for all domain errors raised by this package."""


# --- schema / ontology ---------------------------------------------------

class ParseError(GovError):
    """A file could not be parsed; message names the file and line."""


class SchemaError(GovError):
    """Declarative schema violates its own structural rules."""


class UnknownKind(GovError):
    """Entity kind not declared in the loaded ontology schema."""


# --- knowledge graph -----------------------------------------------------

class EmptyLabel(GovError):
    """Entity label empty after normalization."""


class IllegalRelation(GovError):
    """No schema rule permits this kind pair in either direction."""


class SelfLoop(GovError):
    """Triple subject and object are the same entity."""


class UnknownEntity(GovError):
    pass


class UnknownTriple(GovError):
    pass


# --- taxonomy ------------------------------------------------------------

class UnknownRisk(GovError):
    pass


class UnknownTaxonomy(GovError):
    pass


class UnknownPredicate(GovError):
    """Mapping predicate outside the closed SKOS enumeration."""


# --- gateway -------------------------------------------------------------

class UnknownTemplate(GovError):
    pass


class MissingVariable(GovError):
    def __init__(self, name: str):
        super().__init__(f"missing template variable: {name}")
        self.name = name


class BackendError(GovError):
    """Base for completion-backend failures."""


class BackendTimeout(BackendError):
    pass


class BackendHTTPError(BackendError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"backend HTTP {status}: {detail}".rstrip(": "))
        self.status = status


class NoScriptedRule(BackendError):
    """Scripted backend has no rule for a rendered prompt (never a silent
    fallback); carries the prompt to make fixture gaps debuggable."""

    def __init__(self, template_id: str, prompt: str):
        super().__init__(
            f"no scripted rule matches template {template_id!r}; "
            f"rendered prompt was:\n{prompt}"
        )
        self.template_id = template_id
        self.prompt = prompt


# --- ingest / extraction ---------------------------------------------------

class InvalidConfig(GovError):
    pass


class ParseGaveNothing(GovError):
    """Completion held no parseable structure at all; logged, non-fatal."""


# --- scoring / recommendation ----------------------------------------------

class EmptyReference(GovError):
    pass


class AllWeightsZero(GovError):
    pass


class DisjointRiskSets(GovError):
    pass


class NoCandidatesAfterFilter(GovError):
    def __init__(self, exclusions):
        reasons = "; ".join(f"{m}: {r}" for m, r in exclusions)
        super().__init__(f"no candidate model passed the policy filter ({reasons})")
        self.exclusions = list(exclusions)


# --- eval runner -----------------------------------------------------------

class AdapterFailure(GovError):
    pass


class GuardrailFailure(GovError):
    pass


# --- mitigation / resolution -------------------------------------------------

class UnmetResolutionConditions(GovError):
    def __init__(self, conditions):
        super().__init__("cannot resolve: " + "; ".join(conditions))
        self.conditions = list(conditions)


# --- service ---------------------------------------------------------------

class UnknownAssessment(GovError):
    pass


class VersionConflict(GovError):
    pass


class StateTransitionError(GovError):
    """Assessment status change would skip or reverse the workflow order."""
