"""HTTP service, file-backed persistence, and the audit chain."""

from .audit import AuditRecord, canonical_json, verify_chain
from .context import AppContext, build_context
from .store import Assessment, AssessmentStore

__all__ = [
    "AppContext",
    "Assessment",
    "AssessmentStore",
    "AuditRecord",
    "build_context",
    "canonical_json",
    "verify_chain",
]
