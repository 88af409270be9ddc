"""File-backed assessment persistence with optimistic versioning.

One directory per assessment holds every state version plus the audit
log: the whole case file is inspectable and diffable with ordinary
tools.  Writes to one assessment are serialized through a per-id lock
and an expected-version check, so of two concurrent conflicting updates
exactly one wins.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..errors import StateTransitionError, UnknownAssessment, VersionConflict
from .audit import AuditRecord, append_audit, read_audit, verify_chain, GENESIS

logger = logging.getLogger(__name__)

STATUSES = ("draft", "tasks_confirmed", "assessed", "reported")

_STATE_FILE = re.compile(r"state-v(\d+)\.json$")


@dataclass
class Assessment:
    id: str
    intent: str
    status: str = "draft"
    version: int = 0
    answers: list[dict] = field(default_factory=list)
    suggested_tasks: list[str] = field(default_factory=list)
    confirmed_tasks: list[str] = field(default_factory=list)
    profile: Optional[dict] = None
    recommendation: Optional[dict] = None
    evaluations: list[dict] = field(default_factory=list)
    resolutions: dict[str, dict] = field(default_factory=dict)
    report: Optional[dict] = None

    def advance(self, new_status: str) -> None:
        """Move exactly one step forward along the workflow."""
        if STATUSES.index(new_status) != STATUSES.index(self.status) + 1:
            raise StateTransitionError(
                f"cannot move assessment {self.id} from {self.status!r} to {new_status!r}"
            )
        self.status = new_status

    def at_least(self, status: str) -> bool:
        return STATUSES.index(self.status) >= STATUSES.index(status)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "intent": self.intent,
            "status": self.status,
            "version": self.version,
            "answers": self.answers,
            "suggested_tasks": self.suggested_tasks,
            "confirmed_tasks": self.confirmed_tasks,
            "profile": self.profile,
            "recommendation": self.recommendation,
            "evaluations": self.evaluations,
            "resolutions": self.resolutions,
            "report": self.report,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Assessment":
        return cls(
            id=str(raw["id"]),
            intent=str(raw["intent"]),
            status=str(raw.get("status", "draft")),
            version=int(raw.get("version", 0)),
            answers=list(raw.get("answers", [])),
            suggested_tasks=list(raw.get("suggested_tasks", [])),
            confirmed_tasks=list(raw.get("confirmed_tasks", [])),
            profile=raw.get("profile"),
            recommendation=raw.get("recommendation"),
            evaluations=list(raw.get("evaluations", [])),
            resolutions=dict(raw.get("resolutions", {})),
            report=raw.get("report"),
        )


class AssessmentStore:
    def __init__(self, data_dir: Path, clock: Callable[[], str], actor: str = "system"):
        self.root = Path(data_dir) / "assessments"
        self.root.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.actor = actor
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, assessment_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(assessment_id, threading.Lock())

    def _dir(self, assessment_id: str) -> Path:
        return self.root / assessment_id

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def _latest_state_path(self, assessment_id: str) -> Optional[Path]:
        directory = self._dir(assessment_id)
        if not directory.is_dir():
            return None
        best: tuple[int, Optional[Path]] = (0, None)
        for path in directory.iterdir():
            m = _STATE_FILE.match(path.name)
            if m and int(m.group(1)) > best[0]:
                best = (int(m.group(1)), path)
        return best[1]

    def get(self, assessment_id: str) -> Assessment:
        path = self._latest_state_path(assessment_id)
        if path is None:
            raise UnknownAssessment(f"no assessment {assessment_id!r}")
        return Assessment.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def _persist(self, assessment: Assessment, action: str, payload) -> Assessment:
        directory = self._dir(assessment.id)
        directory.mkdir(parents=True, exist_ok=True)
        state_path = directory / f"state-v{assessment.version}.json"
        state_path.write_text(
            json.dumps(assessment.to_dict(), indent=2, ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )
        audit_path = directory / "audit.jsonl"
        records = read_audit(audit_path)
        prev = records[-1].digest if records else GENESIS
        append_audit(
            audit_path,
            AuditRecord.make(
                assessment_id=assessment.id,
                actor=self.actor,
                action=action,
                timestamp=self.clock(),
                payload=payload,
                prev_digest=prev,
            ),
        )
        return assessment

    def create(self, assessment: Assessment) -> Assessment:
        """Allocate the next id, persist version 1, audit the creation."""
        with self._registry_lock:
            n = 1 + sum(1 for _ in self.root.iterdir())
            assessment.id = f"a-{n:06d}"
            while self._dir(assessment.id).exists():  # deleted dirs leave gaps
                n += 1
                assessment.id = f"a-{n:06d}"
            self._dir(assessment.id).mkdir(parents=True)
        assessment.version = 1
        return self._persist(assessment, "create", {"intent": assessment.intent})

    def mutate(
        self,
        assessment_id: str,
        action: str,
        fn: Callable[[Assessment], None],
        expected_version: Optional[int] = None,
        payload=None,
    ) -> Assessment:
        """Load-check-apply-persist under the per-assessment lock.

        ``fn`` mutates the assessment in place; the version bump and audit
        append happen here.
        """
        with self._lock_for(assessment_id):
            assessment = self.get(assessment_id)
            if expected_version is not None and assessment.version != expected_version:
                raise VersionConflict(
                    f"assessment {assessment_id} is at version {assessment.version}, "
                    f"request expected {expected_version}"
                )
            fn(assessment)
            assessment.version += 1
            return self._persist(assessment, action, payload or {})

    # -- audit ------------------------------------------------------------

    def audit_records(self, assessment_id: str):
        return read_audit(self._dir(assessment_id) / "audit.jsonl")

    def verify_audit(self, assessment_id: str) -> tuple[bool, Optional[int]]:
        return verify_chain(self.audit_records(assessment_id))
