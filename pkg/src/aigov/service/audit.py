"""Append-only, hash-chained audit log.

Every record carries the digest of its predecessor, so truncation,
reordering or in-place edits anywhere in the chain break verification.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

GENESIS = "0" * 64


def canonical_json(obj) -> str:
    """Stable serialization used for digests and byte-identical reports."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest_of(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AuditRecord:
    assessment_id: str
    actor: str
    action: str
    timestamp: str
    payload_digest: str
    prev_digest: str
    digest: str

    @classmethod
    def make(
        cls,
        assessment_id: str,
        actor: str,
        action: str,
        timestamp: str,
        payload,
        prev_digest: str,
    ) -> "AuditRecord":
        payload_digest = digest_of(payload)
        body = {
            "assessment_id": assessment_id,
            "actor": actor,
            "action": action,
            "timestamp": timestamp,
            "payload_digest": payload_digest,
            "prev_digest": prev_digest,
        }
        return cls(digest=digest_of(body), **body)

    def recomputed_digest(self) -> str:
        body = {
            "assessment_id": self.assessment_id,
            "actor": self.actor,
            "action": self.action,
            "timestamp": self.timestamp,
            "payload_digest": self.payload_digest,
            "prev_digest": self.prev_digest,
        }
        return digest_of(body)

    def to_dict(self) -> dict:
        return {
            "assessment_id": self.assessment_id,
            "actor": self.actor,
            "action": self.action,
            "timestamp": self.timestamp,
            "payload_digest": self.payload_digest,
            "prev_digest": self.prev_digest,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AuditRecord":
        return cls(**{k: str(raw[k]) for k in (
            "assessment_id", "actor", "action", "timestamp",
            "payload_digest", "prev_digest", "digest",
        )})


def append_audit(path: Union[str, Path], record: AuditRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(canonical_json(record.to_dict()) + "\n")


def read_audit(path: Union[str, Path]) -> list[AuditRecord]:
    path = Path(path)
    if not path.exists():
        return []
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(AuditRecord.from_dict(json.loads(line)))
    return records


def verify_chain(records: list[AuditRecord]) -> tuple[bool, Optional[int]]:
    """(True, None) for an intact chain, else (False, index of first bad
    record)."""
    prev = GENESIS
    for i, record in enumerate(records):
        if record.prev_digest != prev or record.recomputed_digest() != record.digest:
            return False, i
        prev = record.digest
    return True, None
