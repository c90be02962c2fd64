"""Append-only evidence store with catalog provenance and re-audit.

Layout on disk::

    store/catalogs/<version>.json   one catalog document per version
    store/audits/<audit_id>.json    one immutable audit record per file
    store/index.json                dialogue_id -> latest audit_id

Records never mutate: corrections and re-audits append superseding records
that point back via ``supersedes``. Audit ids are content hashes, so the
same record content cannot be appended twice. Every record embeds the
inputs (dialogue + explicit verdicts) that produced it, which makes
re-audit under a new catalog self-contained, and every append re-derives
the decision from the rows as a tamper/bug guard.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from hashlib import sha256
from pathlib import Path
from urllib.parse import quote, unquote

from .catalog import PhaseCatalog, parse_catalog, serialize_catalog
from .dialogue import Dialogue, dialogue_to_doc, load_dialogue
from .diagnostics import DiagnosticsReport
from .errors import (
    DecisionMismatchError,
    DuplicateIdError,
    DuplicateVersionError,
    RationaleRequiredError,
    SupersededAuditError,
    UnknownAuditError,
    UnknownCatalogError,
    UnknownDialogueError,
    UnknownPhaseError,
)
from .evaluator import Decision, decide
from .pipeline import AuditOutcome, evaluate_dialogue
from .rows import EvidenceSpan, PhaseRow, VerdictEntry


def canonical_json(doc) -> str:
    """Deterministic serialization used for hashing and byte-equality checks."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class OverrideRecord:
    phase_id: str
    old_verdict: float
    new_verdict: float
    reviewer: str
    rationale: str
    timestamp: str = ""

    def __post_init__(self):
        if not self.rationale.strip():
            raise RationaleRequiredError(
                f"override of {self.phase_id} needs a non-empty rationale")

    def to_dict(self) -> dict:
        return {
            "phase_id": self.phase_id,
            "old_verdict": self.old_verdict,
            "new_verdict": self.new_verdict,
            "reviewer": self.reviewer,
            "rationale": self.rationale,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_dict(doc: dict) -> "OverrideRecord":
        return OverrideRecord(
            phase_id=doc["phase_id"],
            old_verdict=doc["old_verdict"],
            new_verdict=doc["new_verdict"],
            reviewer=doc.get("reviewer", ""),
            rationale=doc["rationale"],
            timestamp=doc.get("timestamp", ""),
        )


@dataclass(frozen=True)
class AuditResult:
    audit_id: str
    dialogue_id: str
    catalog_version: str
    created_at: str
    rows: tuple[PhaseRow, ...]
    decision: Decision
    diagnostics: DiagnosticsReport
    supersedes: str | None = None
    overrides: tuple[OverrideRecord, ...] = ()

    def to_dict(self) -> dict:
        return {
            "audit_id": self.audit_id,
            "dialogue_id": self.dialogue_id,
            "catalog_version": self.catalog_version,
            "created_at": self.created_at,
            "rows": [row.to_dict() for row in self.rows],
            "decision": self.decision.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
            "supersedes": self.supersedes,
            "overrides": [o.to_dict() for o in self.overrides],
        }

    @staticmethod
    def from_dict(doc: dict) -> "AuditResult":
        return AuditResult(
            audit_id=doc["audit_id"],
            dialogue_id=doc["dialogue_id"],
            catalog_version=doc["catalog_version"],
            created_at=doc["created_at"],
            rows=tuple(PhaseRow.from_dict(r) for r in doc["rows"]),
            decision=Decision.from_dict(doc["decision"]),
            diagnostics=DiagnosticsReport.from_dict(doc["diagnostics"]),
            supersedes=doc.get("supersedes"),
            overrides=tuple(OverrideRecord.from_dict(o)
                            for o in doc.get("overrides", [])),
        )


@dataclass(frozen=True)
class AuditInputs:
    dialogue: Dialogue
    explicit_verdicts: dict[str, VerdictEntry]

    def to_dict(self) -> dict:
        return {
            "dialogue": dialogue_to_doc(self.dialogue),
            "verdicts": {pid: v.to_dict()
                         for pid, v in sorted(self.explicit_verdicts.items())},
        }

    @staticmethod
    def from_dict(doc: dict) -> "AuditInputs":
        return AuditInputs(
            dialogue=load_dialogue(doc["dialogue"]),
            explicit_verdicts={pid: VerdictEntry.from_dict(v)
                               for pid, v in doc.get("verdicts", {}).items()},
        )


def result_from_outcome(outcome: AuditOutcome, dialogue_id: str,
                        catalog_version: str, created_at: str = "",
                        supersedes: str | None = None,
                        overrides: tuple[OverrideRecord, ...] = ()) -> AuditResult:
    return AuditResult(
        audit_id="",
        dialogue_id=dialogue_id,
        catalog_version=catalog_version,
        created_at=created_at,
        rows=tuple(outcome.rows),
        decision=outcome.decision,
        diagnostics=outcome.diagnostics,
        supersedes=supersedes,
        overrides=overrides,
    )


class AuditStore:
    """Single-writer, many-reader filesystem store."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "catalogs").mkdir(parents=True, exist_ok=True)
        (self.root / "audits").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._last_stamp: datetime | None = None

    # --- paths ---------------------------------------------------------------

    def _catalog_path(self, version: str) -> Path:
        return self.root / "catalogs" / (quote(version, safe="") + ".json")

    def _audit_path(self, audit_id: str) -> Path:
        return self.root / "audits" / (audit_id + ".json")

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _now(self) -> str:
        # monotonic guard: tight append loops must not collide on created_at,
        # because record content (and therefore the content id) includes it
        with self._lock:
            now = datetime.now(timezone.utc)
            if self._last_stamp is not None and now <= self._last_stamp:
                now = self._last_stamp + timedelta(microseconds=1)
            self._last_stamp = now
            return now.isoformat()

    # --- catalogs --------------------------------------------------------------

    def put_catalog(self, catalog: PhaseCatalog) -> str:
        with self._lock:
            path = self._catalog_path(catalog.version)
            text = serialize_catalog(catalog)
            if path.exists():
                raise DuplicateVersionError(
                    f"catalog version {catalog.version!r} already stored")
            path.write_text(text, encoding="utf-8")
        return catalog.version

    def ensure_catalog(self, catalog: PhaseCatalog) -> str:
        """Register the catalog; idempotent for identical content, error otherwise."""
        path = self._catalog_path(catalog.version)
        text = serialize_catalog(catalog)
        if path.exists():
            if path.read_text(encoding="utf-8") != text:
                raise DuplicateVersionError(
                    f"catalog version {catalog.version!r} already stored "
                    f"with different content")
            return catalog.version
        return self.put_catalog(catalog)

    def has_catalog(self, version: str) -> bool:
        return self._catalog_path(version).exists()

    def get_catalog(self, version: str) -> PhaseCatalog:
        path = self._catalog_path(version)
        if not path.exists():
            raise UnknownCatalogError(f"no catalog stored for version {version!r}")
        return parse_catalog(path.read_text(encoding="utf-8"))

    def catalog_versions(self) -> list[str]:
        return sorted(unquote(p.stem) for p in (self.root / "catalogs").glob("*.json"))

    # --- index -----------------------------------------------------------------

    def _read_index(self) -> dict[str, str]:
        if not self._index_path.exists():
            return {}
        return json.loads(self._index_path.read_text(encoding="utf-8"))

    def _write_index(self, index: dict[str, str]) -> None:
        self._index_path.write_text(
            json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def latest_audit_id(self, dialogue_id: str) -> str:
        index = self._read_index()
        if dialogue_id not in index:
            raise UnknownDialogueError(f"no audit stored for dialogue {dialogue_id!r}")
        return index[dialogue_id]

    def dialogue_ids(self) -> list[str]:
        return sorted(self._read_index())

    # --- audit records -----------------------------------------------------------

    def append(self, result: AuditResult, inputs: AuditInputs) -> str:
        """Durably store one audit record; returns its content-addressed id.

        Write-time guard: the stored decision must match a recomputation
        from the stored rows under the referenced catalog.
        """
        catalog = self.get_catalog(result.catalog_version)
        recomputed = decide(catalog, list(result.rows))
        if recomputed != result.decision:
            raise DecisionMismatchError(
                f"decision for dialogue {result.dialogue_id!r} does not match "
                f"recomputation from its rows")
        with self._lock:
            record = {
                "audit": replace(result, audit_id="").to_dict(),
                "inputs": inputs.to_dict(),
            }
            audit_id = "a" + sha256(canonical_json(record).encode("utf-8")).hexdigest()[:16]
            path = self._audit_path(audit_id)
            if path.exists():
                raise DuplicateIdError(f"audit {audit_id} already stored")
            record["audit"]["audit_id"] = audit_id
            path.write_text(
                json.dumps(record, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
                encoding="utf-8")
            index = self._read_index()
            index[result.dialogue_id] = audit_id
            self._write_index(index)
        return audit_id

    def get(self, audit_id: str) -> AuditResult:
        return self.get_record(audit_id)[0]

    def get_record(self, audit_id: str) -> tuple[AuditResult, AuditInputs]:
        path = self._audit_path(audit_id)
        if not path.exists():
            raise UnknownAuditError(f"no audit stored with id {audit_id!r}")
        record = json.loads(path.read_text(encoding="utf-8"))
        return (AuditResult.from_dict(record["audit"]),
                AuditInputs.from_dict(record["inputs"]))

    def audit_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "audits").glob("*.json"))

    def all_results(self) -> list[AuditResult]:
        results = [self.get(aid) for aid in self.audit_ids()]
        results.sort(key=lambda r: (r.created_at, r.audit_id))
        return results

    def latest_results(self) -> list[AuditResult]:
        index = self._read_index()
        return [self.get(aid) for _, aid in sorted(index.items())]

    # --- high-level operations ------------------------------------------------

    def record_audit(self, catalog: PhaseCatalog, dialogue: Dialogue,
                     explicit_verdicts: dict[str, VerdictEntry] | None = None,
                     supersedes: str | None = None,
                     overrides: tuple[OverrideRecord, ...] = ()) -> AuditResult:
        """Evaluate and append in one step; returns the stored record."""
        self.ensure_catalog(catalog)
        outcome = evaluate_dialogue(catalog, dialogue, explicit_verdicts)
        result = result_from_outcome(
            outcome, dialogue.id, catalog.version, created_at=self._now(),
            supersedes=supersedes, overrides=overrides,
        )
        inputs = AuditInputs(dialogue, dict(explicit_verdicts or {}))
        audit_id = self.append(result, inputs)
        return replace(result, audit_id=audit_id)

    def reaudit(self, dialogue_ids: list[str],
                new_catalog: PhaseCatalog) -> list[AuditResult]:
        """Re-evaluate stored dialogues under a (possibly new) catalog.

        Rows are rebuilt from the stored signals and explicit verdicts:
        phases the new catalog dropped disappear, phases it added pick up
        any stored signals or start as never-attempted. Each new record
        supersedes the dialogue's previous latest; originals are untouched.
        """
        self.ensure_catalog(new_catalog)
        results = []
        for did in dialogue_ids:
            previous_id = self.latest_audit_id(did)
            previous, inputs = self.get_record(previous_id)
            results.append(self.record_audit(
                new_catalog, inputs.dialogue, inputs.explicit_verdicts,
                supersedes=previous_id, overrides=previous.overrides,
            ))
        return results

    def apply_override(self, audit_id: str, override: OverrideRecord) -> AuditResult:
        """Append a superseding record with one verdict overridden.

        A positive override synthesizes a whole-dialogue evidence span
        naming the reviewer and rationale: credit is never silent, and the
        human judgment is the evidence.

        Only the chain's head may be overridden: supersession stays linear
        per dialogue, so an already-superseded record is a conflict.
        """
        previous, inputs = self.get_record(audit_id)
        if self.latest_audit_id(previous.dialogue_id) != audit_id:
            raise SupersededAuditError(
                f"audit {audit_id} is already superseded; override the latest "
                f"record for dialogue {previous.dialogue_id!r} instead")
        catalog = self.get_catalog(previous.catalog_version)
        if override.phase_id not in catalog.phases:
            raise UnknownPhaseError(
                f"override names phase {override.phase_id!r} absent from "
                f"catalog {previous.catalog_version}")
        if not override.timestamp:
            override = replace(override, timestamp=self._now())
        if override.new_verdict > 0:
            evidence: tuple[EvidenceSpan, ...] = (EvidenceSpan(
                first=0, last=inputs.dialogue.last_turn, quote="",
                note=f"override by {override.reviewer}: {override.rationale}",
            ),)
        else:
            evidence = ()
        explicit = dict(inputs.explicit_verdicts)
        explicit[override.phase_id] = VerdictEntry(override.new_verdict, evidence)
        return self.record_audit(
            catalog, inputs.dialogue, explicit,
            supersedes=audit_id, overrides=previous.overrides + (override,),
        )
