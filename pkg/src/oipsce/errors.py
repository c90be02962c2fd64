"""Exception types with stable machine-readable codes.

The ``code`` attribute is the contract: it is what the CLI prints, what the
HTTP layer puts in ``{"error": code}``, and what tests assert on. Messages
are for humans and may change.
"""

from __future__ import annotations


class EngineError(Exception):
    code = "ERROR"

    def __init__(self, message: str, *, findings=None):
        super().__init__(message)
        self.findings = list(findings) if findings else []

    def to_dict(self) -> dict:
        doc: dict = {"error": self.code, "message": str(self)}
        if self.findings:
            doc["findings"] = [f.to_dict() for f in self.findings]
        return doc


class DocumentSyntaxError(EngineError):
    """Input document is malformed (bad JSON, wrong shape, wrong types)."""

    code = "SYNTAX"


class LintError(EngineError):
    """One or more lint rules failed; ``findings`` carries the full report."""

    code = "LINT"


class EmptyDialogueError(EngineError):
    code = "EMPTY"


class MissingEvidenceError(EngineError):
    """A verdict grants credit without any supporting evidence span."""

    code = "MISSING_EVIDENCE"


class InvalidVerdictError(EngineError):
    """Verdict outside {0,1} for an ungraded phase, or outside [0,1]."""

    code = "INVALID_VERDICT"


class EvidenceRangeError(EngineError):
    """An evidence span points outside the dialogue."""

    code = "EVIDENCE_RANGE"


class RuleConflictError(EngineError):
    code = "RULE_CONFLICT"


class DecisionMismatchError(EngineError):
    """Stored decision does not match recomputation from its own rows."""

    code = "DECISION_MISMATCH"


class DuplicateIdError(EngineError):
    code = "DUPLICATE_ID"


class DuplicateVersionError(EngineError):
    code = "DUPLICATE_VERSION"


class UnknownDialogueError(EngineError):
    code = "UNKNOWN_DIALOGUE"


class UnknownAuditError(EngineError):
    code = "UNKNOWN_AUDIT"


class SupersededAuditError(EngineError):
    """Target already superseded; corrections must extend the chain's head."""

    code = "SUPERSEDED_AUDIT"


class UnknownPhaseError(EngineError):
    code = "UNKNOWN_PHASE"


class UnknownCatalogError(EngineError):
    code = "UNKNOWN_CATALOG"


class RationaleRequiredError(EngineError):
    code = "RATIONALE_REQUIRED"
