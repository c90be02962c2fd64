"""Structured lint findings.

Linting is exhaustive: a report collects every violation rather than
stopping at the first, because catalog authors fix them iteratively.
A document is *valid* iff its report has no error-severity finding;
warnings and advisories never block acceptance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    ADVISORY = "advisory"


@dataclass(frozen=True)
class Finding:
    rule: str
    location: str
    message: str
    severity: Severity = Severity.ERROR

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "location": self.location,
            "message": self.message,
            "severity": self.severity.value,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Finding":
        return Finding(
            rule=doc["rule"],
            location=doc.get("location", ""),
            message=doc.get("message", ""),
            severity=Severity(doc.get("severity", "error")),
        )


@dataclass
class LintReport:
    findings: list[Finding] = field(default_factory=list)

    def add(self, rule: str, location: str, message: str,
            severity: Severity = Severity.ERROR) -> None:
        self.findings.append(Finding(rule, location, message, severity))

    def extend(self, other: "LintReport") -> None:
        self.findings.extend(other.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.WARNING]

    @property
    def advisories(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ADVISORY]

    def ok(self) -> bool:
        """True iff the linted document is acceptable (no error findings)."""
        return not self.errors

    def rules(self) -> set[str]:
        return {f.rule for f in self.findings}

    def to_dict(self) -> dict:
        return {"ok": self.ok(), "findings": [f.to_dict() for f in self.findings]}

    def __str__(self) -> str:
        if not self.findings:
            return "no findings"
        return "\n".join(
            f"[{f.severity.value}] {f.rule} at {f.location}: {f.message}"
            for f in self.findings
        )
