"""End-to-end evaluation of one dialogue against one catalog.

Shared by the CLI, the HTTP service, and the store's re-audit path so all
three produce identical results for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import PhaseCatalog
from .dialogue import Dialogue, validate_signals
from .diagnostics import DiagnosticsReport, build_diagnostics
from .errors import LintError
from .evaluator import Decision, OpCounter, decide_with_edges, resolve_requirements
from .findings import Finding, Severity
from .rows import PhaseRow, VerdictEntry, build_rows, derive_verdicts

# signal findings that make the dialogue unusable (vs. merely foreign phases)
FATAL_SIGNAL_RULES = {"TURN_RANGE", "QUOTE_MISMATCH"}


@dataclass
class AuditOutcome:
    rows: list[PhaseRow]
    decision: Decision
    diagnostics: DiagnosticsReport
    warnings: list[Finding] = field(default_factory=list)
    verdicts_used: dict[str, VerdictEntry] = field(default_factory=dict)


def evaluate_dialogue(catalog: PhaseCatalog, dialogue: Dialogue,
                      explicit_verdicts: dict[str, VerdictEntry] | None = None,
                      counter: OpCounter | None = None) -> AuditOutcome:
    """Build rows, resolve requirements, decide, and attach diagnostics.

    Signals referencing phases outside the catalog are tolerated (warning):
    they may belong to another catalog version and matter again on re-audit.
    Broken signals (bad turn, quote not in turn) abort with the report.
    """
    warnings: list[Finding] = []
    report = validate_signals(dialogue, catalog)
    fatal = [f for f in report.findings if f.rule in FATAL_SIGNAL_RULES]
    if fatal:
        raise LintError(
            f"dialogue {dialogue.id!r} has unresolvable signals", findings=fatal)
    warnings.extend(
        Finding(f.rule, f.location, f.message, Severity.WARNING)
        for f in report.findings if f.rule not in FATAL_SIGNAL_RULES
    )

    verdicts = derive_verdicts(dialogue, catalog)
    if explicit_verdicts:
        for pid, entry in explicit_verdicts.items():
            if pid not in catalog.phases:
                warnings.append(Finding(
                    "UNKNOWN_PHASE", pid,
                    f"explicit verdict for phase {pid!r} absent from catalog "
                    f"{catalog.version}; ignored",
                    Severity.WARNING,
                ))
                continue
            derived = verdicts[pid]
            if derived.value != entry.value:
                warnings.append(Finding(
                    "VERDICT_OVERRIDE", pid,
                    f"explicit verdict {entry.value} overrides derived "
                    f"{derived.value}",
                    Severity.WARNING,
                ))
            verdicts[pid] = entry

    rows = build_rows(dialogue, catalog, verdicts)
    rows, fact_warnings = resolve_requirements(catalog, rows, dialogue.facts, counter)
    warnings.extend(fact_warnings)
    decision, edges = decide_with_edges(catalog, rows, counter)
    diagnostics = build_diagnostics(catalog, rows, list(dialogue.signals), edges)
    return AuditOutcome(
        rows=rows,
        decision=decision,
        diagnostics=diagnostics,
        warnings=warnings,
        verdicts_used={pid: verdicts[pid] for pid in catalog.phases},
    )
