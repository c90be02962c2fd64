"""Phase-level compliance auditing for multi-turn dialogues.

Loads a versioned phase catalog, builds one row per phase from annotated
transcripts, and decides encounter acceptance from two predicates: every
required phase passed, and no safety-critical child phase started before
its critical parents finished. Every verdict carries evidence.
"""

from .catalog import (
    PhaseCatalog,
    PhaseDef,
    PrecedencePolicy,
    lint_catalog,
    parse_catalog,
    serialize_catalog,
    topological_order,
)
from .dialogue import (
    AnnotationSignal,
    Dialogue,
    Role,
    SignalKind,
    SignalSource,
    Turn,
    load_dialogue,
    serialize_dialogue,
    validate_signals,
)
from .diagnostics import DiagnosticsReport, apc, build_diagnostics, cds, psa
from .errors import EngineError
from .evaluator import (
    Decision,
    EdgeResult,
    OpCounter,
    coverage,
    decide,
    edge_ok,
    order_safe,
    resolve_requirements,
)
from .expr import parse_expr
from .findings import Finding, LintReport, Severity
from .pipeline import AuditOutcome, evaluate_dialogue
from .rows import (
    NEVER,
    AnchorRule,
    EvidenceSpan,
    PhaseRow,
    TurnMark,
    VerdictEntry,
    build_rows,
    derive_verdicts,
    earliest_start,
    earliest_valid_finish,
    extract_signals,
)
from .store import AuditInputs, AuditResult, AuditStore, OverrideRecord

__version__ = "0.1.0"

__all__ = [
    "AnchorRule",
    "AnnotationSignal",
    "AuditInputs",
    "AuditOutcome",
    "AuditResult",
    "AuditStore",
    "Decision",
    "Dialogue",
    "DiagnosticsReport",
    "EdgeResult",
    "EngineError",
    "EvidenceSpan",
    "Finding",
    "LintReport",
    "NEVER",
    "OpCounter",
    "OverrideRecord",
    "PhaseCatalog",
    "PhaseDef",
    "PhaseRow",
    "PrecedencePolicy",
    "Role",
    "Severity",
    "SignalKind",
    "SignalSource",
    "Turn",
    "TurnMark",
    "VerdictEntry",
    "apc",
    "build_diagnostics",
    "build_rows",
    "cds",
    "coverage",
    "decide",
    "derive_verdicts",
    "earliest_start",
    "earliest_valid_finish",
    "edge_ok",
    "evaluate_dialogue",
    "extract_signals",
    "lint_catalog",
    "load_dialogue",
    "order_safe",
    "parse_catalog",
    "parse_expr",
    "psa",
    "resolve_requirements",
    "serialize_catalog",
    "serialize_dialogue",
    "topological_order",
    "validate_signals",
]
