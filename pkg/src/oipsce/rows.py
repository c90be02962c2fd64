"""One row per phase: earliest start/finish marks, verdicts, evidence.

Start and finish are *earliest* marks by convention: a premature start is
never overwritten by later corrections, so it stays visible to the order
check. The sentinel NEVER (prints as ∞) marks a phase that never started
or never validly finished; it compares greater than every finite index.

This module also hosts the extraction cascade: high-precision anchors emit
attempts, a small rule layer fills obvious completions, and only phases
left ambiguous fall through to a pluggable adjudicator.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Mapping, Protocol, Sequence

from .catalog import PhaseCatalog, PrecedencePolicy, topological_order
from .dialogue import (
    AnnotationSignal,
    Dialogue,
    SignalKind,
    SignalSource,
    Turn,
)
from .errors import (
    DocumentSyntaxError,
    EvidenceRangeError,
    InvalidVerdictError,
    MissingEvidenceError,
    RuleConflictError,
)
from .findings import LintReport

# adjudicator answers below this confidence are dropped
ADJUDICATION_MIN_CONFIDENCE = 0.5


@total_ordering
@dataclass(frozen=True)
class TurnMark:
    """A turn index, or the NEVER sentinel (value None)."""

    value: int | None = None

    @property
    def is_never(self) -> bool:
        return self.value is None

    def __eq__(self, other) -> bool:
        if not isinstance(other, TurnMark):
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other) -> bool:
        if not isinstance(other, TurnMark):
            return NotImplemented
        if self.value is None:
            return False  # NEVER is greater than everything, equal to itself
        if other.value is None:
            return True
        return self.value < other.value

    def __hash__(self) -> int:
        return hash(self.value)

    def __str__(self) -> str:
        return "∞" if self.value is None else str(self.value)

    def to_json(self) -> int | None:
        return self.value

    @staticmethod
    def from_json(value) -> "TurnMark":
        if value is None:
            return NEVER
        return TurnMark(int(value))


NEVER = TurnMark(None)


def mark(index: int) -> TurnMark:
    return TurnMark(index)


@dataclass(frozen=True)
class EvidenceSpan:
    first: int
    last: int
    quote: str = ""
    note: str = ""

    def __post_init__(self):
        if self.first > self.last:
            raise ValueError(f"evidence span {self.first}..{self.last} is inverted")

    def to_dict(self) -> dict:
        return {"first": self.first, "last": self.last,
                "quote": self.quote, "note": self.note}

    @staticmethod
    def from_dict(doc: dict) -> "EvidenceSpan":
        return EvidenceSpan(doc["first"], doc["last"],
                            doc.get("quote", ""), doc.get("note", ""))


@dataclass(frozen=True)
class PhaseRow:
    phase_id: str
    required: bool | None  # None until requirements are resolved
    parents: tuple[str, ...]
    critical_parents: tuple[str, ...]
    start: TurnMark
    finish: TurnMark
    precedence_policy: PrecedencePolicy
    verdict: float
    evidence: tuple[EvidenceSpan, ...] = ()
    graded_threshold: float | None = None

    def to_dict(self) -> dict:
        return {
            "phase_id": self.phase_id,
            "required": self.required,
            "parents": list(self.parents),
            "critical_parents": list(self.critical_parents),
            "start": self.start.to_json(),
            "finish": self.finish.to_json(),
            "precedence_policy": self.precedence_policy.value,
            "verdict": self.verdict,
            "evidence": [span.to_dict() for span in self.evidence],
            "graded_threshold": self.graded_threshold,
        }

    @staticmethod
    def from_dict(doc: dict) -> "PhaseRow":
        return PhaseRow(
            phase_id=doc["phase_id"],
            required=doc.get("required"),
            parents=tuple(doc.get("parents", [])),
            critical_parents=tuple(doc.get("critical_parents", [])),
            start=TurnMark.from_json(doc.get("start")),
            finish=TurnMark.from_json(doc.get("finish")),
            precedence_policy=PrecedencePolicy(doc.get("precedence_policy", "strict")),
            verdict=doc["verdict"],
            evidence=tuple(EvidenceSpan.from_dict(s) for s in doc.get("evidence", [])),
            graded_threshold=doc.get("graded_threshold"),
        )


# --- earliest-mark conventions ----------------------------------------------


def earliest_start(attempts: Iterable[int]) -> TurnMark:
    """Earliest entry into the phase; NEVER when it was never attempted."""
    attempts = list(attempts)
    return TurnMark(min(attempts)) if attempts else NEVER


def earliest_valid_finish(completions: Iterable[int], acks: Iterable[int],
                          pre_phase: Iterable[int], ack_required: bool) -> TurnMark:
    """Earliest valid completion of the phase.

    Pre-phase content earns credit when no acknowledgment is demanded; when
    ack_required is set, only an in-phase acknowledgment counts, so silent
    credit is never granted.
    """
    if ack_required:
        pool = list(acks)
    else:
        pool = list(completions) + list(pre_phase)
    return TurnMark(min(pool)) if pool else NEVER


# --- verdicts -----------------------------------------------------------------


@dataclass(frozen=True)
class VerdictEntry:
    value: float
    evidence: tuple[EvidenceSpan, ...] = ()

    def to_dict(self) -> dict:
        return {"v": self.value, "evidence": [s.to_dict() for s in self.evidence]}

    @staticmethod
    def from_dict(doc: dict) -> "VerdictEntry":
        return VerdictEntry(
            value=doc["v"],
            evidence=tuple(EvidenceSpan.from_dict(s) for s in doc.get("evidence", [])),
        )


def _signals_by_phase(dialogue: Dialogue) -> dict[str, list[AnnotationSignal]]:
    grouped: dict[str, list[AnnotationSignal]] = {}
    for sig in dialogue.signals:
        grouped.setdefault(sig.phase, []).append(sig)
    return grouped


def _marks_for(signals: list[AnnotationSignal], dialogue: Dialogue,
               ack_required: bool, entry_roles: tuple[str, ...]) -> tuple[TurnMark, TurnMark]:
    attempts = []
    completions = []
    acks = []
    pre = []
    for sig in signals:
        if sig.kind is SignalKind.ATTEMPT:
            if 0 <= sig.turn <= dialogue.last_turn:
                if dialogue.turns[sig.turn].role.value not in entry_roles:
                    continue
            attempts.append(sig.turn)
        elif sig.kind is SignalKind.COMPLETION:
            completions.append(sig.turn)
        elif sig.kind is SignalKind.ACK:
            acks.append(sig.turn)
        else:
            pre.append(sig.turn)
    return (earliest_start(attempts),
            earliest_valid_finish(completions, acks, pre, ack_required))


def derive_verdicts(dialogue: Dialogue, catalog: PhaseCatalog) -> dict[str, VerdictEntry]:
    """Default verdicts from signals alone: pass iff a valid finish exists.

    Evidence is the quote of the signal that set the finish mark. Explicit
    verdicts (human adjudication) override these entries downstream.
    """
    grouped = _signals_by_phase(dialogue)
    verdicts: dict[str, VerdictEntry] = {}
    for pid, phase in catalog.phases.items():
        signals = grouped.get(pid, [])
        _, finish = _marks_for(signals, dialogue, phase.ack_required, catalog.entry_roles)
        if finish.is_never:
            verdicts[pid] = VerdictEntry(0.0)
            continue
        spans = tuple(
            EvidenceSpan(
                first=sig.turn, last=sig.turn, quote=sig.quote,
                note=f"{sig.kind.value} via {sig.source.value}",
            )
            for sig in signals
            if sig.turn == finish.value and sig.kind is not SignalKind.ATTEMPT
        )
        verdicts[pid] = VerdictEntry(1.0, spans)
    return verdicts


def build_rows(dialogue: Dialogue, catalog: PhaseCatalog,
               verdicts: Mapping[str, VerdictEntry]) -> list[PhaseRow]:
    """Build exactly one row per catalog phase, in topological order.

    Signals for phases outside the catalog are ignored (they may belong to
    a different catalog version). Requirements are left unresolved here.
    """
    grouped = _signals_by_phase(dialogue)
    missing_evidence: list[str] = []
    rows: list[PhaseRow] = []
    for pid in topological_order(catalog):
        phase = catalog.phases[pid]
        signals = grouped.get(pid, [])
        start, finish = _marks_for(signals, dialogue, phase.ack_required,
                                   catalog.entry_roles)
        entry = verdicts.get(pid, VerdictEntry(0.0))
        value = entry.value
        if phase.graded_threshold is None:
            if value not in (0, 1):
                raise InvalidVerdictError(
                    f"{pid}: verdict must be 0 or 1 (phase is not graded), got {value}"
                )
            value = float(int(value))
        elif not 0 <= value <= 1:
            raise InvalidVerdictError(
                f"{pid}: graded verdict must lie in [0, 1], got {value}"
            )
        for span in entry.evidence:
            if span.first < 0 or span.last > dialogue.last_turn:
                raise EvidenceRangeError(
                    f"{pid}: evidence span {span.first}..{span.last} outside "
                    f"dialogue [0, {dialogue.last_turn}]"
                )
        if value > 0 and not entry.evidence:
            missing_evidence.append(pid)
        rows.append(PhaseRow(
            phase_id=pid,
            required=None,
            parents=phase.parents,
            critical_parents=phase.critical_parents,
            start=start,
            finish=finish,
            precedence_policy=phase.precedence_policy,
            verdict=value,
            evidence=entry.evidence,
            graded_threshold=phase.graded_threshold,
        ))
    if missing_evidence:
        raise MissingEvidenceError(
            "verdict grants credit without evidence for: "
            + ", ".join(missing_evidence)
        )
    return rows


# --- extraction cascade -------------------------------------------------------


@dataclass(frozen=True)
class AnchorRule:
    phase: str
    kind: SignalKind
    pattern: str | None = None
    event: str | None = None
    priority: int = 0

    def __post_init__(self):
        if (self.pattern is None) == (self.event is None):
            raise ValueError("anchor rule needs exactly one of pattern/event")
        if self.pattern is not None:
            re.compile(self.pattern)


def load_anchor_rules(doc) -> list[AnchorRule]:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"anchor rules are not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise DocumentSyntaxError("anchor rules document must be a JSON list")
    rules = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, dict) or "phase" not in raw or "kind" not in raw:
            raise DocumentSyntaxError(f"anchor rule [{i}] needs 'phase' and 'kind'")
        try:
            rules.append(AnchorRule(
                phase=raw["phase"],
                kind=SignalKind(str(raw["kind"]).lower()),
                pattern=raw.get("pattern"),
                event=raw.get("event"),
                priority=int(raw.get("priority", 0)),
            ))
        except (ValueError, re.error) as exc:
            raise DocumentSyntaxError(f"anchor rule [{i}] invalid: {exc}") from exc
    return rules


def validate_anchor_rules(rules: Sequence[AnchorRule],
                          catalog: PhaseCatalog) -> LintReport:
    report = LintReport()
    for i, rule in enumerate(rules):
        if rule.phase not in catalog.phases:
            report.add("UNKNOWN_PHASE", f"rules[{i}]",
                       f"anchor rule names phase {rule.phase!r} absent from catalog")
    return report


@dataclass(frozen=True)
class AdjudicationAnswer:
    kind: SignalKind
    turn: int
    quote: str
    confidence: float


class Adjudicator(Protocol):
    """Pluggable judge for rows the anchors and rules left ambiguous.

    ``serial`` declares whether calls must not overlap; the cascade visits
    phases one at a time either way, so serial adjudicators are safe here.
    """

    serial: bool

    def judge(self, excerpt: Sequence[Turn], rubric: str) -> AdjudicationAnswer | None:
        ...


def _rule_matches(rule: AnchorRule, turn: Turn) -> str | None:
    """Matched quote when the rule fires on this turn, else None."""
    if rule.pattern is not None:
        m = re.search(rule.pattern, turn.text)
        return m.group(0) if m else None
    return "" if rule.event in turn.events else None


def extract_signals(dialogue: Dialogue, anchor_rules: Sequence[AnchorRule],
                    adjudicator: Adjudicator | None = None,
                    catalog: PhaseCatalog | None = None) -> list[AnnotationSignal]:
    """Run the cascade: anchors, then the rule layer, then the adjudicator.

    Attempts come from anchor patterns and tool/UI events; completion-layer
    rules (completion/ack/pre-phase kinds) fill obvious finishes. Phases
    with an attempt but no completion-layer signal are submitted to the
    adjudicator, which may be absent (rows simply stay incomplete).
    """
    signals: list[AnnotationSignal] = []

    attempt_rules = [r for r in anchor_rules if r.kind is SignalKind.ATTEMPT]
    finish_rules = [r for r in anchor_rules if r.kind is not SignalKind.ATTEMPT]

    for turn in dialogue.turns:
        for rule in attempt_rules:
            quote = _rule_matches(rule, turn)
            if quote is None:
                continue
            signals.append(AnnotationSignal(
                phase=rule.phase, kind=SignalKind.ATTEMPT, turn=turn.index,
                quote=quote, confidence=1.0, source=SignalSource.ANCHOR,
            ))

        # completion-layer rules: at most one kind may claim a (phase, turn);
        # higher priority wins, an equal-priority tie across kinds is an error
        claims: dict[str, list[tuple[AnchorRule, str]]] = {}
        for rule in finish_rules:
            quote = _rule_matches(rule, turn)
            if quote is not None:
                claims.setdefault(rule.phase, []).append((rule, quote))
        for phase, matched in claims.items():
            top = max(rule.priority for rule, _ in matched)
            winners = [(rule, quote) for rule, quote in matched if rule.priority == top]
            kinds = {rule.kind for rule, _ in winners}
            if len(kinds) > 1:
                raise RuleConflictError(
                    f"rules claim turn {turn.index} of phase {phase} as "
                    f"{sorted(k.value for k in kinds)} at equal priority {top}"
                )
            rule, quote = winners[0]
            signals.append(AnnotationSignal(
                phase=phase, kind=rule.kind, turn=turn.index,
                quote=quote, confidence=1.0, source=SignalSource.RULE,
            ))

    if adjudicator is not None:
        attempted = {s.phase for s in signals if s.kind is SignalKind.ATTEMPT}
        finished = {s.phase for s in signals if s.kind is not SignalKind.ATTEMPT}
        for phase in sorted(attempted - finished):
            first = min(s.turn for s in signals
                        if s.phase == phase and s.kind is SignalKind.ATTEMPT)
            first = max(0, min(first, dialogue.last_turn))
            excerpt = dialogue.turns[first:]
            rubric = ""
            if catalog is not None and phase in catalog.phases:
                rubric = catalog.phases[phase].rubric
            answer = adjudicator.judge(excerpt, rubric)
            if answer is None or answer.confidence < ADJUDICATION_MIN_CONFIDENCE:
                continue
            signals.append(AnnotationSignal(
                phase=phase, kind=answer.kind, turn=answer.turn,
                quote=answer.quote, confidence=answer.confidence,
                source=SignalSource.ADJUDICATOR,
            ))

    return signals
