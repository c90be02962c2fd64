"""Transcripts and ingestion: ordered turns, branch facts, annotation signals.

A dialogue is immutable after load. Signals are explicit, serializable
inputs rather than hidden evaluator state, so human adjudication and
automated anchors travel through one format. Wall-clock timestamps in the
source are tolerated and ignored: every downstream predicate depends only
on the total order of turns.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .catalog import PhaseCatalog
from .errors import DocumentSyntaxError, EmptyDialogueError
from .findings import LintReport

FACT_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


class Role(str, Enum):
    USER = "user"
    AGENT = "agent"


class SignalKind(str, Enum):
    ATTEMPT = "attempt"
    COMPLETION = "completion"
    ACK = "ack"
    PRE_PHASE_EVIDENCE = "pre_phase_evidence"


class SignalSource(str, Enum):
    ANCHOR = "anchor"
    RULE = "rule"
    ADJUDICATOR = "adjudicator"
    HUMAN = "human"


@dataclass(frozen=True)
class Turn:
    index: int
    role: Role
    text: str
    events: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnnotationSignal:
    phase: str
    kind: SignalKind
    turn: int
    quote: str = ""
    confidence: float = 1.0
    source: SignalSource = SignalSource.HUMAN

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "kind": self.kind.value,
            "turn": self.turn,
            "quote": self.quote,
            "confidence": self.confidence,
            "source": self.source.value,
        }


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]
    facts: dict[str, bool] = field(default_factory=dict)
    signals: tuple[AnnotationSignal, ...] = ()
    # original source turn number -> contiguous index (identity when no gaps)
    index_map: dict[int, int] = field(default_factory=dict)
    note: str = ""

    @property
    def last_turn(self) -> int:
        return len(self.turns) - 1


def load_dialogue(doc) -> Dialogue:
    """Load one transcript document.

    Source turn numbers with gaps are renumbered contiguously from 0; the
    original->new map is retained on the dialogue and signal turn references
    are remapped through it.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"transcript is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentSyntaxError("transcript document must be a JSON object")
    did = doc.get("id")
    if not isinstance(did, str) or not did:
        raise DocumentSyntaxError("transcript needs a non-empty string 'id'")
    raw_turns = doc.get("turns")
    if not isinstance(raw_turns, list):
        raise DocumentSyntaxError("transcript needs a 'turns' list")
    if not raw_turns:
        raise EmptyDialogueError(f"dialogue {did!r} has zero turns")

    parsed: list[tuple[int, Role, str, tuple[str, ...]]] = []
    seen_t: set[int] = set()
    for i, turn in enumerate(raw_turns):
        if not isinstance(turn, dict):
            raise DocumentSyntaxError(f"turns[{i}] must be an object")
        t = turn.get("t", i)
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            raise DocumentSyntaxError(f"turns[{i}].t must be a non-negative integer")
        if t in seen_t:
            raise DocumentSyntaxError(f"duplicate turn number {t}")
        seen_t.add(t)
        role_raw = turn.get("role")
        if not isinstance(role_raw, str) or role_raw.lower() not in ("user", "agent"):
            raise DocumentSyntaxError(f"turns[{i}].role must be 'user' or 'agent'")
        text = turn.get("text", "")
        if not isinstance(text, str):
            raise DocumentSyntaxError(f"turns[{i}].text must be a string")
        events = turn.get("events", [])
        if not isinstance(events, list) or any(not isinstance(e, str) for e in events):
            raise DocumentSyntaxError(f"turns[{i}].events must be a list of strings")
        parsed.append((t, Role(role_raw.lower()), text, tuple(events)))

    parsed.sort(key=lambda item: item[0])
    index_map = {t: new for new, (t, _, _, _) in enumerate(parsed)}
    turns = tuple(
        Turn(index=new, role=role, text=text, events=events)
        for new, (_, role, text, events) in enumerate(parsed)
    )

    facts_raw = doc.get("facts", {})
    if not isinstance(facts_raw, dict):
        raise DocumentSyntaxError("'facts' must map names to booleans")
    facts: dict[str, bool] = {}
    for name, value in facts_raw.items():
        if not isinstance(name, str) or not FACT_NAME_RE.match(name):
            raise DocumentSyntaxError(
                f"fact name {name!r} must be a lowercase identifier"
            )
        if not isinstance(value, bool):
            raise DocumentSyntaxError(
                f"fact {name!r} must be a boolean; reduce branch conditions "
                f"to named booleans during ingestion"
            )
        facts[name] = value

    signals = []
    for i, sig in enumerate(doc.get("signals", [])):
        if not isinstance(sig, dict):
            raise DocumentSyntaxError(f"signals[{i}] must be an object")
        phase = sig.get("phase")
        if not isinstance(phase, str) or not phase:
            raise DocumentSyntaxError(f"signals[{i}] needs a 'phase'")
        kind_raw = sig.get("kind")
        try:
            kind = SignalKind(str(kind_raw).lower())
        except ValueError:
            raise DocumentSyntaxError(
                f"signals[{i}].kind must be one of "
                f"{[k.value for k in SignalKind]}, got {kind_raw!r}"
            ) from None
        turn_ref = sig.get("turn")
        if not isinstance(turn_ref, int) or isinstance(turn_ref, bool):
            raise DocumentSyntaxError(f"signals[{i}].turn must be an integer")
        quote = sig.get("quote", "")
        if not isinstance(quote, str):
            raise DocumentSyntaxError(f"signals[{i}].quote must be a string")
        confidence = sig.get("confidence", 1.0)
        if (isinstance(confidence, bool) or not isinstance(confidence, (int, float))
                or not 0 <= confidence <= 1):
            raise DocumentSyntaxError(f"signals[{i}].confidence must be in [0, 1]")
        source_raw = sig.get("source", "human")
        try:
            source = SignalSource(str(source_raw).lower())
        except ValueError:
            raise DocumentSyntaxError(
                f"signals[{i}].source must be one of "
                f"{[s.value for s in SignalSource]}, got {source_raw!r}"
            ) from None
        # remap through the renumbering; unknown references stay as-is and
        # are reported by validate_signals rather than silently aliased
        signals.append(AnnotationSignal(
            phase=phase,
            kind=kind,
            turn=index_map.get(turn_ref, turn_ref),
            quote=quote,
            confidence=float(confidence),
            source=source,
        ))

    note = doc.get("note", "")
    if not isinstance(note, str):
        raise DocumentSyntaxError("'note' must be a string")

    return Dialogue(
        id=did,
        turns=turns,
        facts=facts,
        signals=tuple(signals),
        index_map=index_map,
        note=note,
    )


def validate_signals(dialogue: Dialogue, catalog: PhaseCatalog | None = None) -> LintReport:
    """Report signals that do not resolve: unknown phase, bad turn, missing quote."""
    report = LintReport()
    for i, sig in enumerate(dialogue.signals):
        loc = f"signals[{i}]({sig.phase}@{sig.turn})"
        if catalog is not None and sig.phase not in catalog.phases:
            report.add("UNKNOWN_PHASE", loc,
                       f"signal names phase {sig.phase!r} absent from catalog "
                       f"{catalog.version}")
        if not 0 <= sig.turn <= dialogue.last_turn:
            report.add("TURN_RANGE", loc,
                       f"turn {sig.turn} outside dialogue range "
                       f"[0, {dialogue.last_turn}]")
        elif sig.quote and sig.quote not in dialogue.turns[sig.turn].text:
            report.add("QUOTE_MISMATCH", loc,
                       f"quote {sig.quote!r} not found in turn {sig.turn}")
    return report


def dialogue_to_doc(dialogue: Dialogue) -> dict:
    doc: dict = {
        "id": dialogue.id,
        "turns": [
            {
                "t": turn.index,
                "role": turn.role.value,
                "text": turn.text,
                "events": list(turn.events),
            }
            for turn in dialogue.turns
        ],
        "facts": dict(dialogue.facts),
        "signals": [sig.to_dict() for sig in dialogue.signals],
    }
    if dialogue.note:
        doc["note"] = dialogue.note
    return doc


def serialize_dialogue(dialogue: Dialogue) -> str:
    return json.dumps(dialogue_to_doc(dialogue), indent=2, ensure_ascii=False) + "\n"
