from __future__ import annotations

import pytest

from oipsce import (
    NEVER,
    AnchorRule,
    EvidenceSpan,
    TurnMark,
    VerdictEntry,
    build_rows,
    derive_verdicts,
    earliest_start,
    earliest_valid_finish,
    extract_signals,
    load_dialogue,
    parse_catalog,
)
from oipsce.dialogue import SignalKind, SignalSource
from oipsce.errors import (
    InvalidVerdictError,
    MissingEvidenceError,
    RuleConflictError,
)
from oipsce.rows import AdjudicationAnswer, load_anchor_rules, validate_anchor_rules

from conftest import read_data


class TestTurnMark:
    def test_never_compares_greater_than_every_finite_index(self):
        assert TurnMark(10**9) < NEVER
        assert NEVER > TurnMark(0)
        assert not NEVER < TurnMark(42)

    def test_never_equals_never(self):
        assert NEVER == TurnMark(None)
        assert NEVER <= TurnMark(None)
        assert not NEVER < TurnMark(None)

    def test_finite_total_order(self):
        assert TurnMark(3) < TurnMark(4)
        assert TurnMark(4) == TurnMark(4)
        assert TurnMark(4) >= TurnMark(3)

    def test_prints_infinity(self):
        assert str(NEVER) == "∞"
        assert str(TurnMark(52)) == "52"

    def test_json_round_trip(self):
        assert TurnMark.from_json(NEVER.to_json()) == NEVER
        assert TurnMark.from_json(TurnMark(7).to_json()) == TurnMark(7)


class TestEarliestMarks:
    def test_earliest_start_takes_minimum(self):
        assert earliest_start([42, 60]) == TurnMark(42)

    def test_earliest_start_of_nothing_is_never(self):
        assert earliest_start([]) == NEVER

    def test_earliest_start_single(self):
        assert earliest_start([45]) == TurnMark(45)

    def test_finish_from_completion(self):
        assert earliest_valid_finish([52], [], [], False) == TurnMark(52)

    def test_pre_phase_evidence_never_grants_credit_when_ack_required(self):
        assert earliest_valid_finish([], [], [5], True) == NEVER

    def test_ack_required_uses_first_ack_only(self):
        assert earliest_valid_finish([], [12], [5], True) == TurnMark(12)

    def test_pre_phase_counts_without_ack(self):
        assert earliest_valid_finish([], [], [5], False) == TurnMark(5)
        assert earliest_valid_finish([9], [], [5], False) == TurnMark(5)

    def test_completions_ignored_when_ack_required(self):
        assert earliest_valid_finish([9], [], [], True) == NEVER


class TestBuildRows:
    def test_case_b_rows(self, dialogue_b, catalog_b):
        rows = build_rows(dialogue_b, catalog_b, derive_verdicts(dialogue_b, catalog_b))
        got = {r.phase_id: (r.start.value, r.finish.value, r.verdict) for r in rows}
        assert got == {
            "PID": (45, 52, 1), "CSV": (42, 81, 1), "DFV": (82, 99, 1),
            "DRC": (90, 101, 1), "DCC": (102, 103, 1), "CRN": (104, 107, 1),
        }

    def test_case_a_slice_rows(self, dialogue_a_slice, catalog_a):
        rows = build_rows(dialogue_a_slice, catalog_a,
                          derive_verdicts(dialogue_a_slice, catalog_a))
        by_id = {r.phase_id: r for r in rows}
        assert (by_id["SX_DECL"].start, by_id["SX_DECL"].finish) == (TurnMark(1), TurnMark(1))
        assert (by_id["SX_ONSET_DUR"].start, by_id["SX_ONSET_DUR"].finish) == (TurnMark(2), TurnMark(3))
        assert (by_id["SX_CHARACTER"].start, by_id["SX_CHARACTER"].finish) == (TurnMark(4), TurnMark(5))
        untouched = [r for r in rows if r.phase_id not in
                     ("SX_DECL", "SX_ONSET_DUR", "SX_CHARACTER")]
        assert all(r.start is NEVER or r.start == NEVER for r in untouched)
        assert all(r.verdict == 0 for r in untouched)

    def test_signal_free_dialogue_yields_all_never_rows(self, catalog_b):
        d = load_dialogue({"id": "quiet", "turns": [
            {"t": 0, "role": "user", "text": "hello"}]})
        rows = build_rows(d, catalog_b, derive_verdicts(d, catalog_b))
        assert len(rows) == len(catalog_b.phases)
        assert all(r.start == NEVER and r.finish == NEVER and r.verdict == 0
                   for r in rows)

    def test_row_count_always_equals_phase_count(self, dialogue_a_slice, catalog_a):
        rows = build_rows(dialogue_a_slice, catalog_a,
                          derive_verdicts(dialogue_a_slice, catalog_a))
        assert len(rows) == len(catalog_a.phases)

    def test_rows_in_topological_order(self, dialogue_b, catalog_b):
        rows = build_rows(dialogue_b, catalog_b, derive_verdicts(dialogue_b, catalog_b))
        assert [r.phase_id for r in rows] == ["PID", "CSV", "DFV", "DRC", "DCC", "CRN"]

    def test_permuting_signals_changes_nothing(self, dialogue_b, catalog_b):
        import dataclasses

        shuffled = dataclasses.replace(
            dialogue_b, signals=tuple(reversed(dialogue_b.signals)))
        a = build_rows(dialogue_b, catalog_b, derive_verdicts(dialogue_b, catalog_b))
        b = build_rows(shuffled, catalog_b, derive_verdicts(shuffled, catalog_b))
        for left, right in zip(a, b):
            assert (left.phase_id, left.start, left.finish, left.verdict) == \
                   (right.phase_id, right.start, right.finish, right.verdict)

    def test_verdict_without_evidence_rejected(self, catalog_b):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "x"}]})
        verdicts = derive_verdicts(d, catalog_b)
        verdicts["PID"] = VerdictEntry(1.0, ())
        with pytest.raises(MissingEvidenceError):
            build_rows(d, catalog_b, verdicts)

    def test_non_binary_verdict_on_ungraded_phase_rejected(self, catalog_b):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "x"}]})
        verdicts = derive_verdicts(d, catalog_b)
        verdicts["PID"] = VerdictEntry(0.5, (EvidenceSpan(0, 0, "x", ""),))
        with pytest.raises(InvalidVerdictError):
            build_rows(d, catalog_b, verdicts)

    def test_graded_verdict_allowed_with_threshold(self):
        catalog = parse_catalog({
            "version": "g-1", "schema_rev": 1,
            "phases": [{"id": "A", "required": "true", "graded_threshold": 0.6}],
        })
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "x"}]})
        rows = build_rows(d, catalog, {"A": VerdictEntry(0.7, (EvidenceSpan(0, 0, "x", ""),))})
        assert rows[0].verdict == 0.7

    def test_ack_required_phase_needs_ack_signal(self):
        catalog = parse_catalog({
            "version": "ack-1", "schema_rev": 1,
            "phases": [{"id": "A", "required": "true", "ack_required": True}],
        })
        d = load_dialogue({
            "id": "d",
            "turns": [{"t": 0, "role": "agent", "text": "noted, thank you"}],
            "signals": [{"phase": "A", "kind": "completion", "turn": 0,
                         "quote": "noted"}],
        })
        rows = build_rows(d, catalog, derive_verdicts(d, catalog))
        assert rows[0].finish == NEVER and rows[0].verdict == 0
        with_ack = load_dialogue({
            "id": "d2",
            "turns": [{"t": 0, "role": "agent", "text": "noted, thank you"}],
            "signals": [{"phase": "A", "kind": "ack", "turn": 0, "quote": "noted"}],
        })
        rows = build_rows(with_ack, catalog, derive_verdicts(with_ack, catalog))
        assert rows[0].finish == TurnMark(0) and rows[0].verdict == 1

    def test_pre_phase_credit_can_precede_start(self):
        catalog = parse_catalog({
            "version": "pre-1", "schema_rev": 1,
            "phases": [{"id": "A", "required": "true"}],
        })
        d = load_dialogue({
            "id": "d",
            "turns": [{"t": 0, "role": "user", "text": "the answer early"},
                      {"t": 1, "role": "agent", "text": "now asking the question"}],
            "signals": [
                {"phase": "A", "kind": "pre_phase_evidence", "turn": 0,
                 "quote": "answer early"},
                {"phase": "A", "kind": "attempt", "turn": 1, "quote": "asking"},
            ],
        })
        rows = build_rows(d, catalog, derive_verdicts(d, catalog))
        assert rows[0].finish == TurnMark(0)
        assert rows[0].start == TurnMark(1)  # finish precedes start, by design

    def test_entry_roles_filter_attempts(self):
        doc = {
            "version": "roles-1", "schema_rev": 1, "entry_roles": ["agent"],
            "phases": [{"id": "A", "required": "true"}],
        }
        catalog = parse_catalog(doc)
        d = load_dialogue({
            "id": "d",
            "turns": [{"t": 0, "role": "user", "text": "user asks"},
                      {"t": 1, "role": "agent", "text": "agent asks"}],
            "signals": [
                {"phase": "A", "kind": "attempt", "turn": 0, "quote": "user asks"},
                {"phase": "A", "kind": "attempt", "turn": 1, "quote": "agent asks"},
            ],
        })
        rows = build_rows(d, catalog, derive_verdicts(d, catalog))
        assert rows[0].start == TurnMark(1)

    def test_signals_for_foreign_phases_ignored(self, catalog_b):
        d = load_dialogue({
            "id": "d",
            "turns": [{"t": 0, "role": "user", "text": "x"}],
            "signals": [{"phase": "NOT_HERE", "kind": "attempt", "turn": 0}],
        })
        rows = build_rows(d, catalog_b, derive_verdicts(d, catalog_b))
        assert len(rows) == len(catalog_b.phases)


class TestExtraction:
    def test_anchor_finds_pid_attempt_at_turn_45(self, dialogue_b, catalog_b):
        rules = load_anchor_rules(read_data("anchors_case_b.json"))
        assert validate_anchor_rules(rules, catalog_b).ok()
        signals = extract_signals(dialogue_b, rules)
        pid_attempts = [s for s in signals
                        if s.phase == "PID" and s.kind is SignalKind.ATTEMPT]
        assert any(s.turn == 45 for s in pid_attempts)
        assert min(s.turn for s in pid_attempts) == 45
        assert all(s.source is SignalSource.ANCHOR for s in pid_attempts)

    def test_no_matching_anchors_yields_empty(self, dialogue_a_slice):
        rules = [AnchorRule(phase="SX_DECL", kind=SignalKind.ATTEMPT,
                            pattern="zebra quantum")]
        assert extract_signals(dialogue_a_slice, rules) == []

    def test_two_rules_same_kind_both_emit_and_earliest_wins(self):
        d = load_dialogue({"id": "d", "turns": [
            {"t": t, "role": "user", "text": "checking the copay now"}
            for t in range(15)]})
        rules = [
            AnchorRule(phase="DCC", kind=SignalKind.COMPLETION, pattern="copay"),
            AnchorRule(phase="DCC", kind=SignalKind.COMPLETION, pattern="checking"),
        ]
        signals = extract_signals(d, rules)
        turns = sorted({s.turn for s in signals})
        assert turns[0] == 0
        assert earliest_valid_finish(
            [s.turn for s in signals], [], [], False) == TurnMark(0)

    def test_equal_priority_kind_conflict_raises(self):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "confirmed and acknowledged"}]})
        rules = [
            AnchorRule(phase="A", kind=SignalKind.COMPLETION, pattern="confirmed"),
            AnchorRule(phase="A", kind=SignalKind.ACK, pattern="acknowledged"),
        ]
        with pytest.raises(RuleConflictError):
            extract_signals(d, rules)

    def test_higher_priority_wins_conflict(self):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "confirmed and acknowledged"}]})
        rules = [
            AnchorRule(phase="A", kind=SignalKind.COMPLETION, pattern="confirmed",
                       priority=2),
            AnchorRule(phase="A", kind=SignalKind.ACK, pattern="acknowledged"),
        ]
        signals = extract_signals(d, rules)
        assert [s.kind for s in signals] == [SignalKind.COMPLETION]

    def test_attempt_and_completion_same_turn_is_not_a_conflict(self):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "user", "text": "cough for two months"}]})
        rules = [
            AnchorRule(phase="SX_DECL", kind=SignalKind.ATTEMPT, pattern="cough"),
            AnchorRule(phase="SX_DECL", kind=SignalKind.COMPLETION, pattern="months"),
        ]
        signals = extract_signals(d, rules)
        assert {s.kind for s in signals} == {SignalKind.ATTEMPT, SignalKind.COMPLETION}

    def test_event_anchors_match_turn_events(self):
        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "agent", "text": "", "events": ["id_form_submitted"]}]})
        rules = [AnchorRule(phase="PID", kind=SignalKind.ATTEMPT,
                            event="id_form_submitted")]
        signals = extract_signals(d, rules)
        assert signals[0].turn == 0 and signals[0].quote == ""

    def test_adjudicator_fills_ambiguous_rows(self):
        class Scripted:
            serial = True

            def __init__(self, answer):
                self.answer = answer
                self.calls = []

            def judge(self, excerpt, rubric):
                self.calls.append((excerpt[0].index, rubric))
                return self.answer

        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "agent", "text": "checking identity now"},
            {"t": 1, "role": "user", "text": "all verified, thanks"}]})
        rules = [AnchorRule(phase="PID", kind=SignalKind.ATTEMPT, pattern="identity")]

        judge = Scripted(AdjudicationAnswer(SignalKind.COMPLETION, 1, "verified", 0.9))
        signals = extract_signals(d, rules, judge)
        assert any(s.kind is SignalKind.COMPLETION
                   and s.source is SignalSource.ADJUDICATOR for s in signals)
        assert judge.calls and judge.calls[0][0] == 0

        low = Scripted(AdjudicationAnswer(SignalKind.COMPLETION, 1, "verified", 0.3))
        signals = extract_signals(d, rules, low)
        assert all(s.source is not SignalSource.ADJUDICATOR for s in signals)

        silent = Scripted(None)
        signals = extract_signals(d, rules, silent)
        assert all(s.kind is SignalKind.ATTEMPT for s in signals)

    def test_adjudicator_not_called_for_completed_phases(self):
        class Exploding:
            serial = True

            def judge(self, excerpt, rubric):
                raise AssertionError("must not be called")

        d = load_dialogue({"id": "d", "turns": [
            {"t": 0, "role": "agent", "text": "identity verified today"}]})
        rules = [
            AnchorRule(phase="PID", kind=SignalKind.ATTEMPT, pattern="identity"),
            AnchorRule(phase="PID", kind=SignalKind.COMPLETION, pattern="verified"),
        ]
        extract_signals(d, rules, Exploding())

    def test_rule_needs_exactly_one_of_pattern_event(self):
        with pytest.raises(ValueError):
            AnchorRule(phase="A", kind=SignalKind.ATTEMPT)
        with pytest.raises(ValueError):
            AnchorRule(phase="A", kind=SignalKind.ATTEMPT, pattern="x", event="y")
