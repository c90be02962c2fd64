"""Decision core: branch-sensitive requirements, coverage, order safety.

An encounter is accepted iff two predicates both hold: every required
phase passed (coverage), and no safety-critical child started before its
critical parents finished (order safety). Both are evaluated in one linear
pass over the rows and the critical edge set; nothing here ever reads turn
text, so a verdict is reproducible from the stored row table alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .catalog import PhaseCatalog, PrecedencePolicy, requirement_order
from .findings import Finding, Severity
from .rows import NEVER, PhaseRow, TurnMark


@dataclass
class OpCounter:
    """Step counter for the linear-cost contract; one tick per row or edge."""

    ops: int = 0

    def tick(self, n: int = 1) -> None:
        self.ops += n


@dataclass(frozen=True)
class EdgeResult:
    parent: str
    child: str
    parent_finish: TurnMark
    child_start: TurnMark
    policy: PrecedencePolicy
    ok: bool

    def to_dict(self) -> dict:
        return {
            "parent": self.parent,
            "child": self.child,
            "parent_finish": self.parent_finish.to_json(),
            "child_start": self.child_start.to_json(),
            "policy": self.policy.value,
            "ok": self.ok,
        }

    @staticmethod
    def from_dict(doc: dict) -> "EdgeResult":
        return EdgeResult(
            parent=doc["parent"],
            child=doc["child"],
            parent_finish=TurnMark.from_json(doc.get("parent_finish")),
            child_start=TurnMark.from_json(doc.get("child_start")),
            policy=PrecedencePolicy(doc.get("policy", "strict")),
            ok=doc["ok"],
        )


@dataclass(frozen=True)
class Decision:
    coverage: bool
    order_safe: bool
    call_success: bool
    failing_phases: tuple[str, ...] = ()
    failing_edges: tuple[EdgeResult, ...] = ()

    def __post_init__(self):
        if self.call_success != (self.coverage and self.order_safe):
            raise ValueError("call_success must equal coverage AND order_safe")

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "order_safe": self.order_safe,
            "call_success": self.call_success,
            "failing_phases": list(self.failing_phases),
            "failing_edges": [e.to_dict() for e in self.failing_edges],
        }

    @staticmethod
    def from_dict(doc: dict) -> "Decision":
        return Decision(
            coverage=doc["coverage"],
            order_safe=doc["order_safe"],
            call_success=doc["call_success"],
            failing_phases=tuple(doc.get("failing_phases", [])),
            failing_edges=tuple(EdgeResult.from_dict(e)
                                for e in doc.get("failing_edges", [])),
        )


def row_passes(row: PhaseRow) -> bool:
    """Pass/fail for one row; graded phases pass at or above their threshold."""
    if row.graded_threshold is None:
        return row.verdict == 1
    return row.verdict >= row.graded_threshold


def resolve_requirements(catalog: PhaseCatalog, rows: list[PhaseRow],
                         facts: dict[str, bool],
                         counter: OpCounter | None = None,
                         ) -> tuple[list[PhaseRow], list[Finding]]:
    """Fill each row's `required` flag from its requirement expression.

    Phases are visited in requirement-reference topological order (lint
    guarantees the reference graph is acyclic). Unknown facts evaluate
    false and come back as warning findings, never exceptions.
    """
    passed = {row.phase_id: row_passes(row) for row in rows}
    required: dict[str, bool] = {}
    findings: list[Finding] = []
    for pid in requirement_order(catalog):
        missing: set[str] = set()
        required[pid] = catalog.phases[pid].required_expr.evaluate(
            passed, facts, missing)
        for name in sorted(missing):
            findings.append(Finding(
                "UNKNOWN_FACT", pid,
                f"requirement references fact {name!r} not recorded on the dialogue; "
                f"treated as false",
                Severity.WARNING,
            ))
        if counter is not None:
            counter.tick()
    resolved = [dataclasses.replace(row, required=required[row.phase_id])
                for row in rows]
    return resolved, findings


def coverage(rows: list[PhaseRow],
             counter: OpCounter | None = None) -> tuple[bool, list[str]]:
    """True iff every required row passes; also names the rows that do not."""
    failing = []
    for row in rows:
        if counter is not None:
            counter.tick()
        if row.required is None:
            raise ValueError(f"{row.phase_id}: requirements not resolved")
        if row.required and not row_passes(row):
            failing.append(row.phase_id)
    return not failing, failing


def edge_ok(parent_finish: TurnMark, child_start: TurnMark,
            policy: PrecedencePolicy) -> bool:
    """One critical-edge check.

    A child that never started vacuously satisfies the edge. A parent that
    never validly finished cannot precede a started child, so that edge
    fails. Otherwise strict demands finish < start; inclusive allows a tie.
    """
    if child_start.is_never:
        return True
    if parent_finish.is_never:
        return False
    if policy is PrecedencePolicy.INCLUSIVE:
        return parent_finish <= child_start
    return parent_finish < child_start


def order_safe(catalog: PhaseCatalog, rows: list[PhaseRow],
               counter: OpCounter | None = None) -> tuple[bool, list[EdgeResult]]:
    """Check every critical edge; vacuously true when there are none.

    Returns every edge result, passing and failing, for the audit trail.
    Only critical parents are checked: advisory edges never fail a call.
    """
    by_id = {row.phase_id: row for row in rows}
    results: list[EdgeResult] = []
    all_ok = True
    for child_def in catalog.phases.values():
        child = by_id[child_def.id]
        for parent_id in child_def.critical_parents:
            if counter is not None:
                counter.tick()
            parent = by_id[parent_id]
            ok = edge_ok(parent.finish, child.start, child_def.precedence_policy)
            all_ok = all_ok and ok
            results.append(EdgeResult(
                parent=parent_id,
                child=child_def.id,
                parent_finish=parent.finish,
                child_start=child.start,
                policy=child_def.precedence_policy,
                ok=ok,
            ))
    return all_ok, results


def decide_with_edges(catalog: PhaseCatalog, rows: list[PhaseRow],
                      counter: OpCounter | None = None,
                      ) -> tuple[Decision, list[EdgeResult]]:
    """decide(), also returning the full per-edge trail for diagnostics."""
    cov, failing_phases = coverage(rows, counter)
    safe, edges = order_safe(catalog, rows, counter)
    decision = Decision(
        coverage=cov,
        order_safe=safe,
        call_success=cov and safe,
        failing_phases=tuple(failing_phases),
        failing_edges=tuple(e for e in edges if not e.ok),
    )
    return decision, edges


def decide(catalog: PhaseCatalog, rows: list[PhaseRow],
           counter: OpCounter | None = None) -> Decision:
    """Accept the encounter iff coverage and order safety both hold."""
    return decide_with_edges(catalog, rows, counter)[0]
