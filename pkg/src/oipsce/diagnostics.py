"""Descriptive statistics that never affect pass/fail.

Three fractions: the share of satisfied critical edges, start-order
agreement over the full dependency graph, and attempt-to-window
consistency. Each is absent (None) when its denominator is zero, and
none of them feeds back into any decision field. The sequence-agreement
and attempt-consistency formulas are this engine's own definitions, so
reports carry the definition tag ``oipsce-v1``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import PhaseCatalog
from .dialogue import AnnotationSignal, SignalKind
from .evaluator import EdgeResult
from .rows import PhaseRow

DEFINITION_TAG = "oipsce-v1"


@dataclass(frozen=True)
class DiagnosticsReport:
    cds: float | None
    psa: float | None
    apc: float | None
    per_edge: tuple[EdgeResult, ...] = ()
    definition: str = DEFINITION_TAG

    def to_dict(self) -> dict:
        return {
            "cds": self.cds,
            "psa": self.psa,
            "apc": self.apc,
            "per_edge": [e.to_dict() for e in self.per_edge],
            "definition": self.definition,
        }

    @staticmethod
    def from_dict(doc: dict) -> "DiagnosticsReport":
        return DiagnosticsReport(
            cds=doc.get("cds"),
            psa=doc.get("psa"),
            apc=doc.get("apc"),
            per_edge=tuple(EdgeResult.from_dict(e) for e in doc.get("per_edge", [])),
            definition=doc.get("definition", DEFINITION_TAG),
        )


def cds(edge_results: list[EdgeResult]) -> float | None:
    """Share of satisfied critical edges; absent when there are none."""
    if not edge_results:
        return None
    return sum(1 for e in edge_results if e.ok) / len(edge_results)


def psa(catalog: PhaseCatalog, rows: list[PhaseRow]) -> float | None:
    """Start-order agreement over ALL edges, critical or advisory.

    For every edge whose parent and child both actually started, count the
    pairs where the parent started no later than the child. Overlapping
    phases are permitted, hence the non-strict comparison.
    """
    start = {row.phase_id: row.start for row in rows}
    agree = total = 0
    for parent, child in catalog.edges():
        s_parent, s_child = start.get(parent), start.get(child)
        if s_parent is None or s_child is None:
            continue
        if s_parent.is_never or s_child.is_never:
            continue
        total += 1
        if s_parent <= s_child:
            agree += 1
    return agree / total if total else None


def apc(signals: list[AnnotationSignal], rows: list[PhaseRow]) -> float | None:
    """Fraction of attempt signals falling inside their phase's row window.

    A never-finished row keeps the window open to the end of the dialogue.
    Flags segmentation drift between attempts and adjudicated phases.
    """
    windows = {row.phase_id: (row.start, row.finish) for row in rows}
    inside = total = 0
    for sig in signals:
        if sig.kind is not SignalKind.ATTEMPT:
            continue
        total += 1
        window = windows.get(sig.phase)
        if window is None:
            continue
        start, finish = window
        if start.is_never:
            continue
        if sig.turn < start.value:
            continue
        if not finish.is_never and sig.turn > finish.value:
            continue
        inside += 1
    return inside / total if total else None


def build_diagnostics(catalog: PhaseCatalog, rows: list[PhaseRow],
                      signals: list[AnnotationSignal],
                      edge_results: list[EdgeResult]) -> DiagnosticsReport:
    return DiagnosticsReport(
        cds=cds(edge_results),
        psa=psa(catalog, rows),
        apc=apc(signals, rows),
        per_edge=tuple(edge_results),
    )
