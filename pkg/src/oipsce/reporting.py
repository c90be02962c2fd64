"""Review-queue triage and store-level aggregation.

Escalation follows clinical risk (failing critical edges), uncertainty
(low-confidence adjudicator spans), and novelty (credit resting on a
single very short quote). Thresholds are configurable; the defaults live
here so the CLI and the HTTP service agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dialogue import SignalSource
from .rows import EvidenceSpan
from .store import AuditResult, AuditStore

DEFAULT_CONFIDENCE_THRESHOLD = 0.7
SHORT_QUOTE_WORDS = 3


class ReviewReason(str, Enum):
    LOW_CONFIDENCE = "low_confidence"
    CRITICAL_EDGE_FAIL = "critical_edge_fail"
    NOVEL_PHRASING = "novel_phrasing"


@dataclass(frozen=True)
class ReviewItem:
    audit_id: str
    phase_id: str
    reason: ReviewReason
    excerpt: EvidenceSpan
    catalog_version: str = ""

    def to_dict(self) -> dict:
        return {
            "audit_id": self.audit_id,
            "phase_id": self.phase_id,
            "reason": self.reason.value,
            "excerpt": self.excerpt.to_dict(),
            "catalog_version": self.catalog_version,
        }


def _edge_excerpt(edge) -> EvidenceSpan:
    marks = [m.value for m in (edge.child_start, edge.parent_finish)
             if not m.is_never]
    first = min(marks) if marks else 0
    last = max(marks) if marks else 0
    symbol = "!<" if edge.policy.value == "strict" else "!<="
    return EvidenceSpan(
        first=first, last=last, quote="",
        note=(f"edge {edge.parent}→{edge.child}: "
              f"e={edge.parent_finish} {symbol} s={edge.child_start}"),
    )


def review_items_for(result: AuditResult, inputs,
                     confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
                     ) -> list[ReviewItem]:
    items: list[ReviewItem] = []
    for edge in result.decision.failing_edges:
        items.append(ReviewItem(
            audit_id=result.audit_id,
            phase_id=edge.child,
            reason=ReviewReason.CRITICAL_EDGE_FAIL,
            excerpt=_edge_excerpt(edge),
            catalog_version=result.catalog_version,
        ))
    seen_low: set[str] = set()
    for sig in inputs.dialogue.signals:
        if (sig.source is SignalSource.ADJUDICATOR
                and sig.confidence < confidence_threshold
                and sig.phase not in seen_low):
            seen_low.add(sig.phase)
            items.append(ReviewItem(
                audit_id=result.audit_id,
                phase_id=sig.phase,
                reason=ReviewReason.LOW_CONFIDENCE,
                excerpt=EvidenceSpan(
                    first=max(sig.turn, 0), last=max(sig.turn, 0),
                    quote=sig.quote,
                    note=f"adjudicator confidence {sig.confidence:.2f}",
                ),
                catalog_version=result.catalog_version,
            ))
    for row in result.rows:
        if row.verdict == 1 and len(row.evidence) == 1:
            quote = row.evidence[0].quote
            if 0 < len(quote.split()) < SHORT_QUOTE_WORDS:
                items.append(ReviewItem(
                    audit_id=result.audit_id,
                    phase_id=row.phase_id,
                    reason=ReviewReason.NOVEL_PHRASING,
                    excerpt=row.evidence[0],
                    catalog_version=result.catalog_version,
                ))
    return items


def build_review_queue(store: AuditStore,
                       confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
                       ) -> list[ReviewItem]:
    """Triage the latest record of every dialogue in the store."""
    items: list[ReviewItem] = []
    for did in store.dialogue_ids():
        audit_id = store.latest_audit_id(did)
        result, inputs = store.get_record(audit_id)
        items.extend(review_items_for(result, inputs, confidence_threshold))
    return items


def summarize_store(store: AuditStore,
                    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> dict:
    """Aggregate view over latest records: rates, CDS spread, queue size."""
    latest = store.latest_results()
    summary: dict = {
        "dialogues": len(latest),
        "call_success_rate": None,
        "coverage_rate": None,
        "order_safe_rate": None,
        "phase_failure_rates": {},
        "cds": {"values": [], "mean": None},
        "review_queue_size": 0,
        "catalog_versions": sorted({r.catalog_version for r in latest}),
    }
    if not latest:
        return summary
    n = len(latest)
    summary["call_success_rate"] = sum(r.decision.call_success for r in latest) / n
    summary["coverage_rate"] = sum(r.decision.coverage for r in latest) / n
    summary["order_safe_rate"] = sum(r.decision.order_safe for r in latest) / n

    appearances: dict[str, int] = {}
    failures: dict[str, int] = {}
    for result in latest:
        failing = set(result.decision.failing_phases)
        for row in result.rows:
            if not row.required:
                continue
            appearances[row.phase_id] = appearances.get(row.phase_id, 0) + 1
            if row.phase_id in failing:
                failures[row.phase_id] = failures.get(row.phase_id, 0) + 1
    summary["phase_failure_rates"] = {
        pid: failures.get(pid, 0) / count
        for pid, count in sorted(appearances.items())
    }

    cds_values = [r.diagnostics.cds for r in latest if r.diagnostics.cds is not None]
    summary["cds"]["values"] = cds_values
    if cds_values:
        summary["cds"]["mean"] = sum(cds_values) / len(cds_values)

    summary["review_queue_size"] = len(build_review_queue(store, confidence_threshold))
    return summary
