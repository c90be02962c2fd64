"""Phase catalog: parse, lint, version, and order the policy-as-code artifact.

A catalog is one JSON document declaring every phase (id, rubric, parents,
critical parents, precedence policy, requirement expression). The edge set
is derived solely from the ``parents`` declarations: there is no separate
edge list to drift out of sync. Bad documents are rejected at load time
with an exhaustive report; a validated catalog is immutable and safe to
share across concurrent evaluations.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import DocumentSyntaxError, LintError
from .expr import Expr, ExprSyntaxError, PHASE_RE, parse_expr
from .findings import LintReport, Severity

VALID_ENTRY_ROLES = ("user", "agent")

# advisory threshold: share of edges designated critical (keeps review focused)
CRITICAL_FRACTION_LIMIT = 0.10


class PrecedencePolicy(str, Enum):
    STRICT = "strict"
    INCLUSIVE = "inclusive"


@dataclass(frozen=True)
class PhaseDef:
    id: str
    title: str
    rubric: str
    parents: tuple[str, ...]
    critical_parents: tuple[str, ...]
    precedence_policy: PrecedencePolicy
    ack_required: bool
    required_expr: Expr
    low_harm: bool = False
    graded_threshold: float | None = None


@dataclass(frozen=True)
class PhaseCatalog:
    version: str
    schema_rev: int
    phases: dict[str, PhaseDef]  # insertion order = declaration order
    critical_edge_rationale: dict[tuple[str, str], str]
    entry_roles: tuple[str, ...] = VALID_ENTRY_ROLES

    def phase_ids(self) -> list[str]:
        return list(self.phases)

    def edges(self) -> list[tuple[str, str]]:
        """All (parent, child) edges, in catalog declaration order."""
        return [(p, child.id) for child in self.phases.values() for p in child.parents]

    def critical_edges(self) -> list[tuple[str, str]]:
        return [
            (p, child.id)
            for child in self.phases.values()
            for p in child.critical_parents
        ]


# --- structural parse (shape errors are SYNTAX, not lint findings) ----------


def _structural(doc) -> dict:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"catalog is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentSyntaxError("catalog document must be a JSON object")
    version = doc.get("version")
    if not isinstance(version, str) or not version:
        raise DocumentSyntaxError("catalog needs a non-empty string 'version'")
    schema_rev = doc.get("schema_rev")
    if not isinstance(schema_rev, int) or isinstance(schema_rev, bool):
        raise DocumentSyntaxError("catalog needs an integer 'schema_rev'")
    phases = doc.get("phases")
    if not isinstance(phases, list) or not phases:
        raise DocumentSyntaxError("catalog needs a non-empty 'phases' list")
    entry_roles = doc.get("entry_roles", list(VALID_ENTRY_ROLES))
    if (not isinstance(entry_roles, list) or not entry_roles
            or any(r not in VALID_ENTRY_ROLES for r in entry_roles)):
        raise DocumentSyntaxError(
            f"entry_roles must be a non-empty subset of {list(VALID_ENTRY_ROLES)}"
        )
    for i, ph in enumerate(phases):
        if not isinstance(ph, dict):
            raise DocumentSyntaxError(f"phases[{i}] must be an object")
        if not isinstance(ph.get("id"), str):
            raise DocumentSyntaxError(f"phases[{i}] needs a string 'id'")
        loc = ph["id"] or f"phases[{i}]"
        for key in ("title", "rubric", "required"):
            if key in ph and not isinstance(ph[key], str):
                raise DocumentSyntaxError(f"{loc}.{key} must be a string")
        for key in ("parents", "critical_parents"):
            val = ph.get(key, [])
            if not isinstance(val, list) or any(not isinstance(x, str) for x in val):
                raise DocumentSyntaxError(f"{loc}.{key} must be a list of phase ids")
        rationale = ph.get("critical_rationale", {})
        if (not isinstance(rationale, dict)
                or any(not isinstance(k, str) or not isinstance(v, str)
                       for k, v in rationale.items())):
            raise DocumentSyntaxError(f"{loc}.critical_rationale must map parent id to text")
        policy = ph.get("precedence_policy", "strict")
        if policy not in (p.value for p in PrecedencePolicy):
            raise DocumentSyntaxError(
                f"{loc}.precedence_policy must be 'strict' or 'inclusive', got {policy!r}"
            )
        for key in ("low_harm", "ack_required"):
            if key in ph and not isinstance(ph[key], bool):
                raise DocumentSyntaxError(f"{loc}.{key} must be a boolean")
        thr = ph.get("graded_threshold")
        if thr is not None and (isinstance(thr, bool) or not isinstance(thr, (int, float))):
            raise DocumentSyntaxError(f"{loc}.graded_threshold must be a number or null")
    return doc


# --- graph helpers -----------------------------------------------------------


def _sccs(nodes: list[str], out_edges: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; returns strongly connected components."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    result: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(out_edges.get(root, ())))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = lowlink[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(out_edges.get(succ, ()))))
                    advanced = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                result.append(comp)
    return result


def _cycle_components(nodes: list[str], out_edges: dict[str, list[str]]) -> list[list[str]]:
    """SCCs that actually contain a cycle (size > 1, or a self-loop)."""
    cycles = []
    for comp in _sccs(nodes, out_edges):
        if len(comp) > 1 or comp[0] in out_edges.get(comp[0], ()):
            cycles.append(sorted(comp))
    cycles.sort()
    return cycles


def _kahn(nodes: list[str], parents_of: dict[str, Iterable[str]]) -> list[str]:
    """Topological order, ties broken by declaration order of ``nodes``."""
    decl = {node: i for i, node in enumerate(nodes)}
    children: dict[str, list[str]] = {node: [] for node in nodes}
    indegree = {node: 0 for node in nodes}
    for node in nodes:
        for parent in parents_of.get(node, ()):
            if parent in indegree:
                children[parent].append(node)
                indegree[node] += 1
    ready = [decl[n] for n in nodes if indegree[n] == 0]
    heapq.heapify(ready)
    order: list[str] = []
    by_decl = list(nodes)
    while ready:
        node = by_decl[heapq.heappop(ready)]
        order.append(node)
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, decl[child])
    if len(order) != len(nodes):
        raise ValueError("graph contains a cycle; lint should have rejected it")
    return order


# --- lint --------------------------------------------------------------------


def lint_catalog(doc) -> LintReport:
    """Collect every lint finding for a structurally parsed catalog candidate.

    Raises DocumentSyntaxError when the candidate is not even structurally
    well-formed; findings are reserved for semantic rules.
    """
    doc = _structural(doc)
    report = LintReport()
    phases: list[dict] = doc["phases"]

    ids: list[str] = []
    seen: set[str] = set()
    for ph in phases:
        pid = ph["id"]
        if not PHASE_RE.match(pid):
            report.add("BAD_PHASE_ID", pid or "<empty>",
                       f"phase id {pid!r} must match [A-Z][A-Z0-9_]*")
        if pid in seen:
            report.add("DUP_PHASE_ID", pid, f"phase id {pid!r} declared more than once")
        else:
            seen.add(pid)
            ids.append(pid)
    known = set(ids)

    exprs: dict[str, Expr] = {}
    for ph in phases:
        pid = ph["id"]
        parents = ph.get("parents", [])
        criticals = ph.get("critical_parents", [])
        rationale = ph.get("critical_rationale", {})

        if len(set(parents)) != len(parents):
            report.add("DUPLICATE_PARENT", pid,
                       "duplicate entries in parents list", Severity.WARNING)
        for parent in dict.fromkeys(parents):
            if parent not in known:
                report.add("UNKNOWN_PHASE", f"{pid}.parents",
                           f"parent {parent!r} is not a phase in this catalog")
        for parent in dict.fromkeys(criticals):
            if parent not in known:
                report.add("UNKNOWN_PHASE", f"{pid}.critical_parents",
                           f"critical parent {parent!r} is not a phase in this catalog")
            elif parent not in parents:
                report.add("CRITICAL_NOT_PARENT", pid,
                           f"critical parent {parent!r} is not listed in parents")
            else:
                if not rationale.get(parent, "").strip():
                    report.add("MISSING_RATIONALE", f"{pid}.critical_rationale",
                               f"critical edge {parent}→{pid} has no documented rationale")
        for parent in rationale:
            if parent not in known:
                report.add("UNKNOWN_PHASE", f"{pid}.critical_rationale",
                           f"rationale names unknown phase {parent!r}")
            elif parent not in criticals:
                report.add("RATIONALE_UNKNOWN_EDGE", f"{pid}.critical_rationale",
                           f"rationale given for {parent}→{pid}, which is not a critical edge")

        policy = PrecedencePolicy(ph.get("precedence_policy", "strict"))
        if policy is PrecedencePolicy.INCLUSIVE and not ph.get("low_harm", False):
            report.add("POLICY_VIOLATION", pid,
                       "inclusive precedence is permitted only for low_harm phases; "
                       "immediate-risk children must use strict precedence")

        thr = ph.get("graded_threshold")
        if thr is not None and not (0 < float(thr) <= 1):
            report.add("BAD_THRESHOLD", pid,
                       f"graded_threshold must lie in (0, 1], got {thr}")

        text = ph.get("required", "true")
        try:
            exprs[pid] = parse_expr(text)
        except ExprSyntaxError as exc:
            report.add("BAD_EXPR", pid, str(exc))

    for pid, expr in exprs.items():
        for ref in sorted(expr.phase_refs()):
            if ref not in known:
                report.add("UNKNOWN_PHASE", f"{pid}.required",
                           f"requirement references unknown phase {ref!r}")

    # parent-graph cycles (edges parent -> child, walked child -> parent is equivalent)
    parent_adj = {
        ph["id"]: [p for p in dict.fromkeys(ph.get("parents", [])) if p in known]
        for ph in phases if ph["id"] in known
    }
    for comp in _cycle_components(ids, parent_adj):
        report.add("PARENT_CYCLE", comp[0],
                   f"dependency cycle among phases {', '.join(comp)}")

    # requirement-reference cycles (expr of j references v(i): edge j -> i)
    ref_adj = {
        pid: sorted(r for r in expr.phase_refs() if r in known)
        for pid, expr in exprs.items()
    }
    for comp in _cycle_components(list(exprs), ref_adj):
        report.add("REQ_CYCLE", comp[0],
                   f"requirement references form a cycle among {', '.join(comp)}")

    total_edges = sum(len(set(ph.get("parents", []))) for ph in phases)
    crit_edges = sum(len(set(ph.get("critical_parents", []))) for ph in phases)
    if total_edges and crit_edges / total_edges > CRITICAL_FRACTION_LIMIT:
        report.add(
            "CRITICAL_FRACTION_HIGH", "phases",
            f"{crit_edges}/{total_edges} edges are critical "
            f"({crit_edges / total_edges:.0%}); keeping the critical subset small "
            f"(≤{CRITICAL_FRACTION_LIMIT:.0%}) focuses review on true safety edges",
            Severity.ADVISORY,
        )
    return report


def parse_catalog(doc) -> PhaseCatalog:
    """Parse and validate one catalog document.

    Raises DocumentSyntaxError on malformed input and LintError (carrying the
    exhaustive LintReport) when any lint rule fails.
    """
    doc = _structural(doc)
    report = lint_catalog(doc)
    if not report.ok():
        raise LintError(
            f"catalog failed lint with {len(report.errors)} error(s)",
            findings=report.findings,
        )
    phases: dict[str, PhaseDef] = {}
    rationales: dict[tuple[str, str], str] = {}
    for ph in doc["phases"]:
        pid = ph["id"]
        parents = tuple(dict.fromkeys(ph.get("parents", [])))
        criticals = tuple(dict.fromkeys(ph.get("critical_parents", [])))
        phases[pid] = PhaseDef(
            id=pid,
            title=ph.get("title", ""),
            rubric=ph.get("rubric", ""),
            parents=parents,
            critical_parents=criticals,
            precedence_policy=PrecedencePolicy(ph.get("precedence_policy", "strict")),
            ack_required=ph.get("ack_required", False),
            required_expr=parse_expr(ph.get("required", "true")),
            low_harm=ph.get("low_harm", False),
            graded_threshold=(
                float(ph["graded_threshold"])
                if ph.get("graded_threshold") is not None else None
            ),
        )
        for parent, text in ph.get("critical_rationale", {}).items():
            rationales[(parent, pid)] = text
    return PhaseCatalog(
        version=doc["version"],
        schema_rev=doc["schema_rev"],
        phases=phases,
        critical_edge_rationale=rationales,
        entry_roles=tuple(doc.get("entry_roles", list(VALID_ENTRY_ROLES))),
    )


def topological_order(catalog: PhaseCatalog) -> list[str]:
    """Order phase ids so every parent precedes every child.

    Deterministic: ties are broken by catalog declaration order.
    """
    parents_of = {pid: ph.parents for pid, ph in catalog.phases.items()}
    return _kahn(catalog.phase_ids(), parents_of)


def requirement_order(catalog: PhaseCatalog) -> list[str]:
    """Order phases so each is visited after every phase its requirement references."""
    refs_of = {
        pid: sorted(ph.required_expr.phase_refs())
        for pid, ph in catalog.phases.items()
    }
    return _kahn(catalog.phase_ids(), refs_of)


# --- serialization -----------------------------------------------------------


def catalog_to_doc(catalog: PhaseCatalog) -> dict:
    phases = []
    for ph in catalog.phases.values():
        phases.append({
            "id": ph.id,
            "title": ph.title,
            "rubric": ph.rubric,
            "parents": list(ph.parents),
            "critical_parents": list(ph.critical_parents),
            "critical_rationale": {
                parent: catalog.critical_edge_rationale.get((parent, ph.id), "")
                for parent in ph.critical_parents
            },
            "precedence_policy": ph.precedence_policy.value,
            "low_harm": ph.low_harm,
            "ack_required": ph.ack_required,
            "required": ph.required_expr.to_text(),
            "graded_threshold": ph.graded_threshold,
        })
    return {
        "version": catalog.version,
        "schema_rev": catalog.schema_rev,
        "entry_roles": list(catalog.entry_roles),
        "phases": phases,
    }


def serialize_catalog(catalog: PhaseCatalog) -> str:
    return json.dumps(catalog_to_doc(catalog), indent=2, ensure_ascii=False) + "\n"
