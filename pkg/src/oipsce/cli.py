"""Batch-first command line: lint, audit, batch, reaudit, report, serve.

Exit codes are a stable contract for CI: 0 success, 1 findings (lint
errors, unresolvable inputs, processing failures), 2 I/O or usage errors.
Audit output JSON is byte-identical across repeated runs on identical
inputs; ids and timestamps are minted only when a record enters a store.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .catalog import PhaseCatalog, lint_catalog, parse_catalog
from .dialogue import Dialogue, load_dialogue
from .errors import EngineError
from .findings import Severity
from .pipeline import AuditOutcome, evaluate_dialogue
from .reporting import build_review_queue, summarize_store
from .rows import VerdictEntry
from .store import AuditStore, canonical_json, result_from_outcome


@click.group()
@click.version_option(package_name="oipsce")
def main() -> None:
    """Phase-level compliance audits for multi-turn dialogues."""


def _fail(message: str, code: int = 1) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", 2)
        raise AssertionError("unreachable")


def _load_catalog(path: str) -> PhaseCatalog:
    try:
        return parse_catalog(_read_text(path))
    except EngineError as exc:
        _fail(_engine_error_text(exc))
        raise AssertionError("unreachable")


def _load_dialogue(path: str) -> Dialogue:
    try:
        return load_dialogue(_read_text(path))
    except EngineError as exc:
        _fail(_engine_error_text(exc))
        raise AssertionError("unreachable")


def _engine_error_text(exc: EngineError) -> str:
    lines = [f"{exc.code}: {exc}"]
    lines.extend(f"  [{f.severity.value}] {f.rule} at {f.location}: {f.message}"
                 for f in exc.findings)
    return "\n".join(lines)


@main.command("lint")
@click.argument("catalog_file", type=click.Path(exists=True, dir_okay=False))
def lint_cmd(catalog_file: str) -> None:
    """Lint a catalog; exit 0 when valid, 1 with findings when not."""
    try:
        report = lint_catalog(_read_text(catalog_file))
    except EngineError as exc:
        _fail(_engine_error_text(exc))
        return
    for f in report.findings:
        if f.severity is not Severity.ERROR:
            click.echo(f"{f.severity.value}: {f.rule} at {f.location}: {f.message}")
    if not report.ok():
        for f in report.errors:
            click.echo(f"error: {f.rule} at {f.location}: {f.message}", err=True)
        sys.exit(1)
    click.echo("OK")


def _verdicts_from_file(path: str) -> dict[str, VerdictEntry]:
    try:
        doc = json.loads(_read_text(path))
        return {pid: VerdictEntry.from_dict(entry) for pid, entry in doc.items()}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        _fail(f"SYNTAX: bad verdicts file {path}: {exc}")
        raise AssertionError("unreachable")


def _verdict_text(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"


def _verdict_word(ok: bool) -> str:
    # click strips the styling when stdout is not a terminal
    return click.style("PASS", fg="green") if ok else click.style("FAIL", fg="red")


def _edge_text(edge) -> str:
    symbol = "!<" if edge.policy.value == "strict" else "!<="
    return f"edge {edge.parent}→{edge.child}: e={edge.parent_finish} {symbol} s={edge.child_start}"


def _print_summary(dialogue: Dialogue, catalog: PhaseCatalog,
                   outcome: AuditOutcome) -> None:
    click.echo(f"Audit of dialogue {dialogue.id} against catalog {catalog.version}")
    width = max(len(row.phase_id) for row in outcome.rows)
    for row in outcome.rows:
        required = "yes" if row.required else "no"
        click.echo(f"  {row.phase_id:<{width}}  s={row.start!s:<4} "
                   f"e={row.finish!s:<4} v={_verdict_text(row.verdict):<4} "
                   f"required={required}")
    decision = outcome.decision
    click.echo(f"Coverage: {_verdict_word(decision.coverage)}")
    if decision.failing_phases:
        click.echo(f"  failing phases: {', '.join(decision.failing_phases)}")
    click.echo(f"OrderSafe: {_verdict_word(decision.order_safe)}")
    rows_by_id = {row.phase_id: row for row in outcome.rows}
    for edge in decision.failing_edges:
        click.echo(f"  {_edge_text(edge)}")
        for span in rows_by_id[edge.child].evidence[:2]:
            click.echo(f'    evidence: "{span.quote}" (turns {span.first}-{span.last})')
    detail = "" if decision.call_success or not decision.failing_edges \
        else f" ({_edge_text(decision.failing_edges[0])})"
    click.echo(f"CallSuccess: {_verdict_word(decision.call_success)}{detail}")


def _audit_doc(dialogue: Dialogue, catalog: PhaseCatalog,
               outcome: AuditOutcome) -> dict:
    # no store involved: leave id and timestamp empty so output is stable
    return result_from_outcome(outcome, dialogue.id, catalog.version).to_dict()


@main.command("audit")
@click.option("--catalog", "catalog_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dialogue", "dialogue_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--verdicts", "verdicts_file", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", default=None, type=click.Path(dir_okay=False))
def audit_cmd(catalog_file: str, dialogue_file: str,
              verdicts_file: str | None, out_file: str | None) -> None:
    """Audit one dialogue against one catalog and print the row summary."""
    catalog = _load_catalog(catalog_file)
    dialogue = _load_dialogue(dialogue_file)
    verdicts = _verdicts_from_file(verdicts_file) if verdicts_file else None
    try:
        outcome = evaluate_dialogue(catalog, dialogue, verdicts)
    except EngineError as exc:
        _fail(_engine_error_text(exc))
        return
    for warning in outcome.warnings:
        click.echo(f"warning: {warning.rule} at {warning.location}: "
                   f"{warning.message}", err=True)
    if out_file:
        Path(out_file).write_text(
            json.dumps(_audit_doc(dialogue, catalog, outcome),
                       indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8")
    _print_summary(dialogue, catalog, outcome)


@main.command("batch")
@click.option("--catalog", "catalog_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dialogues", "dialogues_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", default=1, show_default=True,
              help="Dialogues processed in parallel; store writes stay serialized.")
def batch_cmd(catalog_file: str, dialogues_dir: str, store_dir: str, jobs: int) -> None:
    """Audit every transcript in a directory into a store."""
    catalog = _load_catalog(catalog_file)
    store = AuditStore(store_dir)
    store.ensure_catalog(catalog)
    files = sorted(Path(dialogues_dir).glob("*.json"))
    if not files:
        click.echo("0 dialogues")
        return

    failures: list[str] = []

    def process(path: Path) -> str:
        dialogue = load_dialogue(path.read_text(encoding="utf-8"))
        result = store.record_audit(catalog, dialogue)
        verdict = "PASS" if result.decision.call_success else "FAIL"
        return f"{dialogue.id}: {verdict} ({result.audit_id})"

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {path: pool.submit(process, path) for path in files}
    for path, future in futures.items():
        try:
            click.echo(future.result())
        except EngineError as exc:
            failures.append(path.name)
            click.echo(f"{path.name}: {exc.code}: {exc}", err=True)
    click.echo(f"{len(files) - len(failures)}/{len(files)} dialogues audited "
               f"into {store_dir}")
    if failures:
        sys.exit(1)


@main.command("reaudit")
@click.option("--store", "store_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--catalog", "catalog_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
def reaudit_cmd(store_dir: str, catalog_file: str) -> None:
    """Re-audit every dialogue in the store under a catalog."""
    catalog = _load_catalog(catalog_file)
    store = AuditStore(store_dir)
    dialogue_ids = store.dialogue_ids()
    if not dialogue_ids:
        click.echo("0 dialogues")
        return
    old = {did: store.get(store.latest_audit_id(did)) for did in dialogue_ids}
    try:
        results = store.reaudit(dialogue_ids, catalog)
    except EngineError as exc:
        _fail(_engine_error_text(exc))
        return
    identical = 0
    for result in results:
        before = old[result.dialogue_id].decision.to_dict()
        after = result.decision.to_dict()
        same = canonical_json(before) == canonical_json(after)
        identical += same
        click.echo(f"{result.dialogue_id}: "
                   f"{'identical' if same else 'CHANGED'} ({result.audit_id})")
    pct = 100 * identical / len(results)
    click.echo(f"{identical}/{len(results)} decisions identical ({pct:.0f}%) "
               f"under catalog {catalog.version}")


@main.command("report")
@click.option("--store", "store_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
def report_cmd(store_dir: str) -> None:
    """Aggregate table over the latest audit of every dialogue."""
    store = AuditStore(store_dir)
    summary = summarize_store(store)
    click.echo(f"{summary['dialogues']} dialogues")
    if not summary["dialogues"]:
        return
    click.echo(f"CallSuccess rate: {summary['call_success_rate']:.0%} "
               f"(coverage {summary['coverage_rate']:.0%}, "
               f"order-safe {summary['order_safe_rate']:.0%})")
    if summary["phase_failure_rates"]:
        click.echo("Per-phase failure rates (required rows):")
        for pid, rate in summary["phase_failure_rates"].items():
            click.echo(f"  {pid}: {rate:.0%}")
    cds = summary["cds"]
    if cds["mean"] is not None:
        values = ", ".join(f"{v:.2f}" for v in cds["values"])
        click.echo(f"CDS: mean {cds['mean']:.2f} (values: {values})")
    click.echo(f"Review queue: {summary['review_queue_size']} item(s)")
    click.echo(f"Catalogs: {', '.join(summary['catalog_versions'])}")


@main.command("queue")
@click.option("--store", "store_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
def queue_cmd(store_dir: str) -> None:
    """List review-queue items derived from the latest audits."""
    store = AuditStore(store_dir)
    items = build_review_queue(store)
    for item in items:
        click.echo(f"{item.audit_id} {item.phase_id} {item.reason.value}: "
                   f"{item.excerpt.note or item.excerpt.quote}")
    click.echo(f"{len(items)} item(s)")


@main.command("serve")
@click.option("--store", "store_dir", default=None, type=click.Path(file_okay=False))
@click.option("--bind", "bind_addr", default=None,
              help="host:port; defaults to OIPSCE_BIND_ADDR or 127.0.0.1:8400")
def serve_cmd(store_dir: str | None, bind_addr: str | None) -> None:
    """Run the HTTP service."""
    import os

    import uvicorn

    from .service import create_app

    bind = bind_addr or os.environ.get("OIPSCE_BIND_ADDR", "127.0.0.1:8400")
    host, _, port = bind.rpartition(":")
    uvicorn.run(create_app(store_dir), host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
