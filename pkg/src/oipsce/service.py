"""HTTP facade over the engine: lint, audit, re-audit, review queue, report.

Stateless above the store: every response is a function of the request and
the store contents, and every response names the catalog version it used.
Configuration comes from flags or the environment: OIPSCE_STORE_DIR,
OIPSCE_BIND_ADDR, OIPSCE_TRIAGE_CONF, and optionally OIPSCE_TOKEN for a
static bearer token.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .catalog import lint_catalog, parse_catalog, catalog_to_doc
from .dialogue import dialogue_to_doc, load_dialogue
from .errors import DocumentSyntaxError, EngineError
from .pipeline import evaluate_dialogue
from .reporting import DEFAULT_CONFIDENCE_THRESHOLD, build_review_queue, summarize_store
from .rows import VerdictEntry
from .store import AuditStore, OverrideRecord

_STATUS_BY_CODE = {
    "SYNTAX": 422,
    "LINT": 422,
    "EMPTY": 422,
    "MISSING_EVIDENCE": 422,
    "INVALID_VERDICT": 422,
    "EVIDENCE_RANGE": 422,
    "RULE_CONFLICT": 422,
    "RATIONALE_REQUIRED": 422,
    "UNKNOWN_PHASE": 422,
    "UNKNOWN_CATALOG": 404,
    "UNKNOWN_DIALOGUE": 404,
    "UNKNOWN_AUDIT": 404,
    "DUPLICATE_VERSION": 409,
    "DUPLICATE_ID": 409,
    "DECISION_MISMATCH": 409,
    "SUPERSEDED_AUDIT": 409,
}


def _parse_verdicts(doc) -> dict[str, VerdictEntry]:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise DocumentSyntaxError("'verdicts' must map phase ids to {v, evidence}")
    try:
        return {pid: VerdictEntry.from_dict(entry) for pid, entry in doc.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentSyntaxError(f"bad verdicts document: {exc}") from exc


def create_app(store_dir: str | Path | None = None,
               triage_conf: float | None = None,
               token: str | None = None) -> FastAPI:
    store_dir = store_dir or os.environ.get("OIPSCE_STORE_DIR", "store")
    if triage_conf is None:
        triage_conf = float(os.environ.get(
            "OIPSCE_TRIAGE_CONF", DEFAULT_CONFIDENCE_THRESHOLD))
    token = token if token is not None else os.environ.get("OIPSCE_TOKEN")

    store = AuditStore(store_dir)
    app = FastAPI(title="oipsce", version="0.1.0")

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content=exc.to_dict(),
        )

    @app.middleware("http")
    async def bearer_auth(request: Request, call_next):
        if token and request.headers.get("authorization") != f"Bearer {token}":
            return JSONResponse(status_code=401, content={"error": "UNAUTHORIZED"})
        return await call_next(request)

    @app.post("/lint")
    async def lint(doc: dict):
        return lint_catalog(doc).to_dict()

    @app.post("/catalogs", status_code=201)
    async def create_catalog(doc: dict):
        catalog = parse_catalog(doc)
        report = lint_catalog(doc)
        store.put_catalog(catalog)
        return {
            "version": catalog.version,
            "findings": [f.to_dict() for f in report.findings],
        }

    @app.get("/catalogs")
    async def list_catalogs():
        return {"versions": store.catalog_versions()}

    @app.get("/catalogs/{version}")
    async def get_catalog(version: str):
        return catalog_to_doc(store.get_catalog(version))

    @app.post("/audits", status_code=201)
    async def create_audit(body: dict):
        if "dialogue" not in body or "catalog_version" not in body:
            raise DocumentSyntaxError("body needs 'dialogue' and 'catalog_version'")
        catalog = store.get_catalog(str(body["catalog_version"]))
        dialogue = load_dialogue(body["dialogue"])
        verdicts = _parse_verdicts(body.get("verdicts"))
        result = store.record_audit(catalog, dialogue, verdicts)
        return result.to_dict()

    @app.get("/audits")
    async def list_audits():
        return {"audits": [
            {
                "audit_id": r.audit_id,
                "dialogue_id": r.dialogue_id,
                "catalog_version": r.catalog_version,
                "created_at": r.created_at,
                "call_success": r.decision.call_success,
                "supersedes": r.supersedes,
            }
            for r in store.all_results()
        ]}

    @app.get("/audits/{audit_id}")
    async def get_audit(audit_id: str):
        result, inputs = store.get_record(audit_id)
        return {
            "audit": result.to_dict(),
            "dialogue": dialogue_to_doc(inputs.dialogue),
        }

    @app.post("/reaudits")
    async def reaudit(body: dict):
        if "dialogue_ids" not in body or "catalog_version" not in body:
            raise DocumentSyntaxError("body needs 'dialogue_ids' and 'catalog_version'")
        catalog = store.get_catalog(str(body["catalog_version"]))
        results = store.reaudit(list(body["dialogue_ids"]), catalog)
        return {
            "catalog_version": catalog.version,
            "results": [r.to_dict() for r in results],
        }

    @app.get("/review-queue")
    async def review_queue():
        items = build_review_queue(store, triage_conf)
        return {"items": [item.to_dict() for item in items]}

    @app.post("/audits/{audit_id}/overrides", status_code=201)
    async def post_override(audit_id: str, body: dict):
        previous = store.get(audit_id)
        phase_id = body.get("phase_id", "")
        old = body.get("old_verdict")
        if old is None:
            matching = [r.verdict for r in previous.rows if r.phase_id == phase_id]
            old = matching[0] if matching else 0
        override = OverrideRecord(
            phase_id=phase_id,
            old_verdict=old,
            new_verdict=body.get("new_verdict", 0),
            reviewer=body.get("reviewer", ""),
            rationale=body.get("rationale", ""),
        )
        result = store.apply_override(audit_id, override)
        return result.to_dict()

    @app.get("/report")
    async def report():
        return summarize_store(store, triage_conf)

    return app


def main() -> None:
    """Entry point for running the service directly (uvicorn)."""
    import uvicorn

    bind = os.environ.get("OIPSCE_BIND_ADDR", "127.0.0.1:8400")
    host, _, port = bind.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
