"""Regenerate test/fixtures/*.json from the real service.

Run from the repository root (engine installed):

    python3 frontend/scripts/capture_fixtures.py

Two throwaway stores keep every captured sequence legal: overrides must
target a chain's head, so the override capture and the re-audit capture
each start from their own fresh audit.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from oipsce.service import create_app

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "frontend" / "test" / "fixtures"
DATA = ROOT / "tests" / "data"


def write(name: str, doc) -> None:
    (OUT / name).write_text(json.dumps(doc, indent=2, ensure_ascii=False),
                            encoding="utf-8")
    print("captured", name)


def fresh_client(tag: str) -> TestClient:
    root = Path(tempfile.gettempdir()) / f"console-fixtures-{tag}"
    shutil.rmtree(root, ignore_errors=True)
    return TestClient(create_app(store_dir=root))


def main() -> int:
    catalog = json.loads((DATA / "catalog_case_b.json").read_text())
    dialogue = json.loads((DATA / "dialogue_case_b.json").read_text())

    edited = json.loads(json.dumps(catalog))
    edited["version"] = "bv-console-edit"
    for ph in edited["phases"]:
        if ph["id"] in ("CSV", "DRC"):
            ph["critical_parents"] = []
            ph["critical_rationale"] = {}

    # store 1: audit -> queue -> override (the audit is still the chain head)
    client = fresh_client("override")
    assert client.post("/catalogs", json=catalog).status_code == 201
    audit = client.post("/audits", json={
        "dialogue": dialogue, "catalog_version": catalog["version"]}).json()
    write("audit_record_case_b.json",
          client.get(f"/audits/{audit['audit_id']}").json())
    write("review_queue.json", client.get("/review-queue").json())
    override = client.post(f"/audits/{audit['audit_id']}/overrides", json={
        "phase_id": "DCC", "new_verdict": 0, "reviewer": "dr-reviewer",
        "rationale": "copay quote belongs to the restricted drug"}).json()
    assert override["supersedes"] == audit["audit_id"]
    write("override_response.json", override)

    # store 2: audit -> re-audit under the edited catalog (supersedes the audit)
    client = fresh_client("reaudit")
    assert client.post("/catalogs", json=catalog).status_code == 201
    audit2 = client.post("/audits", json={
        "dialogue": dialogue, "catalog_version": catalog["version"]}).json()
    write("audit_case_b.json", audit2)
    assert client.post("/catalogs", json=edited).status_code == 201
    reaudit = client.post("/reaudits", json={
        "dialogue_ids": [dialogue["id"]],
        "catalog_version": edited["version"]}).json()
    assert reaudit["results"][0]["supersedes"] == audit2["audit_id"]
    assert reaudit["results"][0]["decision"]["order_safe"] is True
    write("reaudit_response.json", reaudit)

    # lint payloads and the catalog documents themselves
    write("catalog_case_b.json", catalog)
    write("catalog_edited.json", edited)
    write("lint_ok.json", client.post("/lint", json=catalog).json())
    cyclic = json.loads(json.dumps(catalog))
    cyclic["phases"][0]["required"] = "v(CSV)"
    lint = client.post("/lint", json=cyclic).json()
    assert any(f["rule"] == "REQ_CYCLE" for f in lint["findings"])
    write("lint_req_cycle.json", lint)
    return 0


if __name__ == "__main__":
    sys.exit(main())
