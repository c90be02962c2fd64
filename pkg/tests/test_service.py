from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from conftest import read_json
from oipsce.service import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(store_dir=tmp_path / "store")
    return TestClient(app)


@pytest.fixture
def client_with_case_b(client):
    assert client.post("/catalogs", json=read_json("catalog_case_b.json")).status_code == 201
    response = client.post("/audits", json={
        "dialogue": read_json("dialogue_case_b.json"),
        "catalog_version": "bv-2025.08",
    })
    assert response.status_code == 201
    return client, response.json()


class TestCatalogEndpoints:
    def test_post_valid_catalog(self, client):
        response = client.post("/catalogs", json=read_json("catalog_case_b.json"))
        assert response.status_code == 201
        assert response.json()["version"] == "bv-2025.08"

    def test_post_cyclic_catalog_is_422_with_finding(self, client):
        doc = {
            "version": "cyclic-1", "schema_rev": 1,
            "phases": [
                {"id": "A", "required": "v(B)"},
                {"id": "B", "required": "v(A)"},
            ],
        }
        response = client.post("/catalogs", json=doc)
        assert response.status_code == 422
        body = response.json()
        assert body["error"] == "LINT"
        assert any(f["rule"] == "REQ_CYCLE" for f in body["findings"])

    def test_duplicate_version_is_409(self, client):
        doc = read_json("catalog_case_b.json")
        assert client.post("/catalogs", json=doc).status_code == 201
        response = client.post("/catalogs", json=doc)
        assert response.status_code == 409
        assert response.json()["error"] == "DUPLICATE_VERSION"

    def test_lint_endpoint_reports_without_storing(self, client):
        doc = {"version": "x", "schema_rev": 1,
               "phases": [{"id": "A", "parents": ["NOPE"]}]}
        response = client.post("/lint", json=doc)
        assert response.status_code == 200
        assert not response.json()["ok"]
        assert client.get("/catalogs").json()["versions"] == []

    def test_get_catalog_round_trip(self, client):
        doc = read_json("catalog_case_b.json")
        client.post("/catalogs", json=doc)
        fetched = client.get("/catalogs/bv-2025.08")
        assert fetched.status_code == 200
        assert fetched.json()["version"] == "bv-2025.08"
        assert client.get("/catalogs/missing").status_code == 404


class TestAuditEndpoints:
    def test_case_b_audit(self, client_with_case_b):
        _, body = client_with_case_b
        assert body["decision"]["coverage"] is True
        assert body["decision"]["order_safe"] is False
        assert body["decision"]["call_success"] is False
        assert body["catalog_version"] == "bv-2025.08"
        assert body["audit_id"]

    def test_unknown_catalog_is_404(self, client):
        response = client.post("/audits", json={
            "dialogue": read_json("dialogue_case_b.json"),
            "catalog_version": "missing",
        })
        assert response.status_code == 404
        assert response.json()["error"] == "UNKNOWN_CATALOG"

    def test_invalid_dialogue_is_422(self, client):
        client.post("/catalogs", json=read_json("catalog_case_b.json"))
        response = client.post("/audits", json={
            "dialogue": {"id": "bad", "turns": []},
            "catalog_version": "bv-2025.08",
        })
        assert response.status_code == 422

    def test_broken_signal_is_422(self, client):
        client.post("/catalogs", json=read_json("catalog_case_b.json"))
        response = client.post("/audits", json={
            "dialogue": {
                "id": "bad-signal",
                "turns": [{"t": 0, "role": "user", "text": "hello"}],
                "signals": [{"phase": "PID", "kind": "attempt", "turn": 9}],
            },
            "catalog_version": "bv-2025.08",
        })
        assert response.status_code == 422
        assert response.json()["error"] == "LINT"

    def test_empty_dialogue_fails_coverage(self, client):
        client.post("/catalogs", json=read_json("catalog_case_b.json"))
        response = client.post("/audits", json={
            "dialogue": {"id": "quiet",
                         "turns": [{"t": 0, "role": "user", "text": "hi"}]},
            "catalog_version": "bv-2025.08",
        })
        assert response.status_code == 201
        body = response.json()
        assert body["decision"]["coverage"] is False
        # PID and CRN are unconditionally required
        assert set(body["decision"]["failing_phases"]) == {"PID", "CRN"}

    def test_get_audit_includes_dialogue(self, client_with_case_b):
        client, body = client_with_case_b
        fetched = client.get(f"/audits/{body['audit_id']}")
        assert fetched.status_code == 200
        record = fetched.json()
        assert record["audit"]["audit_id"] == body["audit_id"]
        assert record["dialogue"]["id"] == "case-b-benefits-001"

    def test_list_audits(self, client_with_case_b):
        client, body = client_with_case_b
        listing = client.get("/audits").json()["audits"]
        assert [a["audit_id"] for a in listing] == [body["audit_id"]]


class TestReaudits:
    def test_reaudit_under_stored_catalog(self, client_with_case_b):
        client, body = client_with_case_b
        response = client.post("/reaudits", json={
            "dialogue_ids": ["case-b-benefits-001"],
            "catalog_version": "bv-2025.08",
        })
        assert response.status_code == 200
        results = response.json()["results"]
        assert len(results) == 1
        assert results[0]["supersedes"] == body["audit_id"]
        assert results[0]["decision"] == body["decision"]

    def test_reaudit_unknown_dialogue_is_404(self, client_with_case_b):
        client, _ = client_with_case_b
        response = client.post("/reaudits", json={
            "dialogue_ids": ["missing"], "catalog_version": "bv-2025.08"})
        assert response.status_code == 404


class TestReviewQueue:
    def test_case_b_store_enqueues_critical_edge_fail(self, client_with_case_b):
        client, body = client_with_case_b
        items = client.get("/review-queue").json()["items"]
        edge_items = [i for i in items if i["reason"] == "critical_edge_fail"]
        assert any(i["phase_id"] == "CSV" and "PID→CSV" in i["excerpt"]["note"]
                   for i in edge_items)
        assert all(i["audit_id"] == body["audit_id"] for i in items)
        assert all(i["catalog_version"] == "bv-2025.08" for i in items)

    def test_empty_store_empty_queue(self, client):
        assert client.get("/review-queue").json()["items"] == []


class TestOverrides:
    def test_override_returns_superseding_result(self, client_with_case_b):
        client, body = client_with_case_b
        response = client.post(f"/audits/{body['audit_id']}/overrides", json={
            "phase_id": "DCC", "new_verdict": 0,
            "reviewer": "dr-x", "rationale": "copay quote was for the wrong drug",
        })
        assert response.status_code == 201
        superseding = response.json()
        assert superseding["supersedes"] == body["audit_id"]
        assert superseding["overrides"][-1]["phase_id"] == "DCC"

    def test_empty_rationale_is_422(self, client_with_case_b):
        client, body = client_with_case_b
        response = client.post(f"/audits/{body['audit_id']}/overrides", json={
            "phase_id": "DCC", "new_verdict": 0, "reviewer": "x", "rationale": "",
        })
        assert response.status_code == 422
        assert response.json()["error"] == "RATIONALE_REQUIRED"

    def test_override_on_missing_audit_is_404(self, client):
        response = client.post("/audits/a-nope/overrides", json={
            "phase_id": "DCC", "new_verdict": 0, "reviewer": "x", "rationale": "y",
        })
        assert response.status_code == 404

    def test_override_on_superseded_audit_is_409(self, client_with_case_b):
        client, body = client_with_case_b
        first = client.post(f"/audits/{body['audit_id']}/overrides", json={
            "phase_id": "DCC", "new_verdict": 0, "reviewer": "x", "rationale": "r1"})
        assert first.status_code == 201
        again = client.post(f"/audits/{body['audit_id']}/overrides", json={
            "phase_id": "CRN", "new_verdict": 0, "reviewer": "x", "rationale": "r2"})
        assert again.status_code == 409
        assert again.json()["error"] == "SUPERSEDED_AUDIT"


class TestReport:
    def test_report_counts_case_b(self, client_with_case_b):
        client, _ = client_with_case_b
        report = client.get("/report").json()
        assert report["dialogues"] == 1
        assert report["call_success_rate"] == 0.0
        assert report["cds"]["values"] == [pytest.approx(1 / 3)]
        assert report["review_queue_size"] >= 1
        assert report["catalog_versions"] == ["bv-2025.08"]

    def test_report_on_empty_store(self, client):
        report = client.get("/report").json()
        assert report["dialogues"] == 0


class TestAuth:
    def test_token_required_when_configured(self, tmp_path):
        app = create_app(store_dir=tmp_path / "s", token="sesame")
        client = TestClient(app)
        assert client.get("/report").status_code == 401
        ok = client.get("/report", headers={"Authorization": "Bearer sesame"})
        assert ok.status_code == 200
