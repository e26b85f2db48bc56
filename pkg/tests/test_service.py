import json
import threading

import pytest

from conftest import DEVICES, USERS, login, make_service
from fastapi.testclient import TestClient

from wattiq.service.storage import DuplicateRecordError, RecordStore, StoreLockedError

BASE = 1_700_000_000


def wire(device_id="desk-01", api_key="k-desk-01", ts=BASE, **overrides):
    body = {
        "device_id": device_id,
        "api_key": api_key,
        "ts": ts,
        "vrms": 222.0,
        "irms": 7.4,
        "power": 1642.8,
        "temp": 24.4,
        "humidity": 55.6,
        "co2": 566,
        "suspect": False,
    }
    body.update(overrides)
    return body


class TestIngest:
    def test_valid_record_stored(self, service_client):
        resp = service_client.post("/api/v1/telemetry", json=wire())
        assert resp.status_code == 200
        assert resp.json() == {"ok": True}
        assert service_client.app.state.store.count("desk-01") == 1

    def test_replay_is_idempotent_duplicate(self, service_client):
        assert service_client.post("/api/v1/telemetry", json=wire()).status_code == 200
        resp = service_client.post("/api/v1/telemetry", json=wire())
        assert resp.status_code == 409
        assert resp.json()["error"] == "duplicate"
        assert service_client.app.state.store.count("desk-01") == 1

    def test_missing_field_names_it(self, service_client):
        body = wire()
        del body["co2"]
        resp = service_client.post("/api/v1/telemetry", json=body)
        assert resp.status_code == 400
        assert resp.json()["field"] == "co2"

    def test_unknown_field_rejected(self, service_client):
        resp = service_client.post("/api/v1/telemetry", json=wire(extra_field=1))
        assert resp.status_code == 400

    def test_non_finite_number_rejected(self, service_client):
        raw = json.dumps(wire()).replace("222.0", "Infinity")
        resp = service_client.post(
            "/api/v1/telemetry", content=raw, headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400
        assert resp.json()["field"] == "vrms"

    def test_malformed_body_rejected(self, service_client):
        resp = service_client.post(
            "/api/v1/telemetry", content="if in doubt", headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400

    def test_wrong_api_key_unauthorized(self, service_client):
        resp = service_client.post("/api/v1/telemetry", json=wire(api_key="nope"))
        assert resp.status_code == 401

    def test_unknown_device_unauthorized(self, service_client):
        resp = service_client.post("/api/v1/telemetry", json=wire(device_id="ghost", api_key="k"))
        assert resp.status_code == 401

    def test_concurrent_ingest_preserves_per_device_order(self, service_client):
        seen = []
        engine = service_client.app.state.engine
        original = engine.process

        def spy(record):
            seen.append((record.device_id, record.ts))
            return original(record)

        engine.process = spy
        errors = []

        def pump(device_id, api_key):
            for k in range(40):
                resp = service_client.post(
                    "/api/v1/telemetry", json=wire(device_id, api_key, ts=BASE + k)
                )
                if resp.status_code != 200:
                    errors.append(resp.status_code)

        threads = [
            threading.Thread(target=pump, args=(cred.device_id, cred.api_key)) for cred in DEVICES
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        for cred in DEVICES:
            ts_seen = [ts for device_id, ts in seen if device_id == cred.device_id]
            assert ts_seen == sorted(ts_seen)
        store = service_client.app.state.store
        for cred in DEVICES:
            seqs = [r.ingest_sequence for r in store.scan(cred.device_id)]
            assert seqs == sorted(seqs)


class TestSeries:
    def fill(self, client, n=30):
        for k in range(n):
            assert client.post("/api/v1/telemetry", json=wire(ts=BASE + k, vrms=222.0 + k)).status_code == 200

    def test_full_range_ascending(self, service_client):
        self.fill(service_client)
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": BASE, "to": BASE + 29},
            headers=headers,
        )
        assert resp.status_code == 200
        points = resp.json()["points"]
        assert len(points) == 30
        assert points == sorted(points)

    def test_trimmed_range(self, service_client):
        self.fill(service_client)
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": BASE + 10, "to": BASE + 19},
            headers=headers,
        )
        assert len(resp.json()["points"]) == 10

    def test_empty_range(self, service_client):
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": BASE, "to": BASE},
            headers=headers,
        )
        assert resp.json()["points"] == []

    def test_unknown_metric_is_validation_failure(self, service_client):
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "frequency", "from": 0, "to": 1},
            headers=headers,
        )
        assert resp.status_code == 400

    def test_inverted_range_is_validation_failure(self, service_client):
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": 10, "to": 5},
            headers=headers,
        )
        assert resp.status_code == 400

    def test_missing_token_unauthorized(self, service_client):
        resp = service_client.get(
            "/api/v1/series", params={"device": "desk-01", "metric": "vrms", "from": 0, "to": 1}
        )
        assert resp.status_code == 401

    def test_other_users_device_unauthorized(self, service_client):
        headers = login(service_client, "bob", "builder")
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": 0, "to": 1},
            headers=headers,
        )
        assert resp.status_code == 401


class TestAuth:
    def test_login_and_query(self, service_client):
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/series",
            params={"device": "desk-01", "metric": "vrms", "from": 0, "to": 1},
            headers=headers,
        )
        assert resp.status_code == 200

    def test_wrong_password_uniform_failure(self, service_client):
        r1 = service_client.post("/api/v1/login", json={"username": "alice", "password": "x"})
        r2 = service_client.post("/api/v1/login", json={"username": "nobody", "password": "x"})
        assert r1.status_code == r2.status_code == 401
        assert r1.json() == r2.json()

    def test_expired_token_rejected(self, tmp_path):
        fake_now = {"t": 1000.0}
        app = make_service(tmp_path / "data", session_clock=lambda: fake_now["t"], ttl=3600.0)
        with TestClient(app) as client:
            headers = login(client)
            params = {"device": "desk-01", "metric": "vrms", "from": 0, "to": 1}
            assert client.get("/api/v1/series", params=params, headers=headers).status_code == 200
            fake_now["t"] += 3601.0
            assert client.get("/api/v1/series", params=params, headers=headers).status_code == 401

    def test_login_response_carries_expiry(self, service_client):
        resp = service_client.post(
            "/api/v1/login", json={"username": "alice", "password": "wonderland"}
        )
        body = resp.json()
        assert set(body) == {"token", "expires"}


class TestNotificationsEndpoint:
    def test_requires_auth_and_ownership(self, service_client):
        assert service_client.get("/api/v1/notifications", params={"device": "desk-01"}).status_code == 401
        headers = login(service_client, "bob", "builder")
        resp = service_client.get(
            "/api/v1/notifications", params={"device": "desk-01"}, headers=headers
        )
        assert resp.status_code == 401

    def test_swell_record_produces_visible_alert(self, service_client):
        service_client.post("/api/v1/telemetry", json=wire(vrms=230.0))
        headers = login(service_client)
        resp = service_client.get(
            "/api/v1/notifications", params={"device": "desk-01"}, headers=headers
        )
        notifications = resp.json()["notifications"]
        assert len(notifications) == 1
        assert notifications[0]["kind"] == "alert"
        assert "check the power system" in notifications[0]["body"]


class TestRulesEndpoint:
    def test_rules_projection(self, service_client):
        headers = login(service_client)
        resp = service_client.get("/api/v1/rules", headers=headers)
        assert resp.status_code == 200
        body = resp.json()
        assert body["swell_threshold_v"] == 225.0
        assert body["sag_threshold_v"] == 219.0

    def test_rules_require_session(self, service_client):
        assert service_client.get("/api/v1/rules").status_code == 401


class TestDurability:
    def test_restart_returns_identical_results(self, tmp_path):
        storage = tmp_path / "data"
        app = make_service(storage)
        params = {"device": "desk-01", "metric": "power", "from": BASE, "to": BASE + 50}
        with TestClient(app) as client:
            for k in range(40):
                client.post("/api/v1/telemetry", json=wire(ts=BASE + k, power=1642.8 + k / 7.0))
            before = client.get("/api/v1/series", params=params, headers=login(client)).content
        app2 = make_service(storage)
        with TestClient(app2) as client:
            after = client.get("/api/v1/series", params=params, headers=login(client)).content
        assert before == after

    def test_second_instance_on_same_storage_refuses(self, tmp_path):
        storage = tmp_path / "data"
        store = RecordStore(storage)
        with pytest.raises(StoreLockedError):
            RecordStore(storage)
        store.close()
        RecordStore(storage).close()  # released lock can be re-acquired

    def test_store_never_mutates_acknowledged_records(self, tmp_path):
        store = RecordStore(tmp_path / "data")
        values = {"vrms": 222.0, "irms": 1.0, "power": 222.0, "temp": 24.0, "humidity": 50.0, "co2": 600}
        store.append("desk-01", BASE, values, False)
        with pytest.raises(DuplicateRecordError):
            store.append("desk-01", BASE, dict(values, vrms=300.0), False)
        assert store.scan("desk-01")[0].vrms == 222.0
        store.close()
