"""FastAPI application: ingestion, queries, login, notifications, rules."""

from __future__ import annotations

import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..insights import InsightEngine, Outbox, RuleSet, ruleset_from_dict
from .auth import ApiCredential, AuthRegistry, SessionManager, UserAccount
from .models import (
    IngestOk,
    LoginIn,
    LoginOut,
    NotificationOut,
    NotificationsOut,
    RulesOut,
    SeriesOut,
    TelemetryIn,
)
from .storage import METRICS, DuplicateRecordError, RecordStore, valid_device_id


@dataclass
class ServiceConfig:
    storage_dir: Path
    users: list[tuple[str, str]] = field(default_factory=list)
    devices: list[ApiCredential] = field(default_factory=list)
    rules: RuleSet = field(default_factory=RuleSet)
    session_ttl_s: float = 86400.0
    host: str = "127.0.0.1"
    port: int = 8800
    dashboard_dir: Path | None = None

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        known = {
            "storage_dir",
            "users",
            "devices",
            "rules",
            "session_ttl_s",
            "host",
            "port",
            "dashboard_dir",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown service config keys: {sorted(unknown)}")
        users = [(u["username"], u["password"]) for u in raw.get("users", [])]
        devices = [
            ApiCredential(d["device_id"], d["api_key"], d.get("owner", "owner"))
            for d in raw.get("devices", [])
        ]
        for cred in devices:
            if not valid_device_id(cred.device_id):
                raise ValueError(f"device_id {cred.device_id!r} has unsafe characters")
        return cls(
            storage_dir=Path(raw["storage_dir"]),
            users=users,
            devices=devices,
            rules=ruleset_from_dict(raw.get("rules", {})),
            session_ttl_s=raw.get("session_ttl_s", 86400.0),
            host=raw.get("host", "127.0.0.1"),
            port=raw.get("port", 8800),
            dashboard_dir=Path(raw["dashboard_dir"]) if raw.get("dashboard_dir") else None,
        )


def _error(status: int, error: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"ok": False, "error": error, **extra})


def create_app(config: ServiceConfig, session_clock=time.time) -> FastAPI:
    store = RecordStore(config.storage_dir)
    outbox = Outbox(Path(config.storage_dir) / "notifications.jsonl")
    registry = AuthRegistry(
        users=[UserAccount.from_password(name, pw) for name, pw in config.users],
        credentials=config.devices,
    )
    engine = InsightEngine(
        config.rules, outbox, store=store, recipients=registry.recipients()
    )
    sessions = SessionManager(ttl_s=config.session_ttl_s, clock=session_clock)
    ingest_lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        engine.finalize()
        store.close()

    app = FastAPI(title="wattiq telemetry service", lifespan=lifespan)
    app.state.store = store
    app.state.engine = engine
    app.state.outbox = outbox
    app.state.sessions = sessions
    app.state.registry = registry
    app.state.config = config

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        loc = exc.errors()[0].get("loc", ())
        parts = [str(p) for p in loc if p not in ("body", "query", "path")]
        return _error(400, "validation", field=parts[0] if parts else "body")

    def session_user(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            return None
        return sessions.resolve(header[7:].strip())

    @app.get("/api/v1/health")
    def health():
        return {"ok": True}

    @app.post("/api/v1/telemetry", response_model=IngestOk)
    def ingest(body: TelemetryIn):
        if not valid_device_id(body.device_id) or not registry.check_api_key(
            body.device_id, body.api_key
        ):
            return _error(401, "auth")
        values = {
            "vrms": body.vrms,
            "irms": body.irms,
            "power": body.power,
            "temp": body.temp,
            "humidity": body.humidity,
            "co2": body.co2,
        }
        with ingest_lock:
            try:
                stored = store.append(body.device_id, body.ts, values, body.suspect)
            except DuplicateRecordError:
                return _error(409, "duplicate")
            engine.process(stored.to_telemetry())
        return IngestOk()

    @app.post("/api/v1/login", response_model=LoginOut)
    def login(body: LoginIn):
        if not registry.authenticate(body.username, body.password):
            return _error(401, "auth")
        token, expires = sessions.create(body.username)
        return LoginOut(token=token, expires=expires)

    @app.get("/api/v1/series", response_model=SeriesOut)
    def series(
        request: Request,
        device: str,
        metric: str,
        from_ts: int = Query(alias="from"),
        to_ts: int = Query(alias="to"),
    ):
        user = session_user(request)
        if user is None or not registry.owns(user, device):
            return _error(401, "auth")
        if metric not in METRICS:
            return _error(400, "validation", field="metric")
        if from_ts > to_ts:
            return _error(400, "validation", field="from")
        return SeriesOut(points=store.query_series(device, metric, from_ts, to_ts))

    @app.get("/api/v1/notifications", response_model=NotificationsOut)
    def notifications(
        request: Request,
        device: str,
        from_ts: int | None = Query(default=None, alias="from"),
        to_ts: int | None = Query(default=None, alias="to"),
    ):
        user = session_user(request)
        if user is None or not registry.owns(user, device):
            return _error(401, "auth")
        if from_ts is not None and to_ts is not None and from_ts > to_ts:
            return _error(400, "validation", field="from")
        items = outbox.list_notifications(device_id=device, from_ts=from_ts, to_ts=to_ts)
        return NotificationsOut(
            notifications=[
                NotificationOut(
                    kind=n.kind,
                    device_id=n.device_id,
                    ts=n.created_ts,
                    subject=n.subject,
                    body=n.body,
                    recipient=n.recipient,
                )
                for n in items
            ]
        )

    @app.get("/api/v1/rules", response_model=RulesOut)
    def rules(request: Request):
        if session_user(request) is None:
            return _error(401, "auth")
        r = config.rules
        return RulesOut(
            swell_threshold_v=r.swell_threshold,
            sag_threshold_v=r.sag_threshold,
            temp_band_c=r.temp_band,
            humidity_band_pct=r.humidity_band,
            co2_max_ppm=r.co2_max,
            alert_cooldown_s=r.alert_cooldown,
        )

    if config.dashboard_dir is not None and Path(config.dashboard_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.dashboard_dir, html=True), name="dashboard")

    return app
