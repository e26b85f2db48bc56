import warnings
from pathlib import Path

import pytest

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette")

from fastapi.testclient import TestClient  # noqa: E402

from wattiq.device import DeviceRuntime  # noqa: E402
from wattiq.scenario import build_sensor_suite, load_scenario  # noqa: E402
from wattiq.service.app import ServiceConfig, create_app  # noqa: E402
from wattiq.service.auth import ApiCredential  # noqa: E402
from wattiq.transport import HttpTransport, SimClock  # noqa: E402

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

USERS = [("alice", "wonderland"), ("bob", "builder")]
DEVICES = [
    ApiCredential("desk-01", "k-desk-01", "alice"),
    ApiCredential("desk-02", "k-desk-02", "alice"),
    ApiCredential("lab-09", "k-lab-09", "bob"),
]


def make_service(storage_dir, rules=None, session_clock=None, ttl=86400.0):
    kwargs = {}
    if rules is not None:
        kwargs["rules"] = rules
    config = ServiceConfig(
        storage_dir=Path(storage_dir),
        users=list(USERS),
        devices=list(DEVICES),
        session_ttl_s=ttl,
        **kwargs,
    )
    if session_clock is not None:
        return create_app(config, session_clock=session_clock)
    return create_app(config)


def login(client, username="alice", password="wonderland"):
    resp = client.post("/api/v1/login", json={"username": username, "password": password})
    assert resp.status_code == 200, resp.text
    return {"Authorization": f"Bearer {resp.json()['token']}"}


def run_device(client, scenario, device_index=0, transport=None, clock=None, fault_ticks=frozenset()):
    """Drive one scenario device against an in-process service client."""
    suite, transport_rng = build_sensor_suite(scenario, device_index, fault_ticks=fault_ticks)
    clock = clock or SimClock(scenario.start_ts)
    transport = transport or HttpTransport(client)
    runtime = DeviceRuntime(scenario.devices[device_index], suite, transport, clock, scenario.start_ts)
    runtime.run(scenario.duration_s)
    return runtime, transport_rng


@pytest.fixture
def scenario_dir():
    return SCENARIOS


@pytest.fixture
def steady_scenario():
    return load_scenario(SCENARIOS / "steady_day.yaml")


@pytest.fixture
def swell_sag_scenario():
    return load_scenario(SCENARIOS / "swell_sag.yaml")


@pytest.fixture
def service_client(tmp_path, steady_scenario):
    app = make_service(tmp_path / "data", rules=steady_scenario.rules)
    with TestClient(app) as client:
        client.app = app
        yield client
