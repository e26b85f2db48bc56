"""Delivery-side abstractions for the emulated device.

The device posts telemetry through a Transport; network trouble is modelled
by wrapping the real transport in a lossy layer rather than by touching the
device loop. Clocks are injected so scenarios can run in simulated time.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np

TELEMETRY_PATH = "/api/v1/telemetry"
HEALTH_PATH = "/api/v1/health"


class DeviceConfigRejected(RuntimeError):
    """The service rejected our identity or payload shape: a config bug."""


class SimClock:
    """Simulated time: sleeping is jumping."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._now += seconds

    def advance_to(self, t: float) -> None:
        if t > self._now:
            self._now = t


class RealClock:
    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)

    def advance_to(self, t: float) -> None:
        self.sleep(t - self.now())


class HttpTransport:
    """Posts wire-format telemetry to the ingestion service.

    A 409 (duplicate) counts as delivered: the service already holds the
    record. 400/401 mean the device is misconfigured and retrying is useless.
    """

    def __init__(self, client: httpx.Client):
        self._client = client

    def connect(self) -> bool:
        try:
            return self._client.get(HEALTH_PATH).status_code == 200
        except httpx.HTTPError:
            return False

    def send(self, body: dict) -> bool:
        try:
            resp = self._client.post(TELEMETRY_PATH, json=body)
        except httpx.HTTPError:
            return False
        if resp.status_code in (200, 409):
            return True
        if resp.status_code in (400, 401):
            raise DeviceConfigRejected(f"service rejected telemetry: {resp.status_code} {resp.text}")
        return False


@dataclass
class FlakyTransport:
    """Wraps a transport with random drops and scheduled outage windows.

    ``outages`` are half-open [start, end) intervals on the injected clock's
    axis; inside one, nothing gets through and connects fail.
    """

    inner: object
    clock: object
    rng: np.random.Generator
    drop_probability: float = 0.0
    outages: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def _in_outage(self) -> bool:
        now = self.clock.now()
        return any(start <= now < end for start, end in self.outages)

    def connect(self) -> bool:
        if self._in_outage():
            return False
        return self.inner.connect()

    def send(self, body: dict) -> bool:
        if self._in_outage():
            return False
        if self.drop_probability > 0.0 and self.rng.random() < self.drop_probability:
            return False
        return self.inner.send(body)


class OfflineLog:
    """Local sink used by --offline runs: one wire-format JSON line per record."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.written = 0
        self._fh = open(self.path, "a", encoding="utf-8")

    def write(self, body: dict) -> None:
        self._fh.write(json.dumps(body, separators=(",", ":")) + "\n")
        self._fh.flush()
        self.written += 1

    def close(self) -> None:
        self._fh.close()
