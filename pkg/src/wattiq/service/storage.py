"""Durable append-only telemetry store.

One JSON-lines file per device plus an in-memory index rebuilt on startup.
Acknowledged records are never mutated; (device_id, ts) is the natural key
at the 1 Hz cadence, so duplicates are rejected idempotently. A file lock
keeps a second service instance off the same storage directory.
"""

from __future__ import annotations

import json
import os
import re
import threading
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock, Timeout

from ..device import TelemetryRecord

METRICS = ("vrms", "irms", "power", "temp", "humidity", "co2")

_DEVICE_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")


class StoreLockedError(RuntimeError):
    """Another service instance already owns this storage directory."""


class DuplicateRecordError(ValueError):
    """A record with this (device_id, ts) was already acknowledged."""


def valid_device_id(device_id: str) -> bool:
    return bool(_DEVICE_ID_RE.match(device_id))


@dataclass(frozen=True)
class StoredRecord:
    ingest_sequence: int
    device_id: str
    ts: int
    vrms: float
    irms: float
    power: float
    temp: float
    humidity: float
    co2: int
    suspect: bool

    def to_line(self) -> dict:
        return {
            "seq": self.ingest_sequence,
            "device_id": self.device_id,
            "ts": self.ts,
            "vrms": self.vrms,
            "irms": self.irms,
            "power": self.power,
            "temp": self.temp,
            "humidity": self.humidity,
            "co2": self.co2,
            "suspect": self.suspect,
        }

    @classmethod
    def from_line(cls, line: dict) -> "StoredRecord":
        return cls(
            ingest_sequence=line["seq"],
            device_id=line["device_id"],
            ts=line["ts"],
            vrms=line["vrms"],
            irms=line["irms"],
            power=line["power"],
            temp=line["temp"],
            humidity=line["humidity"],
            co2=line["co2"],
            suspect=line["suspect"],
        )

    def to_telemetry(self) -> TelemetryRecord:
        return TelemetryRecord(
            device_id=self.device_id,
            ts=self.ts,
            v_rms=self.vrms,
            i_rms=self.irms,
            active_power=self.power,
            temperature=self.temp,
            humidity=self.humidity,
            co2=self.co2,
            suspect=self.suspect,
        )

    def metric(self, name: str):
        return getattr(self, name)


class _DeviceLog:
    """Per-device ts-sorted view over the append-only file."""

    def __init__(self):
        self.ts_sorted: list[int] = []
        self.by_ts: dict[int, StoredRecord] = {}

    def add(self, record: StoredRecord) -> None:
        self.by_ts[record.ts] = record
        insort(self.ts_sorted, record.ts)

    def scan(self, from_ts=None, to_ts=None) -> list[StoredRecord]:
        lo = 0 if from_ts is None else bisect_left(self.ts_sorted, from_ts)
        hi = len(self.ts_sorted) if to_ts is None else bisect_right(self.ts_sorted, to_ts)
        return [self.by_ts[ts] for ts in self.ts_sorted[lo:hi]]


class RecordStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.records_dir = self.root / "records"
        self.records_dir.mkdir(parents=True, exist_ok=True)
        # not thread-local: the web server may release from another thread
        self._flock = FileLock(str(self.root / ".store.lock"), thread_local=False)
        try:
            self._flock.acquire(timeout=0)
        except Timeout as exc:
            raise StoreLockedError(f"storage at {self.root} is in use by another instance") from exc
        self._lock = threading.RLock()
        self._devices: dict[str, _DeviceLog] = {}
        self._next_seq = 1
        self._files: dict[str, object] = {}
        self._load()

    # -- startup / shutdown ------------------------------------------------

    def _load(self) -> None:
        max_seq = 0
        for path in sorted(self.records_dir.glob("*.jsonl")):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = StoredRecord.from_line(json.loads(line))
                    self._devices.setdefault(record.device_id, _DeviceLog()).add(record)
                    max_seq = max(max_seq, record.ingest_sequence)
        self._next_seq = max_seq + 1

    def close(self) -> None:
        with self._lock:
            for fh in self._files.values():
                fh.close()
            self._files.clear()
        if self._flock.is_locked:
            self._flock.release()

    # -- writes --------------------------------------------------------------

    def _file_for(self, device_id: str):
        fh = self._files.get(device_id)
        if fh is None:
            fh = open(self.records_dir / f"{device_id}.jsonl", "a", encoding="utf-8")
            self._files[device_id] = fh
        return fh

    def contains(self, device_id: str, ts: int) -> bool:
        with self._lock:
            log = self._devices.get(device_id)
            return log is not None and ts in log.by_ts

    def append(self, device_id: str, ts: int, values: dict, suspect: bool) -> StoredRecord:
        """Durably append one record; raises DuplicateRecordError on replay."""
        with self._lock:
            log = self._devices.setdefault(device_id, _DeviceLog())
            if ts in log.by_ts:
                raise DuplicateRecordError(f"({device_id}, {ts}) already stored")
            record = StoredRecord(
                ingest_sequence=self._next_seq,
                device_id=device_id,
                ts=ts,
                vrms=values["vrms"],
                irms=values["irms"],
                power=values["power"],
                temp=values["temp"],
                humidity=values["humidity"],
                co2=values["co2"],
                suspect=suspect,
            )
            fh = self._file_for(device_id)
            fh.write(json.dumps(record.to_line(), separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
            log.add(record)
            self._next_seq += 1
            return record

    # -- reads ---------------------------------------------------------------

    def scan(self, device_id: str, from_ts=None, to_ts=None) -> list[StoredRecord]:
        with self._lock:
            log = self._devices.get(device_id)
            return log.scan(from_ts, to_ts) if log is not None else []

    def query_series(self, device_id: str, metric: str, from_ts: int, to_ts: int):
        """Stored (ts, value) points with from_ts <= ts <= to_ts, ascending."""
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        return [(rec.ts, rec.metric(metric)) for rec in self.scan(device_id, from_ts, to_ts)]

    def device_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._devices)

    def count(self, device_id: str) -> int:
        with self._lock:
            log = self._devices.get(device_id)
            return len(log.ts_sorted) if log is not None else 0
