"""Emulated firmware: init, connect-with-retry, 1 Hz acquire/compute/post loop.

The loop's contract: acquisition never waits on delivery. Posting failures
move the device to a retrying state with a bounded drop-oldest queue; ticks
keep their one-second cadence regardless.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .frontend import FrontEnd
from .ieq import (
    EnvironmentDrift,
    IeqReading,
    IeqSensorModel,
    IeqState,
    read_co2,
    read_temp_humidity,
    step_environment,
)
from .metering import CalibrationSet, compute_reading
from .waveforms import GridEvent, LoadProfile, WaveformSpec, synth_pair


class Phase(Enum):
    INIT = "init"
    CONNECTING = "connecting"
    RUNNING = "running"
    RETRYING = "retrying"


class SensorFault(RuntimeError):
    """A sensor failed to produce a reading this tick."""


@dataclass(frozen=True)
class DeviceConfig:
    device_id: str
    api_key: str
    endpoint: str = ""
    report_interval: float = 1.0
    retry_queue_capacity: int = 300
    drop_probability: float = 0.0
    reconnect_backoff: float = 5.0
    outages: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.device_id:
            raise ValueError("device_id must be non-empty")
        if not self.api_key:
            raise ValueError("api_key must be non-empty")
        if self.report_interval <= 0:
            raise ValueError("report_interval must be > 0")
        if self.retry_queue_capacity < 0:
            raise ValueError("retry_queue_capacity must be >= 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")
        if self.reconnect_backoff < 0:
            raise ValueError("reconnect_backoff must be >= 0")


@dataclass(frozen=True)
class TelemetryRecord:
    """One tick's full measurement bundle, as produced on-device."""

    device_id: str
    ts: int
    v_rms: float
    i_rms: float
    active_power: float
    temperature: float
    humidity: float
    co2: int
    suspect: bool = False

    def __post_init__(self) -> None:
        for name in ("v_rms", "i_rms", "active_power", "temperature", "humidity"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def record_to_wire(record: TelemetryRecord, api_key: str) -> dict:
    """Wire body for POST /api/v1/telemetry.

    Volts/amperes/degC/%RH carry at most 3 fractional digits, watts at most
    2, co2 is an integer.
    """
    return {
        "device_id": record.device_id,
        "api_key": api_key,
        "ts": int(record.ts),
        "vrms": round(record.v_rms, 3),
        "irms": round(record.i_rms, 3),
        "power": round(record.active_power, 2),
        "temp": round(record.temperature, 3),
        "humidity": round(record.humidity, 3),
        "co2": int(record.co2),
        "suspect": bool(record.suspect),
    }


@dataclass
class DeliveryCounters:
    produced: int = 0
    acked: int = 0
    dropped: int = 0
    sensor_faults: int = 0
    connect_attempts: int = 0
    offline_written: int = 0


@dataclass
class RuntimeState:
    phase: Phase
    retry_queue: deque
    tick_count: int = 0
    last_attempt_ts: float = -math.inf
    counters: DeliveryCounters = field(default_factory=DeliveryCounters)


def initialize(config: DeviceConfig) -> RuntimeState:
    """One-time power-on setup; validation errors name the offending field."""
    return RuntimeState(phase=Phase.INIT, retry_queue=deque())


@dataclass
class SensorSuite:
    """Everything the device reads each tick: the metering chain plus IEQ.

    Owns the (mutable) indoor-environment state; one suite belongs to exactly
    one device runtime.
    """

    waveform: WaveformSpec
    loads: tuple[LoadProfile, ...]
    grid_events: tuple[GridEvent, ...]
    front_end: FrontEnd
    calibration: CalibrationSet
    ieq_model: IeqSensorModel
    drift: EnvironmentDrift
    env: IeqState
    wave_rng: np.random.Generator
    ieq_rng: np.random.Generator
    fault_ticks: frozenset = frozenset()

    def acquire(self, tick: int, window: tuple[float, float], timestamp: int):
        if tick in self.fault_ticks:
            raise SensorFault(f"sensor fault injected at tick {tick}")
        self.env = step_environment(self.env, window[1], self.drift, self.ieq_rng)
        pair = synth_pair(self.waveform, self.loads, self.grid_events, window, rng=self.wave_rng)
        sample_window = self.front_end.digitize_pair(pair)
        meter = compute_reading(
            sample_window, self.front_end.adc, self.front_end.bias, self.calibration, timestamp
        )
        temp, humid = read_temp_humidity(self.env, self.ieq_model, self.ieq_rng)
        co2 = read_co2(self.env, self.ieq_model, self.front_end.adc, self.ieq_rng)
        return meter, IeqReading(timestamp=timestamp, temperature=temp, humidity=humid, co2=co2)


class DeviceRuntime:
    """One device instance: a sequential loop owning its sensors and queue."""

    def __init__(self, config: DeviceConfig, sensors: SensorSuite, transport, clock, start_ts: int):
        self.config = config
        self.sensors = sensors
        self.transport = transport
        self.clock = clock
        self.start_ts = int(start_ts)  # scenario origin: events/on_intervals count from here
        self.origin_ts = int(start_ts)  # first tick's timestamp; shifts if connecting took time
        self.state = initialize(config)
        self.offline_log = None  # set by the CLI for --offline runs

    # -- state machine -------------------------------------------------

    def connect(self) -> bool:
        """One connection attempt; sleeps the backoff on failure."""
        if self.state.phase not in (Phase.INIT, Phase.CONNECTING, Phase.RETRYING):
            raise RuntimeError(f"connect() called in phase {self.state.phase}")
        self.state.phase = Phase.CONNECTING if self.state.phase is Phase.INIT else self.state.phase
        self.state.counters.connect_attempts += 1
        self.state.last_attempt_ts = self.clock.now()
        if self.transport.connect():
            self.state.phase = Phase.RUNNING
            return True
        self.clock.sleep(self.config.reconnect_backoff)
        return False

    def connect_until(self, deadline: float) -> bool:
        self.state.phase = Phase.CONNECTING
        while self.clock.now() < deadline:
            if self.connect():
                return True
        return False

    # -- per-tick work ---------------------------------------------------

    def acquire_cycle(self) -> TelemetryRecord | None:
        """Gather one window, compute the reading, read IEQ, stamp the tick.

        A sensor fault skips the tick (counted); values are never fabricated.
        """
        if self.state.phase not in (Phase.RUNNING, Phase.RETRYING):
            raise RuntimeError("acquire_cycle requires a connected (running/retrying) device")
        tick = self.state.tick_count
        interval = self.config.report_interval
        timestamp = self.origin_ts + int(tick * interval)
        window_offset = (self.origin_ts - self.start_ts) + tick * interval
        try:
            meter, ieq = self.sensors.acquire(tick, (window_offset, interval), timestamp)
        except SensorFault:
            self.state.counters.sensor_faults += 1
            return None
        return TelemetryRecord(
            device_id=self.config.device_id,
            ts=timestamp,
            v_rms=meter.v_rms,
            i_rms=meter.i_rms,
            active_power=meter.active_power,
            temperature=ieq.temperature,
            humidity=ieq.humidity,
            co2=ieq.co2,
            suspect=meter.suspect,
        )

    def _enqueue(self, record: TelemetryRecord) -> str:
        cap = self.config.retry_queue_capacity
        if cap == 0:
            self.state.counters.dropped += 1
            return "dropped"
        if len(self.state.retry_queue) >= cap:
            self.state.retry_queue.popleft()
            self.state.counters.dropped += 1
        self.state.retry_queue.append(record)
        return "queued"

    def _send(self, record: TelemetryRecord) -> bool:
        return self.transport.send(record_to_wire(record, self.config.api_key))

    def _flush_queue(self) -> bool:
        """Deliver queued records oldest-first; False on the first failure."""
        while self.state.retry_queue:
            head = self.state.retry_queue[0]
            if not self._send(head):
                return False
            self.state.retry_queue.popleft()
            self.state.counters.acked += 1
        return True

    def post_record(self, record: TelemetryRecord) -> str:
        """Attempt delivery; returns 'acked', 'queued' or 'dropped'.

        Queued records always go out before new ones, so the service sees
        each device's stream in timestamp order.
        """
        st = self.state
        if st.phase is Phase.RETRYING:
            if self.clock.now() - st.last_attempt_ts < self.config.reconnect_backoff:
                return self._enqueue(record)
            st.last_attempt_ts = self.clock.now()
            st.counters.connect_attempts += 1
            if not self.transport.connect():
                return self._enqueue(record)
            st.phase = Phase.RUNNING
        if not self._flush_queue():
            st.phase = Phase.RETRYING
            st.last_attempt_ts = self.clock.now()
            return self._enqueue(record)
        if self._send(record):
            st.counters.acked += 1
            return "acked"
        st.phase = Phase.RETRYING
        st.last_attempt_ts = self.clock.now()
        return self._enqueue(record)

    # -- whole-run driver ------------------------------------------------

    def run(self, duration_s: float, drain_attempts: int = 500) -> DeliveryCounters:
        """Run the scenario: connect, tick at the report interval, drain."""
        ticks = int(round(duration_s / self.config.report_interval))
        if ticks <= 0:
            return self.state.counters
        if self.offline_log is None:
            deadline = self.clock.now() + duration_s
            if not self.connect_until(deadline):
                return self.state.counters
        else:
            self.state.phase = Phase.RUNNING
        self.origin_ts = int(round(self.clock.now()))
        while self.state.tick_count < ticks:
            record = self.acquire_cycle()
            self.state.tick_count += 1
            self.clock.advance_to(
                self.origin_ts + self.state.tick_count * self.config.report_interval
            )
            if record is None:
                continue
            self.state.counters.produced += 1
            if self.offline_log is not None:
                body = record_to_wire(record, self.config.api_key)
                body.pop("api_key")  # keep secrets out of local logs
                self.offline_log.write(body)
                self.state.counters.offline_written += 1
            else:
                self.post_record(record)
        if self.offline_log is None:
            self.drain(drain_attempts)
        return self.state.counters

    def drain(self, max_attempts: int = 500) -> None:
        """After the last tick, keep retrying until the queue empties."""
        attempts = 0
        while self.state.retry_queue and attempts < max_attempts:
            attempts += 1
            wait = self.config.reconnect_backoff - (self.clock.now() - self.state.last_attempt_ts)
            if self.state.phase is Phase.RETRYING and wait > 0:
                self.clock.sleep(wait)
            if self.state.phase is Phase.RETRYING:
                self.state.last_attempt_ts = self.clock.now()
                self.state.counters.connect_attempts += 1
                if not self.transport.connect():
                    continue
                self.state.phase = Phase.RUNNING
            if not self._flush_queue():
                self.state.phase = Phase.RETRYING
                self.state.last_attempt_ts = self.clock.now()
