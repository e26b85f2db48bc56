import json
from decimal import Decimal

import numpy as np
import pytest

from conftest import make_service, run_device
from fastapi.testclient import TestClient

from wattiq.device import (
    DeviceConfig,
    DeviceRuntime,
    Phase,
    TelemetryRecord,
    initialize,
    record_to_wire,
)
from wattiq.scenario import build_sensor_suite, load_scenario
from wattiq.transport import FlakyTransport, HttpTransport, SimClock


class ScriptedTransport:
    """connect() follows a script (then stays up); send() always succeeds."""

    def __init__(self, connect_script=(), clock=None):
        self.script = list(connect_script)
        self.clock = clock
        self.connect_times = []
        self.sent = []

    def connect(self):
        if self.clock is not None:
            self.connect_times.append(self.clock.now())
        return self.script.pop(0) if self.script else True

    def send(self, body):
        self.sent.append(body)
        return True


class DownTransport:
    def connect(self):
        return False

    def send(self, body):
        return False


class RefusingTransport:
    """Connects fine but refuses every post."""

    def connect(self):
        return True

    def send(self, body):
        return False


def make_runtime(scenario, config=None, transport=None, device_index=0, fault_ticks=frozenset()):
    suite, _ = build_sensor_suite(scenario, device_index, fault_ticks=fault_ticks)
    config = config or scenario.devices[device_index]
    clock = SimClock(scenario.start_ts)
    transport = transport or ScriptedTransport(clock=clock)
    return DeviceRuntime(config, suite, transport, clock, scenario.start_ts)


class TestConfigAndInit:
    def test_initialize_starts_in_init_with_empty_queue(self):
        config = DeviceConfig("dev", "key")
        state = initialize(config)
        assert state.phase is Phase.INIT
        assert len(state.retry_queue) == 0
        assert state.tick_count == 0

    def test_zero_interval_rejected_naming_field(self):
        with pytest.raises(ValueError, match="report_interval"):
            DeviceConfig("dev", "key", report_interval=0)

    def test_empty_device_id_rejected(self):
        with pytest.raises(ValueError, match="device_id"):
            DeviceConfig("", "key")

    def test_capacity_zero_is_valid_and_drops_immediately(self, steady_scenario):
        config = DeviceConfig("desk-01", "k-desk-01", retry_queue_capacity=0)
        runtime = make_runtime(steady_scenario, config=config, transport=RefusingTransport())
        runtime.state.phase = Phase.RUNNING
        record = runtime.acquire_cycle()
        assert runtime.post_record(record) == "dropped"
        assert len(runtime.state.retry_queue) == 0
        assert runtime.state.counters.dropped == 1


class TestWireFormat:
    def test_wire_field_precision(self):
        record = TelemetryRecord(
            device_id="desk-01",
            ts=1700000000,
            v_rms=221.9689712,
            i_rms=7.4005551,
            active_power=1642.834648,
            temperature=24.4333,
            humidity=55.61999,
            co2=566,
            suspect=False,
        )
        wire = record_to_wire(record, "k-desk-01")
        assert wire["ts"] == 1700000000
        assert isinstance(wire["co2"], int)
        text = json.dumps(wire)
        parsed = json.loads(text)
        for key, digits in (("vrms", 3), ("irms", 3), ("temp", 3), ("humidity", 3), ("power", 2)):
            exponent = Decimal(str(parsed[key])).as_tuple().exponent
            assert exponent >= -digits, f"{key} carries more than {digits} decimals"

    def test_non_finite_rejected_at_construction(self):
        with pytest.raises(ValueError):
            TelemetryRecord("d", 0, float("nan"), 0.0, 0.0, 20.0, 50.0, 500, False)


class TestConnect:
    def test_transport_up_connects_first_try(self, steady_scenario):
        runtime = make_runtime(steady_scenario)
        assert runtime.connect()
        assert runtime.state.phase is Phase.RUNNING
        assert runtime.state.counters.connect_attempts == 1

    def test_backoff_schedule_honored(self, steady_scenario):
        clock = SimClock(steady_scenario.start_ts)
        transport = ScriptedTransport([False, False, False, True], clock=clock)
        suite, _ = build_sensor_suite(steady_scenario, 0)
        runtime = DeviceRuntime(steady_scenario.devices[0], suite, transport, clock, steady_scenario.start_ts)
        assert runtime.connect_until(clock.now() + 100)
        assert runtime.state.phase is Phase.RUNNING
        assert runtime.state.counters.connect_attempts == 4
        t0 = steady_scenario.start_ts
        backoff = steady_scenario.devices[0].reconnect_backoff
        assert transport.connect_times == [t0, t0 + backoff, t0 + 2 * backoff, t0 + 3 * backoff]

    def test_permanently_down_never_runs(self, steady_scenario):
        runtime = make_runtime(steady_scenario, transport=DownTransport())
        assert not runtime.connect_until(runtime.clock.now() + 30)
        assert runtime.state.phase is not Phase.RUNNING
        assert runtime.state.counters.connect_attempts >= 5
        counters = make_runtime(steady_scenario, transport=DownTransport()).run(30)
        assert counters.produced == 0


class TestAcquireCycle:
    def test_steady_scenario_reading_envelope(self, steady_scenario):
        runtime = make_runtime(steady_scenario)
        runtime.connect()
        record = runtime.acquire_cycle()
        assert record.v_rms == pytest.approx(222.0, rel=1e-2)
        assert 24.2 <= record.temperature <= 24.6
        assert record.ts == steady_scenario.start_ts

    def test_zeroed_world_yields_zero_record(self, tmp_path):
        zero_yaml = tmp_path / "zero.yaml"
        zero_yaml.write_text(
            "name: zeros\nduration_s: 5\n"
            "waveform: {nominal_rms_voltage: 0.0}\n"
            "ieq:\n  initial: {temperature_c: 0.0, humidity_pct: 0.0, co2_ppm: 0.0}\n"
            "devices:\n  - {device_id: z, api_key: zk}\n"
        )
        scenario = load_scenario(zero_yaml)
        runtime = make_runtime(scenario)
        runtime.connect()
        record = runtime.acquire_cycle()
        assert record.v_rms == pytest.approx(0.0, abs=1e-9)
        assert record.i_rms == pytest.approx(0.0, abs=1e-9)
        assert record.active_power == pytest.approx(0.0, abs=1e-9)
        assert record.temperature == 0.0
        assert record.humidity == 0.0
        assert record.co2 == 0

    def test_three_hundred_ticks_consecutive_timestamps(self, steady_scenario):
        runtime = make_runtime(steady_scenario)
        runtime.run(300)
        sent_ts = [body["ts"] for body in runtime.transport.sent]
        assert sent_ts == list(range(steady_scenario.start_ts, steady_scenario.start_ts + 300))

    def test_sensor_fault_skips_and_counts(self, steady_scenario):
        runtime = make_runtime(steady_scenario, fault_ticks=frozenset({3, 7}))
        counters = runtime.run(20)
        assert counters.sensor_faults == 2
        assert counters.produced == 18
        sent_ts = [body["ts"] - steady_scenario.start_ts for body in runtime.transport.sent]
        assert 3 not in sent_ts and 7 not in sent_ts
        assert sent_ts == sorted(sent_ts)
        # cadence preserved: the loop still advanced one second per tick
        assert runtime.state.tick_count == 20


class TestPostRecord:
    def test_reliable_transport_acks_everything(self, steady_scenario):
        runtime = make_runtime(steady_scenario)
        counters = runtime.run(50)
        assert counters.produced == 50
        assert counters.acked == 50
        assert counters.dropped == 0
        assert len(runtime.state.retry_queue) == 0

    def test_drop_everything_keeps_newest_ten(self, steady_scenario):
        config = DeviceConfig("desk-01", "k-desk-01", retry_queue_capacity=10, reconnect_backoff=5.0)
        runtime = make_runtime(steady_scenario, config=config, transport=RefusingTransport())
        runtime.state.phase = Phase.RUNNING
        records = []
        for _ in range(25):
            record = runtime.acquire_cycle()
            records.append(record)
            runtime.state.tick_count += 1
            runtime.clock.advance_to(runtime.origin_ts + runtime.state.tick_count)
            runtime.post_record(record)
        assert runtime.state.counters.dropped == 15
        queued_ts = [r.ts for r in runtime.state.retry_queue]
        assert queued_ts == [r.ts for r in records[15:]]

    def test_accounting_invariant_under_random_drops(self, steady_scenario):
        for seed in (1, 2, 3):
            clock = SimClock(steady_scenario.start_ts)
            flaky = FlakyTransport(
                inner=ScriptedTransport(),
                clock=clock,
                rng=np.random.default_rng(seed),
                drop_probability=0.4,
            )
            suite, _ = build_sensor_suite(steady_scenario, 0)
            config = DeviceConfig("desk-01", "k-desk-01", retry_queue_capacity=20)
            runtime = DeviceRuntime(config, suite, flaky, clock, steady_scenario.start_ts)
            # no drain: leave the queue as the loop left it
            runtime.connect_until(clock.now() + 10)
            for _ in range(80):
                record = runtime.acquire_cycle()
                runtime.state.tick_count += 1
                clock.advance_to(runtime.origin_ts + runtime.state.tick_count)
                if record is not None:
                    runtime.state.counters.produced += 1
                    runtime.post_record(record)
            c = runtime.state.counters
            assert c.produced == c.acked + c.dropped + len(runtime.state.retry_queue)
            assert len(runtime.state.retry_queue) <= config.retry_queue_capacity

    def test_outage_then_recovery_delivers_in_order(self, tmp_path, steady_scenario):
        app = make_service(tmp_path / "data")
        with TestClient(app) as client:
            clock = SimClock(steady_scenario.start_ts)
            outage = (steady_scenario.start_ts + 100, steady_scenario.start_ts + 130)
            flaky = FlakyTransport(
                inner=HttpTransport(client),
                clock=clock,
                rng=np.random.default_rng(0),
                outages=(outage,),
            )
            runtime, _ = run_device(client, steady_scenario, transport=flaky, clock=clock)
            store = app.state.store
            assert store.count("desk-01") == 300
            scanned = store.scan("desk-01")
            assert [r.ts for r in scanned] == sorted(r.ts for r in scanned)
            # ingest order matched timestamp order despite the outage
            seqs = [r.ingest_sequence for r in scanned]
            assert seqs == sorted(seqs)
            assert runtime.state.counters.acked == 300

    def test_duplicate_post_counts_as_delivered(self, tmp_path, steady_scenario):
        app = make_service(tmp_path / "data")
        with TestClient(app) as client:
            transport = HttpTransport(client)
            runtime = make_runtime(steady_scenario, transport=transport)
            runtime.connect()
            record = runtime.acquire_cycle()
            assert runtime.post_record(record) == "acked"
            assert runtime.post_record(record) == "acked"  # 409 duplicate still means stored
            assert app.state.store.count("desk-01") == 1
