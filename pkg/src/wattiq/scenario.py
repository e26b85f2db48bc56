"""Scenario files: one YAML document describing a whole simulated experiment.

A scenario fixes the mains model, the appliance loads, scheduled grid
events, the indoor-environment trajectory, the sensing-chain parameters,
the device fleet, the alerting rules, and (for validation presets) the
reference values to compare against. Unknown keys are rejected so typos
fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .device import DeviceConfig, SensorSuite
from .frontend import AdcModel, BiasNetwork, CtSensor, FrontEnd, VoltageTap, burden_resistor
from .ieq import (
    EnvironmentDrift,
    FieldDrift,
    IeqSensorModel,
    IeqState,
    LinearCo2Curve,
    LogCo2Curve,
)
from .insights import RuleSet, ruleset_from_dict
from .waveforms import GridEvent, LoadProfile, ScenarioConfigError, WaveformSpec

DEFAULT_START_TS = 1_700_000_000  # fixed origin keeps fast-mode runs byte-reproducible


@dataclass(frozen=True)
class ApplianceReference:
    power_w: float
    voltage_v: float
    current_a: float


@dataclass(frozen=True)
class References:
    appliances: dict[str, ApplianceReference] = field(default_factory=dict)
    ieq: tuple[float, float, float] | None = None  # (degC, %RH, ppm)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration_s: float
    start_ts: int
    waveform: WaveformSpec
    loads: tuple[LoadProfile, ...]
    grid_events: tuple[GridEvent, ...]
    front_end: FrontEnd
    ieq_initial: IeqState
    ieq_drift: EnvironmentDrift
    ieq_sensor: IeqSensorModel
    devices: tuple[DeviceConfig, ...]
    rules: RuleSet
    references: References | None = None

    def rng_streams(self, device_index: int, seed: int | None = None) -> dict:
        """Independent deterministic generator streams for one device."""
        root = np.random.SeedSequence([seed if seed is not None else self.seed, device_index])
        wave_seq, ieq_seq, transport_seq = root.spawn(3)
        return {
            "wave": np.random.default_rng(wave_seq),
            "ieq": np.random.default_rng(ieq_seq),
            "transport": np.random.default_rng(transport_seq),
        }


def _take(raw: dict, allowed: set[str], context: str) -> dict:
    if not isinstance(raw, dict):
        raise ScenarioConfigError(f"{context} must be a mapping")
    unknown = set(raw) - allowed
    if unknown:
        raise ScenarioConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return raw


def _parse_waveform(raw: dict) -> WaveformSpec:
    raw = _take(
        raw,
        {"mains_frequency_hz", "nominal_rms_voltage", "noise_sigma_v", "synthesis_rate_hz", "phase0_rad"},
        "waveform",
    )
    return WaveformSpec(
        mains_frequency=raw.get("mains_frequency_hz", 50.0),
        nominal_rms_voltage=raw.get("nominal_rms_voltage", 223.0),
        noise_sigma=raw.get("noise_sigma_v", 0.0),
        synthesis_rate=raw.get("synthesis_rate_hz", 2000.0),
        phase0=raw.get("phase0_rad", 0.0),
    )


def _parse_load(raw: dict, duration_s: float) -> LoadProfile:
    raw = _take(raw, {"appliance", "rms_current_a", "power_factor", "on_intervals"}, "load")
    intervals = raw.get("on_intervals")
    if intervals is None:
        intervals = [(0.0, duration_s)]
    return LoadProfile(
        appliance_name=raw["appliance"],
        rms_current=raw["rms_current_a"],
        power_factor=raw.get("power_factor", 1.0),
        on_intervals=tuple((float(a), float(b)) for a, b in intervals),
    )


def _parse_event(raw: dict) -> GridEvent:
    raw = _take(raw, {"kind", "start_s", "duration_s", "magnitude_factor"}, "grid event")
    return GridEvent(
        kind=raw["kind"],
        start=raw["start_s"],
        duration=raw["duration_s"],
        magnitude_factor=raw["magnitude_factor"],
    )


def _parse_frontend(raw: dict) -> FrontEnd:
    raw = _take(
        raw,
        {
            "ct_turns",
            "ct_max_primary_current_a",
            "ct_burden_ohms",
            "adapter_gain",
            "divider_ratio",
            "bias_v",
            "rail_v",
            "adc_bits",
            "adc_reference_v",
        },
        "frontend",
    )
    adc = AdcModel(
        resolution_bits=raw.get("adc_bits", 12),
        reference_volts=raw.get("adc_reference_v", 3.3),
    )
    turns = raw.get("ct_turns", 2000)
    max_current = raw.get("ct_max_primary_current_a", 100.0)
    burden = raw.get("ct_burden_ohms")
    if burden is None:
        burden = burden_resistor(adc.reference_volts, turns, max_current)
    return FrontEnd(
        ct=CtSensor(turns=turns, max_primary_current=max_current, burden_resistance=burden),
        tap=VoltageTap(
            adapter_gain=raw.get("adapter_gain", 9.0 / 230.0),
            divider_ratio=raw.get("divider_ratio", 0.12),
        ),
        bias=BiasNetwork(
            bias_volts=raw.get("bias_v", adc.reference_volts / 2.0),
            rail_volts=raw.get("rail_v", adc.reference_volts),
        ),
        adc=adc,
    )


def _parse_field_drift(raw: dict, context: str) -> FieldDrift:
    raw = _take(raw, {"sigma", "reversion", "band"}, context)
    band = raw.get("band")
    lo, hi = (float(band[0]), float(band[1])) if band else (float("-inf"), float("inf"))
    return FieldDrift(sigma=raw.get("sigma", 0.0), reversion=raw.get("reversion", 0.0), lo=lo, hi=hi)


def _parse_co2_curve(raw: dict):
    raw = _take(
        raw,
        {"kind", "volts_per_ppm", "baseline_ppm", "baseline_volts", "volts_per_decade"},
        "co2_curve",
    )
    kind = raw.get("kind", "log")
    if kind == "linear":
        return LinearCo2Curve(volts_per_ppm=raw.get("volts_per_ppm", 0.001))
    if kind == "log":
        return LogCo2Curve(
            baseline_ppm=raw.get("baseline_ppm", 400.0),
            baseline_volts=raw.get("baseline_volts", 0.4),
            volts_per_decade=raw.get("volts_per_decade", 1.0),
        )
    raise ScenarioConfigError(f"unknown co2_curve kind {kind!r}")


def _parse_ieq(raw: dict) -> tuple[IeqState, EnvironmentDrift, IeqSensorModel]:
    raw = _take(raw, {"initial", "drift", "sensor"}, "ieq")
    initial_raw = _take(
        raw.get("initial", {}), {"temperature_c", "humidity_pct", "co2_ppm"}, "ieq initial"
    )
    initial = IeqState(
        temperature=initial_raw.get("temperature_c", 24.0),
        humidity=initial_raw.get("humidity_pct", 50.0),
        co2=initial_raw.get("co2_ppm", 500.0),
    )
    drift_raw = _take(raw.get("drift", {}), {"temperature", "humidity", "co2"}, "ieq drift")
    drift = EnvironmentDrift(
        temperature=_parse_field_drift(drift_raw.get("temperature", {}), "ieq drift temperature"),
        humidity=_parse_field_drift(drift_raw.get("humidity", {}), "ieq drift humidity"),
        co2=_parse_field_drift(drift_raw.get("co2", {}), "ieq drift co2"),
    )
    sensor_raw = _take(
        raw.get("sensor", {}),
        {
            "temp_resolution_c",
            "humid_resolution_pct",
            "temp_noise_sigma_c",
            "humid_noise_sigma_pct",
            "co2_noise_sigma_ppm",
            "co2_bias_ppm",
            "co2_curve",
        },
        "ieq sensor",
    )
    sensor = IeqSensorModel(
        temp_resolution=sensor_raw.get("temp_resolution_c", 0.1),
        humid_resolution=sensor_raw.get("humid_resolution_pct", 0.1),
        temp_noise_sigma=sensor_raw.get("temp_noise_sigma_c", 0.0),
        humid_noise_sigma=sensor_raw.get("humid_noise_sigma_pct", 0.0),
        co2_noise_sigma=sensor_raw.get("co2_noise_sigma_ppm", 0.0),
        co2_bias_ppm=sensor_raw.get("co2_bias_ppm", 0.0),
        co2_curve=_parse_co2_curve(sensor_raw.get("co2_curve", {"kind": "linear"})),
    )
    return initial, drift, sensor


def _parse_device(raw: dict) -> DeviceConfig:
    raw = _take(
        raw,
        {
            "device_id",
            "api_key",
            "endpoint",
            "report_interval_s",
            "retry_queue_capacity",
            "drop_probability",
            "reconnect_backoff_s",
            "outages",
        },
        "device",
    )
    return DeviceConfig(
        device_id=raw["device_id"],
        api_key=raw["api_key"],
        endpoint=raw.get("endpoint", ""),
        report_interval=raw.get("report_interval_s", 1.0),
        retry_queue_capacity=raw.get("retry_queue_capacity", 300),
        drop_probability=raw.get("drop_probability", 0.0),
        reconnect_backoff=raw.get("reconnect_backoff_s", 5.0),
        outages=tuple((float(a), float(b)) for a, b in raw.get("outages", [])),
    )


def _parse_references(raw: dict) -> References:
    raw = _take(raw, {"appliances", "ieq"}, "references")
    appliances = {}
    for name, entry in raw.get("appliances", {}).items():
        entry = _take(entry, {"power_w", "voltage_v", "current_a"}, f"reference {name}")
        appliances[name] = ApplianceReference(
            power_w=entry["power_w"], voltage_v=entry["voltage_v"], current_a=entry["current_a"]
        )
    ieq = None
    if "ieq" in raw:
        entry = _take(raw["ieq"], {"temperature_c", "humidity_pct", "co2_ppm"}, "reference ieq")
        ieq = (entry["temperature_c"], entry["humidity_pct"], entry["co2_ppm"])
    return References(appliances=appliances, ieq=ieq)


def parse_scenario(raw: dict, name_hint: str = "scenario") -> Scenario:
    raw = _take(
        raw,
        {
            "name",
            "seed",
            "duration_s",
            "start_ts",
            "waveform",
            "loads",
            "grid_events",
            "frontend",
            "ieq",
            "devices",
            "rules",
            "references",
        },
        "scenario",
    )
    duration = float(raw.get("duration_s", 300.0))
    initial, drift, sensor = _parse_ieq(raw.get("ieq", {}))
    return Scenario(
        name=raw.get("name", name_hint),
        seed=int(raw.get("seed", 0)),
        duration_s=duration,
        start_ts=int(raw.get("start_ts", DEFAULT_START_TS)),
        waveform=_parse_waveform(raw.get("waveform", {})),
        loads=tuple(_parse_load(item, duration) for item in raw.get("loads", [])),
        grid_events=tuple(_parse_event(item) for item in raw.get("grid_events", [])),
        front_end=_parse_frontend(raw.get("frontend", {})),
        ieq_initial=initial,
        ieq_drift=drift,
        ieq_sensor=sensor,
        devices=tuple(_parse_device(item) for item in raw.get("devices", [])),
        rules=ruleset_from_dict(raw.get("rules", {})),
        references=_parse_references(raw["references"]) if "references" in raw else None,
    )


def build_sensor_suite(
    scenario: Scenario,
    device_index: int = 0,
    seed: int | None = None,
    fault_ticks: frozenset = frozenset(),
) -> tuple[SensorSuite, np.random.Generator]:
    """A device's sensors plus its transport-noise stream, deterministically seeded."""
    streams = scenario.rng_streams(device_index, seed)
    fe = scenario.front_end
    suite = SensorSuite(
        waveform=scenario.waveform,
        loads=scenario.loads,
        grid_events=scenario.grid_events,
        front_end=fe,
        calibration=fe.calibration(),
        ieq_model=scenario.ieq_sensor,
        drift=scenario.ieq_drift,
        env=scenario.ieq_initial,
        wave_rng=streams["wave"],
        ieq_rng=streams["ieq"],
        fault_ticks=fault_ticks,
    )
    return suite, streams["transport"]


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioConfigError(f"scenario file {path} must contain a mapping")
    return parse_scenario(raw, name_hint=path.stem)
