"""Accuracy harness: ground truth vs the full simulated sensing chain.

Each appliance is metered on its own (the way one clips a CT around one
cord), one window per second over the scenario duration; the report lists
reference, measured, and percent error per quantity, in the familiar
appliance x (power, voltage, current) layout plus the three IEQ rows.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .ieq import read_co2, read_co2_ideal, read_temp_humidity, step_environment
from .metering import active_power, compute_reading, format_percent, percent_error, rms
from .scenario import Scenario
from .waveforms import LoadProfile, ScenarioConfigError, synth_pair


@dataclass(frozen=True)
class ValidationRow:
    subject: str
    quantity: str
    unit: str
    reference: float
    measured: float

    @property
    def error_pct(self) -> float:
        return percent_error(self.measured, self.reference)


def _measure_appliance(scenario: Scenario, load: LoadProfile, ideal: bool, rng) -> tuple[float, float, float]:
    """Mean per-second (v_rms, i_rms, power) through the chain for one load."""
    spec = scenario.waveform
    if ideal:
        spec = replace(spec, noise_sigma=0.0)
    fe = scenario.front_end
    cal = fe.calibration()
    duration = int(round(scenario.duration_s))
    always_on = LoadProfile(
        appliance_name=load.appliance_name,
        rms_current=load.rms_current,
        power_factor=load.power_factor,
        on_intervals=((0.0, float(duration)),),
    )
    v_sum = i_sum = p_sum = 0.0
    for second in range(duration):
        pair = synth_pair(spec, (always_on,), (), (float(second), 1.0), rng=rng)
        if ideal:
            v = pair.voltage_samples - pair.voltage_samples.mean()
            i = pair.current_samples - pair.current_samples.mean()
            v_sum += rms(v)
            i_sum += rms(i)
            p_sum += active_power(v, i)
        else:
            window = fe.digitize_pair(pair)
            reading = compute_reading(window, fe.adc, fe.bias, cal, timestamp=second)
            v_sum += reading.v_rms
            i_sum += reading.i_rms
            p_sum += reading.active_power
    return v_sum / duration, i_sum / duration, p_sum / duration


def _measure_ieq(scenario: Scenario, ideal: bool, rng) -> tuple[float, float, float]:
    model = scenario.ieq_sensor
    drift = scenario.ieq_drift
    if ideal:
        model = replace(model, temp_noise_sigma=0.0, humid_noise_sigma=0.0, co2_noise_sigma=0.0)
        drift = replace(
            drift,
            temperature=replace(drift.temperature, sigma=0.0, reversion=0.0),
            humidity=replace(drift.humidity, sigma=0.0, reversion=0.0),
            co2=replace(drift.co2, sigma=0.0, reversion=0.0),
        )
    env = scenario.ieq_initial
    duration = int(round(scenario.duration_s))
    t_sum = h_sum = c_sum = 0.0
    for _ in range(duration):
        env = step_environment(env, 1.0, drift, rng)
        temp, humid = read_temp_humidity(env, model, rng)
        if ideal:
            co2 = read_co2_ideal(env, model, rng)
        else:
            co2 = read_co2(env, model, scenario.front_end.adc, rng)
        t_sum += temp
        h_sum += humid
        c_sum += co2
    return t_sum / duration, h_sum / duration, c_sum / duration


def run_validation(scenario: Scenario, ideal: bool = False, seed: int | None = None) -> list[ValidationRow]:
    if scenario.references is None:
        raise ScenarioConfigError("validation needs a 'references' block in the scenario")
    refs = scenario.references
    rng = np.random.default_rng(
        np.random.SeedSequence([seed if seed is not None else scenario.seed, 9000])
    )
    rows: list[ValidationRow] = []
    for load in scenario.loads:
        ref = refs.appliances.get(load.appliance_name)
        if ref is None:
            raise ScenarioConfigError(f"no reference values for appliance {load.appliance_name!r}")
        v_meas, i_meas, p_meas = _measure_appliance(scenario, load, ideal, rng)
        rows.append(ValidationRow(load.appliance_name, "power", "W", ref.power_w, p_meas))
        rows.append(ValidationRow(load.appliance_name, "voltage", "V", ref.voltage_v, v_meas))
        rows.append(ValidationRow(load.appliance_name, "current", "A", ref.current_a, i_meas))
    if refs.ieq is not None:
        temp, humid, co2 = _measure_ieq(scenario, ideal, rng)
        rows.append(ValidationRow("indoor", "temperature", "degC", refs.ieq[0], temp))
        rows.append(ValidationRow("indoor", "humidity", "%RH", refs.ieq[1], humid))
        rows.append(ValidationRow("indoor", "co2", "ppm", refs.ieq[2], co2))
    return rows


def max_error(rows: list[ValidationRow]) -> float:
    return max(row.error_pct for row in rows) if rows else 0.0


def render_table(rows: list[ValidationRow]) -> str:
    header = f"{'subject':<14}{'quantity':<13}{'unit':<6}{'reference':>12}{'measured':>14}{'% error':>9}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.subject:<14}{row.quantity:<13}{row.unit:<6}"
            f"{row.reference:>12.4f}{row.measured:>14.6f}{format_percent(row.error_pct):>9}"
        )
    return "\n".join(lines)


def rows_to_csv(rows: list[ValidationRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["subject", "quantity", "unit", "reference", "measured", "percent_error"])
    for row in rows:
        writer.writerow(
            [
                row.subject,
                row.quantity,
                row.unit,
                repr(row.reference),
                repr(row.measured),
                format_percent(row.error_pct),
            ]
        )
    return buffer.getvalue()
