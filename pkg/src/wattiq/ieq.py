"""Behavioral models of the indoor-environment sensors and the air they read.

The temperature/humidity part mimics a calibrated digital sensor (0.1-step
output); CO2 goes the analog route: ppm -> voltage through a gas curve,
through the shared ADC, and back to integer ppm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .frontend import AdcModel, adc_sample

TEMP_RANGE = (-40.0, 80.0)
HUMID_RANGE = (0.0, 99.9)


def quantize(value: float, resolution: float) -> float:
    """Snap to the resolution grid, rounding half-up.

    Decimal arithmetic keeps a true .x5 midpoint from landing on the wrong
    side because of the binary representation of the resolution step.
    """
    steps = (Decimal(value) / Decimal(str(resolution))).to_integral_value(rounding=ROUND_HALF_UP)
    return float(steps * Decimal(str(resolution)))


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class IeqState:
    """True (unobserved) indoor conditions."""

    temperature: float
    humidity: float
    co2: float

    def __post_init__(self) -> None:
        if not TEMP_RANGE[0] <= self.temperature <= TEMP_RANGE[1]:
            raise ValueError("temperature outside modelled range")
        if not HUMID_RANGE[0] <= self.humidity <= HUMID_RANGE[1]:
            raise ValueError("humidity outside [0, 99.9]")
        if self.co2 < 0:
            raise ValueError("co2 must be >= 0")


@dataclass(frozen=True)
class FieldDrift:
    """Random-walk parameters for one environmental field.

    Each step adds gaussian noise (sigma per sqrt-second) plus a mean
    reversion pull toward the center of [lo, hi]; the result is clamped to
    the band so a preset can guarantee an envelope.
    """

    sigma: float = 0.0
    reversion: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def center(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            return 0.0
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class EnvironmentDrift:
    temperature: FieldDrift = FieldDrift()
    humidity: FieldDrift = FieldDrift()
    co2: FieldDrift = FieldDrift()


def _step_field(value: float, dt: float, drift: FieldDrift, rng: np.random.Generator) -> float:
    step = 0.0
    if drift.sigma > 0.0:
        step += drift.sigma * math.sqrt(dt) * rng.standard_normal()
    if drift.reversion > 0.0:
        step += drift.reversion * (drift.center - value) * dt
    return _clamp(value + step, drift.lo, drift.hi)


def step_environment(
    state: IeqState, dt: float, drift: EnvironmentDrift, rng: np.random.Generator
) -> IeqState:
    """Advance the environment by dt seconds of bounded mean-reverting walk."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    temp = _step_field(state.temperature, dt, drift.temperature, rng)
    humid = _step_field(state.humidity, dt, drift.humidity, rng)
    co2 = _step_field(state.co2, dt, drift.co2, rng)
    return IeqState(
        temperature=_clamp(temp, *TEMP_RANGE),
        humidity=_clamp(humid, *HUMID_RANGE),
        co2=max(co2, 0.0),
    )


@dataclass(frozen=True)
class LinearCo2Curve:
    """Straight ppm<->volts mapping; default 1 mV per ppm (pass-through grade)."""

    volts_per_ppm: float = 0.001

    def to_volts(self, ppm: float) -> float:
        return ppm * self.volts_per_ppm

    def to_ppm(self, volts: float) -> float:
        return volts / self.volts_per_ppm


@dataclass(frozen=True)
class LogCo2Curve:
    """Monotone log-linear gas curve anchored at a clean-air baseline."""

    baseline_ppm: float = 400.0
    baseline_volts: float = 0.4
    volts_per_decade: float = 1.0

    def to_volts(self, ppm: float) -> float:
        return self.baseline_volts + self.volts_per_decade * math.log10(ppm / self.baseline_ppm)

    def to_ppm(self, volts: float) -> float:
        return self.baseline_ppm * 10.0 ** ((volts - self.baseline_volts) / self.volts_per_decade)


@dataclass(frozen=True)
class IeqSensorModel:
    temp_resolution: float = 0.1
    humid_resolution: float = 0.1
    temp_noise_sigma: float = 0.0
    humid_noise_sigma: float = 0.0
    co2_noise_sigma: float = 0.0
    co2_bias_ppm: float = 0.0
    co2_curve: LinearCo2Curve | LogCo2Curve = field(default_factory=LogCo2Curve)

    def __post_init__(self) -> None:
        if self.temp_resolution <= 0 or self.humid_resolution <= 0:
            raise ValueError("resolutions must be > 0")
        if min(self.temp_noise_sigma, self.humid_noise_sigma, self.co2_noise_sigma) < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class IeqReading:
    timestamp: int
    temperature: float
    humidity: float
    co2: int


def read_temp_humidity(
    state: IeqState, model: IeqSensorModel, rng: np.random.Generator
) -> tuple[float, float]:
    """Sample the digital temperature/humidity sensor: noise, grid, range clamp."""
    temp = state.temperature
    humid = state.humidity
    if model.temp_noise_sigma > 0.0:
        temp += model.temp_noise_sigma * rng.standard_normal()
    if model.humid_noise_sigma > 0.0:
        humid += model.humid_noise_sigma * rng.standard_normal()
    temp = _clamp(quantize(temp, model.temp_resolution), *TEMP_RANGE)
    humid = _clamp(quantize(humid, model.humid_resolution), *HUMID_RANGE)
    return temp, humid


def read_co2(
    state: IeqState,
    model: IeqSensorModel,
    adc: AdcModel,
    rng: np.random.Generator,
) -> int:
    """Sample the analog air-quality channel through the shared ADC."""
    ppm = state.co2 + model.co2_bias_ppm
    if model.co2_noise_sigma > 0.0:
        ppm += model.co2_noise_sigma * rng.standard_normal()
    ppm = max(ppm, 0.1)  # the gas curve needs a positive concentration
    volts = _clamp(model.co2_curve.to_volts(ppm), 0.0, adc.reference_volts)
    counts = adc_sample(volts, adc)
    seen = model.co2_curve.to_ppm(counts * adc.lsb_volts)
    return max(int(math.floor(seen + 0.5)), 0)


def read_co2_ideal(state: IeqState, model: IeqSensorModel, rng: np.random.Generator) -> int:
    """CO2 path with the ADC bypassed (infinite-resolution override)."""
    ppm = state.co2 + model.co2_bias_ppm
    if model.co2_noise_sigma > 0.0:
        ppm += model.co2_noise_sigma * rng.standard_normal()
    return max(int(math.floor(ppm + 0.5)), 0)
