"""Measurement mathematics: counts back to physical units, RMS, active power.

The device meters over windows of exactly one second (whole mains cycles),
so the discrete RMS and mean-power sums are free of spectral leakage.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np


@dataclass(frozen=True)
class CalibrationSet:
    """Inverse of the conditioning chain.

    current_scale: primary amperes per volt at the ADC (turns / burden).
    voltage_scale: mains volts per volt at the ADC (1 / (adapter_gain * divider)).
    bias_counts_estimate: the ADC count understood to be the zero-signal bias
    point; None means "derive it from the bias network's nominal voltage".
    """

    current_scale: float
    voltage_scale: float
    bias_counts_estimate: float | None = None

    def __post_init__(self) -> None:
        if self.current_scale <= 0 or self.voltage_scale <= 0:
            raise ValueError("calibration scales must be > 0")


@dataclass(frozen=True)
class SampleWindow:
    """One acquisition window of raw ADC counts for both channels."""

    voltage_counts: np.ndarray
    current_counts: np.ndarray
    sample_count: int
    rate: float
    saturation_seen: bool = False

    def __post_init__(self) -> None:
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if len(self.voltage_counts) != self.sample_count or len(self.current_counts) != self.sample_count:
            raise ValueError("count sequences must match sample_count")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")


@dataclass(frozen=True)
class MeterReading:
    """One second's computed measurement."""

    timestamp: int
    v_rms: float
    i_rms: float
    active_power: float
    suspect: bool = False


def rms(samples) -> float:
    """Square root of the mean of the squares."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("rms of an empty sequence is undefined")
    return float(np.sqrt(np.mean(arr * arr)))


def active_power(v, i) -> float:
    """Mean of the samplewise voltage*current product."""
    v_arr = np.asarray(v, dtype=float)
    i_arr = np.asarray(i, dtype=float)
    if v_arr.size != i_arr.size:
        raise ValueError("voltage and current sequences must have equal length")
    if v_arr.size == 0:
        raise ValueError("active_power of empty sequences is undefined")
    return float(np.mean(v_arr * i_arr))


def reconstruct(window: SampleWindow, adc, bias, cal: CalibrationSet):
    """Map ADC counts back to physical units (mains volts, primary amperes).

    Subtracts the calibrated bias point in count space and applies the
    channel scales. Returns (voltage_samples, current_samples).
    """
    bias_counts = cal.bias_counts_estimate
    if bias_counts is None:
        bias_counts = bias.bias_volts / adc.lsb_volts
    v = (np.asarray(window.voltage_counts, dtype=float) - bias_counts) * adc.lsb_volts
    i = (np.asarray(window.current_counts, dtype=float) - bias_counts) * adc.lsb_volts
    return v * cal.voltage_scale, i * cal.current_scale


def compute_reading(
    window: SampleWindow, adc, bias, cal: CalibrationSet, timestamp: int
) -> MeterReading:
    """Reconstruct a window and compute RMS voltage/current and active power.

    Residual DC left by an imperfect bias estimate is removed per window
    before the RMS/power sums; real bias networks drift.
    """
    v, i = reconstruct(window, adc, bias, cal)
    v = v - v.mean()
    i = i - i.mean()
    return MeterReading(
        timestamp=timestamp,
        v_rms=rms(v),
        i_rms=rms(i),
        active_power=active_power(v, i),
        suspect=window.saturation_seen,
    )


def percent_error(measured: float, reference: float) -> float:
    """Absolute percent deviation of a measurement from its reference."""
    if reference == 0:
        raise ValueError("percent_error is undefined for a zero reference")
    return abs(measured - reference) / abs(reference) * 100.0


def format_percent(value: float, places: int = 2) -> str:
    """Fixed-point rendering with round-half-up, as printed in reports."""
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(value).quantize(quantum, rounding=ROUND_HALF_UP))
