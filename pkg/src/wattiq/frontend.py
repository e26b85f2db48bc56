"""Numerical model of the non-invasive sensing chain.

Split-core current transformer into a burden resistor, AC-AC adapter with a
divider for voltage, a bias network that shifts the bipolar signals into the
ADC's unipolar range, and the ADC itself. All functions accept floats or
numpy arrays and operate elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metering import CalibrationSet, SampleWindow
from .waveforms import AnalogPair

TWO_SQRT2 = 2.0 * math.sqrt(2.0)


class FrontEndContractError(RuntimeError):
    """An internal wiring bug: a signal reached the ADC outside its range."""


def burden_resistor(aref: float, turns: float, max_primary_current: float) -> float:
    """Burden resistance that maps the peak of a full-scale primary current
    to half the ADC reference (so the biased signal just fills the range)."""
    if aref <= 0 or turns <= 0 or max_primary_current <= 0:
        raise ValueError("burden_resistor inputs must all be > 0")
    return (aref * turns) / (TWO_SQRT2 * max_primary_current)


@dataclass(frozen=True)
class CtSensor:
    """Split-core current transformer with its burden resistor."""

    turns: int = 2000
    max_primary_current: float = 100.0
    burden_resistance: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.turns < 1:
            raise ValueError("turns must be >= 1")
        if self.max_primary_current <= 0:
            raise ValueError("max_primary_current must be > 0")
        if self.burden_resistance <= 0:
            raise ValueError("burden_resistance must be > 0")


def ct_for(aref: float, turns: int = 2000, max_primary_current: float = 100.0) -> CtSensor:
    """CT with its burden sized for the given ADC reference."""
    return CtSensor(
        turns=turns,
        max_primary_current=max_primary_current,
        burden_resistance=burden_resistor(aref, turns, max_primary_current),
    )


@dataclass(frozen=True)
class VoltageTap:
    """AC-AC adapter (step-down) followed by a resistive divider."""

    adapter_gain: float = 9.0 / 230.0
    divider_ratio: float = 0.12

    def __post_init__(self) -> None:
        if self.adapter_gain <= 0:
            raise ValueError("adapter_gain must be > 0")
        if not 0.0 < self.divider_ratio <= 1.0:
            raise ValueError("divider_ratio must be in (0, 1]")


@dataclass(frozen=True)
class BiasNetwork:
    """DC offset that lifts a bipolar signal into the ADC's unipolar range."""

    bias_volts: float = 1.65
    rail_volts: float = 3.3

    def __post_init__(self) -> None:
        if not 0.0 < self.bias_volts < self.rail_volts:
            raise ValueError("bias_volts must satisfy 0 < bias < rail_volts")


@dataclass(frozen=True)
class AdcModel:
    resolution_bits: int = 12
    reference_volts: float = 3.3

    def __post_init__(self) -> None:
        if self.resolution_bits < 1:
            raise ValueError("resolution_bits must be >= 1")
        if self.reference_volts <= 0:
            raise ValueError("reference_volts must be > 0")

    @property
    def full_scale(self) -> int:
        return 2**self.resolution_bits - 1

    @property
    def lsb_volts(self) -> float:
        return self.reference_volts / self.full_scale


def ct_transduce(primary_current, sensor: CtSensor):
    """Secondary voltage across the burden for a given primary current."""
    return (primary_current / sensor.turns) * sensor.burden_resistance


def tap_voltage(mains_instantaneous, tap: VoltageTap):
    """Scaled-down image of the instantaneous mains voltage (sign preserved)."""
    return mains_instantaneous * tap.adapter_gain * tap.divider_ratio


def condition_and_bias(signal, bias: BiasNetwork):
    """Shift by the bias and clamp to [0, rail]. Returns (volts, saturated)."""
    shifted = signal + bias.bias_volts
    clamped = np.clip(shifted, 0.0, bias.rail_volts)
    saturated = np.any(shifted != clamped)
    if np.isscalar(signal):
        return float(clamped), bool(saturated)
    return clamped, bool(saturated)


def adc_sample(volts, adc: AdcModel):
    """Digitize to counts, rounding half-up. Input must lie in [0, reference].

    Out-of-range input means the conditioning stage upstream is miswired,
    which is a bug, not a data condition.
    """
    arr = np.asarray(volts, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > adc.reference_volts):
        raise FrontEndContractError(
            "ADC input outside [0, reference_volts]; conditioning stage is miswired"
        )
    counts = np.floor(arr / adc.reference_volts * adc.full_scale + 0.5)
    if np.isscalar(volts):
        return int(counts)
    return counts.astype(np.int64)


@dataclass(frozen=True)
class FrontEnd:
    """The full conditioning chain for one device, with its calibration inverse."""

    ct: CtSensor
    tap: VoltageTap = VoltageTap()
    bias: BiasNetwork = BiasNetwork()
    adc: AdcModel = AdcModel()

    @classmethod
    def default(cls) -> "FrontEnd":
        adc = AdcModel()
        return cls(ct=ct_for(adc.reference_volts), adc=adc)

    def calibration(self) -> CalibrationSet:
        return CalibrationSet(
            current_scale=self.ct.turns / self.ct.burden_resistance,
            voltage_scale=1.0 / (self.tap.adapter_gain * self.tap.divider_ratio),
            bias_counts_estimate=None,
        )

    def digitize_pair(self, pair: AnalogPair) -> SampleWindow:
        """Run a ground-truth window through the whole chain to ADC counts."""
        v_cond, v_sat = condition_and_bias(tap_voltage(pair.voltage_samples, self.tap), self.bias)
        i_cond, i_sat = condition_and_bias(ct_transduce(pair.current_samples, self.ct), self.bias)
        return SampleWindow(
            voltage_counts=adc_sample(v_cond, self.adc),
            current_counts=adc_sample(i_cond, self.adc),
            sample_count=len(pair.voltage_samples),
            rate=pair.rate,
            saturation_seen=v_sat or i_sat,
        )
