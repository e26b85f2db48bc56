"""Ground-truth mains voltage and appliance current synthesis.

This is the "physical world" the simulated sensing chain observes: a noisy
mains sinusoid whose RMS envelope can be disturbed by scheduled swell/sag
events, and per-appliance load currents that switch on and off over time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)


class ScenarioConfigError(ValueError):
    """Raised when scenario inputs are structurally invalid."""


@dataclass(frozen=True)
class WaveformSpec:
    """Mains model: frequency, nominal RMS level, sample noise, synthesis rate."""

    mains_frequency: float = 50.0
    nominal_rms_voltage: float = 223.0
    noise_sigma: float = 0.0
    synthesis_rate: float = 2000.0
    phase0: float = 0.0

    def __post_init__(self) -> None:
        if self.mains_frequency <= 0:
            raise ValueError("mains_frequency must be > 0")
        if self.nominal_rms_voltage < 0:
            raise ValueError("nominal_rms_voltage must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        # at least 20 samples per mains cycle keeps the discrete RMS honest
        if self.synthesis_rate < 20.0 * self.mains_frequency:
            raise ValueError("synthesis_rate must be >= 20x mains_frequency")


@dataclass(frozen=True)
class LoadProfile:
    """One appliance: target RMS current, power factor, and on/off schedule.

    ``on_intervals`` are half-open [start, end) offsets in seconds from the
    scenario origin. An empty list means the load is never on.
    """

    appliance_name: str
    rms_current: float
    power_factor: float = 1.0
    on_intervals: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.rms_current < 0:
            raise ValueError("rms_current must be >= 0")
        if not 0.0 <= self.power_factor <= 1.0:
            raise ValueError("power_factor must be in [0, 1]")
        object.__setattr__(
            self, "on_intervals", tuple((float(a), float(b)) for a, b in self.on_intervals)
        )
        prev_end = -math.inf
        for start, end in self.on_intervals:
            if end <= start:
                raise ValueError(f"on_interval ({start}, {end}) must have end > start")
            if start < prev_end:
                raise ValueError("on_intervals must be time-ordered and non-overlapping")
            prev_end = end


@dataclass(frozen=True)
class GridEvent:
    """A swell or sag: a multiplicative disturbance of the RMS envelope."""

    kind: str  # "swell" | "sag"
    start: float
    duration: float
    magnitude_factor: float

    def __post_init__(self) -> None:
        if self.kind not in ("swell", "sag"):
            raise ValueError(f"unknown grid event kind {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.kind == "swell" and not self.magnitude_factor > 1.0:
            raise ValueError("swell requires magnitude_factor > 1")
        if self.kind == "sag" and not 0.0 <= self.magnitude_factor < 1.0:
            raise ValueError("sag requires 0 <= magnitude_factor < 1")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class AnalogPair:
    """Time-aligned instantaneous voltage/current sample streams."""

    start_time: float
    rate: float
    voltage_samples: np.ndarray
    current_samples: np.ndarray

    def __post_init__(self) -> None:
        if len(self.voltage_samples) != len(self.current_samples):
            raise ValueError("voltage and current streams must have equal length")


def _sample_times(window: tuple[float, float], rate: float) -> np.ndarray:
    start, duration = window
    if duration <= 0:
        raise ScenarioConfigError("window duration must be > 0")
    n = int(round(duration * rate))
    return start + np.arange(n) / rate


def _check_event_overlaps(events: list[GridEvent] | tuple[GridEvent, ...]) -> None:
    ordered = sorted(events, key=lambda e: e.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end and a.magnitude_factor != b.magnitude_factor:
            raise ScenarioConfigError(
                f"grid events overlap with different factors: "
                f"{a.kind}@{a.start}s and {b.kind}@{b.start}s"
            )


def envelope_factor(events: list[GridEvent] | tuple[GridEvent, ...], t: np.ndarray) -> np.ndarray:
    """Multiplicative RMS factor at each time in ``t`` (1.0 outside events)."""
    factor = np.ones_like(t)
    for ev in events:
        factor = np.where((t >= ev.start) & (t < ev.end), ev.magnitude_factor, factor)
    return factor


def synth_voltage(
    spec: WaveformSpec,
    events: list[GridEvent] | tuple[GridEvent, ...],
    window: tuple[float, float],
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Instantaneous mains voltage over ``window`` = (start, duration) seconds."""
    _check_event_overlaps(events)
    t = _sample_times(window, spec.synthesis_rate)
    amplitude = SQRT2 * spec.nominal_rms_voltage * envelope_factor(events, t)
    v = amplitude * np.sin(2.0 * np.pi * spec.mains_frequency * t + spec.phase0)
    if spec.noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng()
        v = v + rng.normal(0.0, spec.noise_sigma, size=t.size)
    return v


def synth_current(
    load: LoadProfile,
    spec: WaveformSpec,
    window: tuple[float, float],
) -> np.ndarray:
    """Instantaneous load current: lagging sinusoid inside on_intervals, else zero."""
    t = _sample_times(window, spec.synthesis_rate)
    lag = math.acos(load.power_factor)
    i = (
        SQRT2
        * load.rms_current
        * np.sin(2.0 * np.pi * spec.mains_frequency * t + spec.phase0 - lag)
    )
    on = np.zeros(t.size, dtype=bool)
    for start, end in load.on_intervals:
        on |= (t >= start) & (t < end)
    return np.where(on, i, 0.0)


def synth_pair(
    spec: WaveformSpec,
    loads: list[LoadProfile] | tuple[LoadProfile, ...],
    events: list[GridEvent] | tuple[GridEvent, ...],
    window: tuple[float, float],
    rng: np.random.Generator | None = None,
) -> AnalogPair:
    """Voltage plus the summed current of every load, as one aligned pair."""
    v = synth_voltage(spec, events, window, rng=rng)
    i = np.zeros_like(v)
    for load in loads:
        i = i + synth_current(load, spec, window)
    return AnalogPair(
        start_time=window[0], rate=spec.synthesis_rate, voltage_samples=v, current_samples=i
    )
