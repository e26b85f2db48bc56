"""wattiq: a software twin of a combined energy + indoor-environment monitor.

Simulated mains/appliance waveforms are pushed through a modelled sensing
chain (current transformer, voltage tap, bias network, ADC), metered at 1 Hz
(RMS voltage/current, active power), bundled with simulated air-quality
readings, and telemetered to an HTTP ingestion service that stores records,
evaluates swell/sag and comfort-band rules, and feeds a live dashboard.
"""

__version__ = "0.1.0"
