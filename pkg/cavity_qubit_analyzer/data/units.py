"""
Unit-suffixed numeric parsing for cavity qubit analyzer.

Frequencies normalize to MHz, times to ns; magnetic fields are always Gauss.
"""

import re
from typing import Dict

import numpy as np

from cavity_qubit_analyzer.errors import UsageError

FREQUENCY_UNITS: Dict[str, float] = {
    "hz": 1e-6,
    "khz": 1e-3,
    "mhz": 1.0,
    "ghz": 1e3,
    "thz": 1e6,
}

TIME_UNITS: Dict[str, float] = {
    "ps": 1e-3,
    "ns": 1.0,
    "us": 1e3,
    "µs": 1e3,
    "ms": 1e6,
    "s": 1e9,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ]*)\s*$")


def _parse(text: str, units: Dict[str, float], default_unit: str, kind: str) -> float:
    match = _QUANTITY.match(str(text))
    if match is None:
        raise UsageError(f"Cannot parse {kind} {text!r}")
    value, unit = match.groups()
    unit = (unit or default_unit).lower()
    if unit not in units:
        raise UsageError(f"Unknown {kind} unit {unit!r} in {text!r}; use one of {sorted(units)}")
    return float(value) * units[unit]


def parse_frequency(text: str, default_unit: str = "MHz") -> float:
    """
    Parse a frequency such as "1.328GHz" or "277.984 THz".

    Args:
        text: Number with optional unit suffix
        default_unit: Unit assumed for a bare number

    Returns:
        float: Frequency in MHz
    """
    return _parse(text, FREQUENCY_UNITS, default_unit, "frequency")


def parse_time(text: str, default_unit: str = "ns") -> float:
    """
    Parse a time such as "15.7", "6.8us" or "400 ns".

    Args:
        text: Number with optional unit suffix
        default_unit: Unit assumed for a bare number

    Returns:
        float: Time in ns
    """
    return _parse(text, TIME_UNITS, default_unit, "time")


def parse_field(text: str) -> float:
    """Parse a magnetic field in Gauss ("218", "218G")."""
    return _parse(text, {"g": 1.0}, "G", "field")


def parse_range(text: str, parser=float) -> np.ndarray:  # type: ignore[no-untyped-def]
    """
    Parse "min,max,step" into an inclusive grid.

    The grid steps from min by step and always ends exactly on max. A
    remainder of up to half a step is absorbed by moving the last point onto
    max; a larger remainder adds max as one extra, shorter final step.

    Args:
        text: Comma-separated start, stop and step
        parser: Converter applied to each of the three parts

    Returns:
        np.ndarray: start + step * k for k = 0..n, then stop as the last point
    """
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != 3:
        raise UsageError(f"Expected 'min,max,step', got {text!r}")
    start, stop, step = (parser(p) for p in parts)
    if step <= 0 or stop < start:
        raise UsageError(f"Range {text!r} needs step > 0 and max >= min")
    ratio = (stop - start) / step
    count = int(np.floor(ratio + 1e-9 * max(1.0, ratio)))
    values = start + step * np.arange(count + 1)
    remainder = stop - values[-1]
    if remainder > 0.5 * step or (count == 0 and remainder > 0):
        return np.append(values, stop)
    values[-1] = stop
    return values
