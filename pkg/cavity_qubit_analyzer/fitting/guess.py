"""
Initial-guess heuristics for cavity qubit analyzer fits.
"""

import logging
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from cavity_qubit_analyzer.errors import NoSignalError
from cavity_qubit_analyzer.fitting.models import STRETCH_BOUNDS, ModelSpec
from cavity_qubit_analyzer.fitting.series import DataSeries

logger = logging.getLogger(__name__)

# Fraction of points at the edges treated as baseline
EDGE_FRACTION = 0.10
# Zero padding factor of the spectral frequency estimate
PAD_FACTOR = 8


def initial_guess(
    model: ModelSpec, data: DataSeries, fixed: Optional[Mapping[str, float]] = None
) -> Dict[str, float]:
    """
    Heuristic starting parameters.

    Peaks: baseline from the median of the outer 10%, center at the largest
    deviation, FWHM from the half-maximum crossings. Decays: log-linear
    regression of the baseline-subtracted signal. Sinusoids: dominant
    frequency of the zero-padded spectrum of the detrended signal.

    Args:
        model: Model to guess for
        data: Data to fit
        fixed: Parameters held fixed; used in place of their estimates

    Returns:
        Dict[str, float]: One value per model parameter
    """
    fixed = dict(fixed or {})
    y = data.y
    if np.ptp(y) <= 1e-12 * max(float(np.max(np.abs(y))), 1e-300):
        raise NoSignalError("No signal: y is constant")

    if model.family == "peak":
        guess = _peak_guess(model, data, fixed)
    elif model.family == "decay":
        guess = _decay_guess(model, data, fixed)
    elif model.family == "sinusoid":
        guess = _sinusoid_guess(model, data, fixed)
    elif model.family == "g2":
        guess = _g2_guess(data)
    else:
        raise NoSignalError(
            f"No initial-guess heuristic for model {model.id!r}; pass initial values"
        )

    guess.update(fixed)
    logger.debug("Initial guess for %s: %s", model.id, guess)
    return guess


def _edge_baseline(y: np.ndarray) -> float:
    count = max(1, int(np.ceil(0.5 * EDGE_FRACTION * y.size)))
    return float(np.median(np.concatenate((y[:count], y[-count:]))))


def _half_width(x: np.ndarray, signal: np.ndarray, index: int) -> float:
    """FWHM from linear interpolation of the half-maximum crossings around index."""
    half = 0.5 * signal[index]
    spacing = float(np.min(np.diff(x))) if x.size > 1 else 1.0
    edges = []
    for step in (-1, 1):
        j = index
        while 0 <= j + step < x.size and signal[j + step] > half:
            j += step
        k = j + step
        if 0 <= k < x.size:
            fraction = (signal[j] - half) / (signal[j] - signal[k])
            edges.append(abs(x[j] + fraction * (x[k] - x[j]) - x[index]))
    if not edges:
        return max(float(np.ptp(x)) / 10.0, spacing)
    return max(2.0 * float(np.mean(edges)) if len(edges) == 2 else 2.0 * edges[0], spacing)


def _peak_guess(model: ModelSpec, data: DataSeries, fixed: Mapping[str, float]) -> Dict[str, float]:
    x = data.x
    baseline = float(fixed.get("offset", _edge_baseline(data.y)))
    residual = data.y - baseline
    peaks = []
    for _ in range(model.n_peaks):
        index = int(np.argmax(np.abs(residual)))
        amplitude = float(residual[index])
        sign = 1.0 if amplitude >= 0 else -1.0
        fwhm = _half_width(x, sign * residual, index)
        center = float(x[index])
        peaks.append((center, amplitude, fwhm))
        shape = model.evaluate(_single_peak(model, amplitude, center, fwhm), x)
        residual = residual - shape

    guess: Dict[str, float] = {}
    for i, (center, amplitude, fwhm) in enumerate(sorted(peaks), start=1):
        suffix = "" if model.n_peaks == 1 else f"_{i}"
        guess[f"amplitude{suffix}"] = amplitude
        guess[f"center{suffix}"] = center
        guess[f"fwhm{suffix}"] = fwhm
    guess["offset"] = baseline
    return guess


def _single_peak(model: ModelSpec, amplitude: float, center: float, fwhm: float) -> np.ndarray:
    """Parameter vector with one active peak and zero offset."""
    vector = np.zeros(model.n_params)
    vector[2::3][: model.n_peaks] = 1.0
    vector[0:3] = (amplitude, center, fwhm)
    return vector


def _decay_guess(
    model: ModelSpec, data: DataSeries, fixed: Mapping[str, float]
) -> Dict[str, float]:
    x, y = data.x, data.y
    count = max(1, int(np.ceil(EDGE_FRACTION * y.size)))
    offset = float(fixed.get("offset", np.median(y[-count:])))
    residual = y - offset
    sign = 1.0 if np.mean(residual[:count]) >= 0 else -1.0
    positive = sign * residual
    threshold = 0.05 * positive.max()
    mask = positive > threshold
    span = float(np.ptp(x)) or 1.0

    tau = span / 3.0
    amplitude = sign * float(positive.max())
    if np.count_nonzero(mask) >= 2:
        slope, intercept = np.polyfit(x[mask], np.log(positive[mask]), 1)
        if slope < 0:
            tau = -1.0 / slope
            amplitude = sign * float(np.exp(intercept))

    if model.id == "exp_decay":
        return {"amplitude": amplitude, "tau": tau, "offset": offset}
    return {"amplitude": amplitude, "T": tau, "n": 1.0, "offset": offset}


def dominant_frequency(x: np.ndarray, y: np.ndarray, pad_factor: int = PAD_FACTOR) -> float:
    """
    Frequency (cycles per x unit) of the largest non-DC spectral peak.

    Args:
        x: Abscissa, assumed close to uniform
        y: Signal
        pad_factor: Zero padding factor

    Returns:
        float: Frequency of the spectral maximum
    """
    spacing = float(np.median(np.diff(x)))
    detrended = y - np.polyval(np.polyfit(x, y, 1), x)
    size = 1 << int(np.ceil(np.log2(pad_factor * y.size)))
    spectrum = np.abs(np.fft.rfft(detrended, n=size))
    frequencies = np.fft.rfftfreq(size, d=spacing)
    spectrum[0] = 0.0
    return float(frequencies[int(np.argmax(spectrum))])


def _phase_fit(x: np.ndarray, signal: np.ndarray, frequency: float) -> Tuple[float, float]:
    """Least-squares a cos(w x) + b sin(w x); returns (magnitude, phase of cos(w x + phase))."""
    w = 2.0 * np.pi * frequency
    basis = np.stack([np.cos(w * x), np.sin(w * x)], axis=1)
    (a, b), *_ = np.linalg.lstsq(basis, signal, rcond=None)
    return float(np.hypot(a, b)), float(np.arctan2(-b, a))


def _sinusoid_guess(
    model: ModelSpec, data: DataSeries, fixed: Mapping[str, float]
) -> Dict[str, float]:
    x, y = data.x, data.y
    span = float(np.ptp(x)) or 1.0
    peak = dominant_frequency(x, y)
    quarter = max(2, y.size // 4)
    T = span / 2.0
    n = float(np.clip(1.5, *STRETCH_BOUNDS))

    if model.id == "damped_sinusoid":
        offset = float(fixed.get("offset", np.mean(y)))
        _, phase = _phase_fit(x, y - offset, peak)
        amplitude = 0.5 * float(np.ptp(y[:quarter]))
        return {
            "amplitude": amplitude,
            "frequency": peak,
            "phase": phase,
            "T": T,
            "n": n,
            "offset": offset,
        }

    # sin^2 oscillates at twice its argument frequency
    offset = float(fixed.get("offset", np.min(y)))
    _, double_phase = _phase_fit(x, y - np.mean(y), peak)
    return {
        "amplitude": float(np.ptp(y[:quarter])),
        "frequency": 0.5 * peak,
        "phase": 0.5 * (double_phase + np.pi),
        "T": T,
        "n": n,
        "offset": offset,
    }


def _g2_guess(data: DataSeries) -> Dict[str, float]:
    delay = np.abs(data.x)
    y = data.y
    order = np.argsort(delay)
    delay, y = delay[order], y[order]
    span = float(delay.max()) or 1.0

    amp_anti = float(np.clip(1.0 - y[0], 0.05, 2.0))
    top = int(np.argmax(y))
    amp_bunch = max(float(y[top]) - 1.0, 0.01)

    rising = np.nonzero(y >= y[0] + (1.0 - 1.0 / np.e) * (y[top] - y[0]))[0]
    t1 = float(delay[rising[0]]) if rising.size and delay[rising[0]] > 0 else span / 50.0

    tail = y[top:] - 1.0
    falling = np.nonzero(tail <= (y[top] - 1.0) / np.e)[0]
    t2 = float(delay[top + falling[0]] - delay[top]) if falling.size else span / 5.0
    t2 = max(t2, 2.0 * t1)
    return {"amp_anti": amp_anti, "amp_bunch": amp_bunch, "t1": t1, "t2": t2}
