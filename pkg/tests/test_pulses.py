"""
Tests for pulse-sequence signals and the Bloch simulator.
"""

import numpy as np
import pytest

from cavity_qubit_analyzer.errors import InvalidParameterError
from cavity_qubit_analyzer.fitting.engine import FitOptions, fit
from cavity_qubit_analyzer.fitting.models import get_model
from cavity_qubit_analyzer.fitting.series import DataSeries
from cavity_qubit_analyzer.spin.pulses import (
    BlochSimulator,
    BlochState,
    DecayEnvelope,
    SequenceSpec,
    cpmg_signal,
    hahn_signal,
    precess,
    pulse_axis,
    rabi_signal,
    ramsey_signal,
    rotate,
    simulate_sequence_mc,
)


def test_bloch_state_rotations():
    """A pi/2 pulse about x tips |0> into the equator; pi inverts it."""
    state = BlochState()
    assert state.population == 0.0
    half = state.rotate(np.pi / 2)
    assert half.sy == pytest.approx(-1.0)
    assert half.sz == pytest.approx(0.0, abs=1e-15)
    full = state.rotate(np.pi)
    assert full.population == pytest.approx(1.0)
    assert full.norm == pytest.approx(1.0)


def test_bloch_state_rejects_long_vectors():
    with pytest.raises(InvalidParameterError):
        BlochState(1.0, 0.0, 1.0)


def test_rotation_preserves_norm():
    """Rotations and precession keep unit vectors on the sphere."""
    rng = np.random.default_rng(0)
    vectors = rng.normal(size=(100, 3))
    vectors /= np.linalg.norm(vectors, axis=1)[:, None]
    out = rotate(vectors, pulse_axis(0.3), rng.uniform(0, 7, 100))
    out = precess(out, rng.uniform(0, 7, 100))
    assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


def test_decay_envelope():
    envelope = DecayEnvelope(T=6.8, stretch_n=1.6, unit="us")
    assert envelope.T_ns == pytest.approx(6800.0)
    assert envelope.decay(6800.0) == pytest.approx(np.exp(-1.0))
    assert DecayEnvelope.undamped().decay(1e9) == 1.0
    with pytest.raises(InvalidParameterError):
        DecayEnvelope(T=0.0)
    with pytest.raises(InvalidParameterError):
        DecayEnvelope(T=1.0, unit="ms")


def test_rabi_signal_undamped():
    """Without damping the signal is sin^2(pi f_R a t)."""
    amplitudes = np.linspace(0.0, 1.0, 51)
    signal = rabi_signal(2.5, amplitudes, pulse_length=400.0)
    expected = np.sin(np.pi * 2.5e-3 * amplitudes * 400.0) ** 2
    assert np.allclose(signal, expected, atol=1e-12)


def test_rabi_power_sweep():
    """Power mode uses the square root of the swept value."""
    powers = np.linspace(0.0, 1.0, 11)
    assert np.allclose(
        rabi_signal(2.5, powers, sweep_mode="power"), rabi_signal(2.5, np.sqrt(powers))
    )


def test_ramsey_signal():
    envelope = DecayEnvelope(T=592.0, stretch_n=2.0, amplitude=0.5, offset=0.5)
    t = np.linspace(0.0, 2000.0, 101)
    signal = ramsey_signal(3.0, t, envelope)
    expected = 0.5 * np.cos(2 * np.pi * 3e-3 * t) * np.exp(-((t / 592.0) ** 2)) + 0.5
    assert np.allclose(signal, expected)


def test_cpmg_and_hahn():
    envelope = DecayEnvelope(T=11.0, stretch_n=2.0, unit="us")
    t = np.linspace(0.0, 30000.0, 61)
    assert np.allclose(cpmg_signal(4, t, envelope), np.exp(-((t / 11000.0) ** 2)))
    modulated = hahn_signal(t, envelope, modulation=(0.1, 0.0))
    assert np.allclose(modulated, np.exp(-((t / 11000.0) ** 2)) * np.sin(2 * np.pi * 1e-4 * t) ** 2)
    with pytest.raises(InvalidParameterError):
        cpmg_signal(2, t, envelope, modulation=(0.1, 0.0))
    with pytest.raises(InvalidParameterError):
        cpmg_signal(0, t, envelope)


def test_hahn_is_single_pulse_cpmg():
    """Closed form and Monte Carlo Hahn echoes equal CPMG-1 exactly."""
    envelope = DecayEnvelope(T=19.5, stretch_n=2.1, unit="us")
    t = np.linspace(0.0, 40000.0, 81)
    assert np.array_equal(hahn_signal(t, envelope), cpmg_signal(1, t, envelope))
    modulation = (0.25, 0.3)
    assert np.array_equal(
        hahn_signal(t, envelope, modulation), cpmg_signal(1, t, envelope, modulation)
    )

    hahn = simulate_sequence_mc(
        SequenceSpec(kind="hahn", sweep=t), 0.38, 300, T2_white=20000.0, seed=4
    )
    cpmg = simulate_sequence_mc(
        SequenceSpec(kind="cpmg", sweep=t, n_pi=1), 0.38, 300, T2_white=20000.0, seed=4
    )
    assert np.array_equal(hahn.signal, cpmg.signal)
    assert np.array_equal(hahn.standard_error, cpmg.standard_error)

def test_sequence_spec_validation():
    with pytest.raises(InvalidParameterError):
        SequenceSpec(kind="spin-lock", sweep=np.array([1.0]))
    with pytest.raises(InvalidParameterError):
        SequenceSpec(kind="cpmg", sweep=np.array([1.0]), n_pi=0)
    with pytest.raises(InvalidParameterError):
        SequenceSpec(kind="ramsey", sweep=np.array([-1.0]))
    assert SequenceSpec(kind="hahn", sweep=np.array([1.0])).pi_pulses == 1
    assert SequenceSpec(kind="cpmg", sweep=np.array([1.0]), n_pi=8).pi_pulses == 8


def test_mc_ramsey_without_noise_matches_closed_form():
    """A single detuning reproduces (1 + cos 2 pi delta t) / 2."""
    t = np.linspace(0.0, 1000.0, 41)
    spec = SequenceSpec(kind="ramsey", sweep=t, detuning=3.0)
    result = simulate_sequence_mc(spec, noise_sigma=0.0, n_samples=4)
    assert np.allclose(result.signal, 0.5 + 0.5 * np.cos(2 * np.pi * 3e-3 * t), atol=1e-12)
    assert np.allclose(result.standard_error, 0.0, atol=1e-12)


def test_mc_rabi_matches_closed_form():
    """On resonance the finite pulse gives sin^2(pi f_R a t)."""
    amplitudes = np.linspace(0.0, 1.0, 21)
    spec = SequenceSpec(kind="rabi", sweep=amplitudes, rabi_frequency=2.5, pulse_length=400.0)
    result = simulate_sequence_mc(spec, noise_sigma=0.0, n_samples=2)
    assert np.allclose(result.signal, rabi_signal(2.5, amplitudes, 400.0), atol=1e-12)


def test_hahn_refocuses_quasi_static_noise():
    """Static detunings are undone by the echo."""
    t = np.linspace(0.0, 5000.0, 26)
    for phases in ("cpmg", "cp"):
        spec = SequenceSpec(kind="hahn", sweep=t, phases=phases)
        result = simulate_sequence_mc(spec, noise_sigma=0.5, n_samples=500, seed=1)
        assert np.allclose(result.signal, result.signal[0], atol=1e-9)


def test_cpmg_white_noise_decays():
    """White phase noise decays the echo as exp(-t / T2)."""
    t = np.linspace(0.0, 4000.0, 9)
    spec = SequenceSpec(kind="cpmg", sweep=t, n_pi=4)
    result = simulate_sequence_mc(spec, 0.0, 4000, T2_white=2000.0, seed=5)
    contrast = 2.0 * result.signal - 1.0
    expected = np.exp(-t / 2000.0)
    assert np.all(np.abs(contrast - expected) < 5 * 2.0 * result.standard_error + 1e-9)


def test_t1_relaxation_bounds_norm():
    """Amplitude damping keeps Bloch vectors inside the sphere."""
    t = np.linspace(0.0, 3000.0, 7)
    spec = SequenceSpec(kind="ramsey", sweep=t, detuning=1.0)
    result = simulate_sequence_mc(spec, 0.3, 200, T2_white=1000.0, seed=2, T1=500.0)
    assert result.max_norm <= 1.0 + 1e-9
    # Long waits relax to |0>; the closing pi/2 leaves the equator
    assert result.signal[-1] == pytest.approx(0.5, abs=0.01)


def test_mc_seed_determinism():
    t = np.linspace(0.0, 2000.0, 11)
    spec = SequenceSpec(kind="ramsey", sweep=t, detuning=2.0)
    first = simulate_sequence_mc(spec, 0.4, 300, T2_white=3000.0, seed=9)
    second = simulate_sequence_mc(spec, 0.4, 300, T2_white=3000.0, seed=9)
    other = simulate_sequence_mc(spec, 0.4, 300, T2_white=3000.0, seed=10)
    assert np.array_equal(first.signal, second.signal)
    assert not np.array_equal(first.signal, other.signal)


def test_simulator_validation():
    with pytest.raises(InvalidParameterError):
        BlochSimulator(t2_white=0.0)
    with pytest.raises(InvalidParameterError):
        BlochSimulator(t1=-1.0)
    spec = SequenceSpec(kind="ramsey", sweep=np.array([10.0]))
    with pytest.raises(InvalidParameterError):
        simulate_sequence_mc(spec, 0.1, 0)


def test_more_pi_pulses_do_not_shorten_coherence():
    """Under quasi-static plus white noise, fitted T2 of CPMG-4 is not below Hahn at 3 sigma."""
    t = np.linspace(500.0, 30000.0, 60)
    model = get_model("stretched_exp")
    options = FitOptions(fixed={"offset": 0.5})
    fitted = {}
    for n_pi in (1, 4):
        spec = SequenceSpec(kind="cpmg", sweep=t, n_pi=n_pi)
        result = simulate_sequence_mc(spec, 0.38, 2000, T2_white=10000.0, seed=12)
        fitted[n_pi] = fit(model, DataSeries(t, result.signal), options=options)
        assert fitted[n_pi].converged

    T_one, T_four = fitted[1].params["T"], fitted[4].params["T"]
    combined = np.hypot(fitted[1].stderr["T"], fitted[4].stderr["T"])
    assert T_four >= T_one - 3.0 * combined
    assert T_one == pytest.approx(10000.0, rel=0.25)
