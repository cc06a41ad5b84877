"""
Tests for photon-stream simulation and correlation.
"""

import os
import tempfile

import numpy as np
import pytest

from cavity_qubit_analyzer.emitter.kinetics import ThreeLevelRates, g2_analytic, steady_state
from cavity_qubit_analyzer.emitter.photon_stream import (
    CorrelationHistogram,
    PhotonRecord,
    correlate,
    correlate_many,
    read_timestamps,
    simulate_ensemble,
    simulate_trajectory,
    write_timestamps,
)
from cavity_qubit_analyzer.errors import IngestionError, InvalidParameterError
from cavity_qubit_analyzer.utils.random import RandomStreams


@pytest.fixture
def rates():
    return ThreeLevelRates(pump=0.02, radiative=1 / 15.7, shelve=0.003, deshelve=1 / 75)


@pytest.fixture
def timestamp_path():
    """Temporary path for a timestamp file."""
    with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as f:
        temp_path = f.name

    yield temp_path

    # Clean up
    os.unlink(temp_path)


def test_seed_determinism(rates):
    """The same seed gives identical timestamps."""
    first = simulate_trajectory(rates, 1e5, seed=7)
    second = simulate_trajectory(rates, 1e5, seed=7)
    other = simulate_trajectory(rates, 1e5, seed=8)
    assert np.array_equal(first.timestamps, second.timestamps)
    assert not np.array_equal(first.timestamps, other.timestamps)


def test_worker_count_does_not_change_results(rates):
    """Trajectories depend on (seed, index), not on scheduling."""
    serial = simulate_ensemble(rates, 2e4, seed=3, n_trajectories=4, workers=1)
    parallel = simulate_ensemble(rates, 2e4, seed=3, n_trajectories=4, workers=3)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.timestamps, b.timestamps)
    assert not np.array_equal(serial[0].timestamps, serial[1].timestamps)


def test_photon_rate_matches_steady_state(rates):
    """The mean emission rate is radiative * p_excited."""
    record = simulate_trajectory(rates, 2e6, seed=1)
    expected = rates.radiative * steady_state(rates).p_excited
    assert record.rate == pytest.approx(expected, rel=0.03)
    assert np.all(np.diff(record.timestamps) > 0)
    assert record.timestamps[-1] <= record.duration


def test_detection_efficiency_thins_photons(rates):
    """Detection keeps a binomial fraction of photons."""
    full = simulate_trajectory(rates, 1e6, seed=2)
    thinned = simulate_trajectory(rates, 1e6, detection_efficiency=0.25, seed=2)
    assert thinned.count == pytest.approx(0.25 * full.count, rel=0.05)


def test_thinning_keeps_g2_shape(rates):
    """Lower detection efficiency changes the rate but not the normalized g2."""
    full = correlate(simulate_trajectory(rates, 1e7, seed=2), 2.0, 300.0)
    thinned = correlate(
        simulate_trajectory(rates, 1e7, detection_efficiency=0.25, seed=3), 2.0, 300.0
    )
    combined = np.hypot(full.standard_errors, thinned.standard_errors)
    within = np.abs(full.g2 - thinned.g2) <= 5 * combined
    assert np.mean(within) >= 0.99


def test_g2_converges_with_photon_count(rates):
    """The sup-norm distance to the analytic g2 shrinks from 1e4 to 1e6 photons."""
    rate = rates.radiative * steady_state(rates).p_excited
    distances = []
    for photons in (1e4, 1e6):
        record = simulate_trajectory(rates, photons / rate, seed=6)
        histogram = correlate(record, 2.0, 200.0)
        expected = g2_analytic(rates, histogram.bin_centers)
        distances.append(np.max(np.abs(histogram.g2 - expected)))
    assert distances[1] < distances[0]
    assert distances[1] < 0.1


def test_negative_seed_rejected():
    with pytest.raises(InvalidParameterError):
        RandomStreams(-1)
    with pytest.raises(InvalidParameterError):
        simulate_trajectory(ThreeLevelRates(pump=0.02, radiative=0.06), 1e3, seed=-5)


def test_no_pump_no_photons():
    """Without pumping the emitter stays dark."""
    record = simulate_trajectory(ThreeLevelRates(pump=0.0, radiative=0.1), 1e4)
    assert record.count == 0
    assert record.rate == 0.0


def test_invalid_inputs(rates):
    """Durations, efficiencies and trajectory counts are checked."""
    with pytest.raises(InvalidParameterError):
        simulate_trajectory(rates, -1.0)
    with pytest.raises(InvalidParameterError):
        simulate_trajectory(rates, 1e3, detection_efficiency=1.5)
    with pytest.raises(InvalidParameterError):
        simulate_ensemble(rates, 1e3, n_trajectories=0)
    with pytest.raises(InvalidParameterError):
        PhotonRecord(np.array([2.0, 1.0]), 10.0)


def test_correlate_known_pairs():
    """Pair delays land in the expected bins."""
    record = PhotonRecord(np.array([0.0, 1.5, 4.2, 100.0]), 200.0)
    histogram = correlate(record, bin_width=1.0, max_tau=5.0)
    # Delays within 5 ns: 1.5, 4.2, 2.7
    assert histogram.counts.tolist() == [0, 1, 1, 0, 1]
    assert histogram.bin_centers.tolist() == [0.5, 1.5, 2.5, 3.5, 4.5]
    assert histogram.normalization == pytest.approx((4 / 200.0) ** 2 * 200.0)


def test_merge_is_order_independent(rates):
    """Merged histograms do not depend on input order."""
    records = simulate_ensemble(rates, 5e4, seed=11, n_trajectories=3)
    histograms = [correlate(r, 2.0, 100.0) for r in records]
    forward = CorrelationHistogram.merge(histograms)
    backward = CorrelationHistogram.merge(histograms[::-1])
    assert np.array_equal(forward.counts, backward.counts)
    assert forward.normalization == pytest.approx(backward.normalization, rel=1e-15)

    combined = correlate_many(records, 2.0, 100.0)
    assert np.array_equal(combined.counts, forward.counts)


def test_merge_rejects_different_bins():
    """Histograms with different bin edges cannot be merged."""
    record = PhotonRecord(np.array([0.0, 1.0]), 10.0)
    with pytest.raises(InvalidParameterError):
        CorrelationHistogram.merge([correlate(record, 1.0, 5.0), correlate(record, 0.5, 5.0)])


def test_antibunching_in_simulation(rates):
    """Simulated photons are antibunched at short delay."""
    record = simulate_trajectory(rates, 3e6, seed=5)
    histogram = correlate(record, 2.0, 300.0)
    assert histogram.g2[0] < 0.3
    assert histogram.g2[100:].mean() == pytest.approx(1.0, abs=0.05)


def test_timestamp_round_trip(rates, timestamp_path):
    """Exported timestamps import unchanged."""
    record = simulate_trajectory(rates, 2e4, detection_efficiency=0.5, seed=4)
    write_timestamps(record, timestamp_path)
    loaded = read_timestamps(timestamp_path)
    assert np.array_equal(loaded.timestamps, record.timestamps)
    assert loaded.duration == record.duration
    assert loaded.detection_efficiency == record.detection_efficiency


def test_read_timestamps_rejects_xy_table(timestamp_path):
    """Two-column files are not timestamp files."""
    with open(timestamp_path, "w") as f:
        f.write("x,y\n1,2\n3,4\n")
    with pytest.raises(IngestionError):
        read_timestamps(timestamp_path)
