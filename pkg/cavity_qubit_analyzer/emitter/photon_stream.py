"""
Photon stream simulation and correlation module for cavity qubit analyzer.

Trajectories of the three-level emitter are sampled exactly with competing
exponential waiting times; detections are correlated by direct pair
counting.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np

from cavity_qubit_analyzer.data.input import TIMESTAMP_HEADER, CsvInput, CsvTable
from cavity_qubit_analyzer.emitter.kinetics import ThreeLevelRates
from cavity_qubit_analyzer.errors import IngestionError, InvalidParameterError
from cavity_qubit_analyzer.utils.random import RandomStreams

logger = logging.getLogger(__name__)

# Cycles drawn per vectorized block are capped to bound memory
MAX_BLOCK = 2_000_000


@dataclass(frozen=True, eq=False)
class PhotonRecord:
    """
    Detection timestamps from one simulated (or measured) run.

    Attributes:
        timestamps: Strictly increasing detection times in ns
        duration: Total observation time in ns
        detection_efficiency: Probability that an emitted photon is detected
        seed: Seed of the run, if simulated
    """

    timestamps: np.ndarray
    duration: float
    detection_efficiency: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        timestamps = np.asarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", timestamps)
        if self.duration <= 0:
            raise InvalidParameterError(f"Duration must be > 0, got {self.duration}")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise InvalidParameterError("Detection efficiency must lie in [0, 1]")
        if timestamps.size:
            if np.any(np.diff(timestamps) <= 0):
                raise InvalidParameterError("Timestamps must be strictly increasing")
            if timestamps[0] < 0 or timestamps[-1] > self.duration:
                raise InvalidParameterError("Timestamps must lie in [0, duration]")

    @property
    def count(self) -> int:
        return int(self.timestamps.size)

    @property
    def rate(self) -> float:
        """Mean detection rate in 1/ns."""
        return self.count / self.duration


@dataclass(frozen=True, eq=False)
class CorrelationHistogram:
    """
    Start-stop coincidence histogram of photon pairs.

    Attributes:
        bin_edges: Delay bin edges in ns
        counts: Pair counts per bin
        normalization: Counts per bin expected for an uncorrelated source
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    normalization: float

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.bin_edges) - 1:
            raise InvalidParameterError("counts must have one entry per bin")

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def g2(self) -> np.ndarray:
        """Normalized correlation counts / normalization (NaN when empty)."""
        if self.normalization <= 0:
            return np.full(len(self.counts), np.nan)
        return self.counts / self.normalization

    @property
    def standard_errors(self) -> np.ndarray:
        """Poisson standard error of g2 per bin."""
        if self.normalization <= 0:
            return np.full(len(self.counts), np.nan)
        return np.sqrt(np.maximum(self.counts, 1)) / self.normalization

    @classmethod
    def merge(cls, histograms: Iterable["CorrelationHistogram"]) -> "CorrelationHistogram":
        """
        Sum histograms that share bin edges.

        Counts and normalizations add, so the result does not depend on
        the order of the inputs.

        Args:
            histograms: Histograms to combine

        Returns:
            CorrelationHistogram: Combined histogram
        """
        histograms = list(histograms)
        if not histograms:
            raise InvalidParameterError("Nothing to merge")
        edges = histograms[0].bin_edges
        for h in histograms[1:]:
            if not np.array_equal(h.bin_edges, edges):
                raise InvalidParameterError("Histograms have different bin edges")
        counts = np.sum([h.counts for h in histograms], axis=0)
        normalization = float(sum(h.normalization for h in histograms))
        return cls(edges.copy(), counts, normalization)


def simulate_trajectory(
    rates: ThreeLevelRates,
    duration: float,
    detection_efficiency: float = 1.0,
    seed: int = 0,
    trajectory_index: int = 0,
) -> PhotonRecord:
    """
    Simulate detection times of a single emitter starting in the ground state.

    Each cycle ground -> excited -> (ground | dark -> ground) is sampled by
    drawing one exponential waiting time per allowed transition and letting
    the earliest one fire. Radiative jumps emit a photon, kept with
    probability `detection_efficiency`.

    Args:
        rates: Kinetic rates in 1/ns
        duration: Simulated time in ns
        detection_efficiency: Detection probability per photon
        seed: Root seed
        trajectory_index: Substream index of this trajectory

    Returns:
        PhotonRecord: Detected photon timestamps
    """
    if duration <= 0:
        raise InvalidParameterError(f"Duration must be > 0, got {duration}")
    if not 0.0 <= detection_efficiency <= 1.0:
        raise InvalidParameterError(
            f"Detection efficiency must lie in [0, 1], got {detection_efficiency}"
        )
    if rates.pump == 0 or detection_efficiency == 0:
        return PhotonRecord(np.empty(0), duration, detection_efficiency, seed)

    rng = RandomStreams(seed).stream(trajectory_index)
    out_rate = rates.radiative + rates.shelve
    mean_cycle = 1.0 / rates.pump + 1.0 / out_rate
    if rates.shelve > 0 and rates.deshelve > 0:
        mean_cycle += rates.shelve / out_rate / rates.deshelve
    block = int(min(max(1.05 * duration / mean_cycle + 64, 64), MAX_BLOCK))

    emissions: List[np.ndarray] = []
    start = 0.0
    while start < duration:
        dwell_ground = rng.exponential(1.0 / rates.pump, block)
        wait_radiative = rng.exponential(1.0 / rates.radiative, block)
        if rates.shelve > 0:
            wait_shelve = rng.exponential(1.0 / rates.shelve, block)
        else:
            wait_shelve = np.full(block, np.inf)
        emitted = wait_radiative < wait_shelve
        dwell_excited = np.minimum(wait_radiative, wait_shelve)
        if rates.deshelve > 0:
            dwell_dark = rng.exponential(1.0 / rates.deshelve, block)
        else:
            dwell_dark = np.full(block, np.inf)
        dwell_dark = np.where(emitted, 0.0, dwell_dark)

        ends = start + np.cumsum(dwell_ground + dwell_excited + dwell_dark)
        starts = np.concatenate(([start], ends[:-1]))
        times = starts + dwell_ground + dwell_excited
        emissions.append(times[emitted & (times <= duration)])
        start = float(ends[-1])

    emitted_times = np.concatenate(emissions) if emissions else np.empty(0)
    kept = rng.random(emitted_times.size) < detection_efficiency
    logger.debug(
        "Trajectory %d: %d photons emitted, %d detected",
        trajectory_index,
        emitted_times.size,
        int(kept.sum()),
    )
    return PhotonRecord(emitted_times[kept], duration, detection_efficiency, seed)


def simulate_ensemble(
    rates: ThreeLevelRates,
    duration: float,
    detection_efficiency: float = 1.0,
    seed: int = 0,
    n_trajectories: int = 1,
    workers: int = 1,
) -> List[PhotonRecord]:
    """
    Simulate independent trajectories on derived substreams.

    Args:
        rates: Kinetic rates
        duration: Duration of each trajectory in ns
        detection_efficiency: Detection probability per photon
        seed: Root seed
        n_trajectories: Number of trajectories
        workers: Worker threads

    Returns:
        List[PhotonRecord]: Records in trajectory-index order
    """
    if n_trajectories < 1:
        raise InvalidParameterError("n_trajectories must be >= 1")

    def run(index: int) -> PhotonRecord:
        return simulate_trajectory(rates, duration, detection_efficiency, seed, index)

    if workers <= 1:
        return [run(i) for i in range(n_trajectories)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(n_trajectories)))


def correlate(record: PhotonRecord, bin_width: float, max_tau: float) -> CorrelationHistogram:
    """
    Histogram the delays of all ordered photon pairs up to max_tau.

    The sweep walks over lags k = 1, 2, ... comparing t[i + k] - t[i]
    until no pair at that lag falls inside the window.

    Args:
        record: Photon timestamps
        bin_width: Bin width in ns
        max_tau: Largest delay in ns

    Returns:
        CorrelationHistogram: Counts with normalization rate^2 * duration * bin_width
    """
    if bin_width <= 0:
        raise InvalidParameterError(f"bin_width must be > 0, got {bin_width}")
    if max_tau < bin_width:
        raise InvalidParameterError("max_tau must be >= bin_width")

    n_bins = int(np.floor(max_tau / bin_width + 1e-9))
    edges = bin_width * np.arange(n_bins + 1)
    top = edges[-1]
    counts = np.zeros(n_bins, dtype=np.int64)

    t = record.timestamps
    for lag in range(1, t.size):
        delays = t[lag:] - t[:-lag]
        inside = delays <= top
        if not inside.any():
            break
        index = np.minimum((delays[inside] / bin_width).astype(np.int64), n_bins - 1)
        counts += np.bincount(index, minlength=n_bins)

    normalization = record.rate**2 * record.duration * bin_width
    return CorrelationHistogram(edges, counts, normalization)


def correlate_many(
    records: Iterable[PhotonRecord], bin_width: float, max_tau: float
) -> CorrelationHistogram:
    """Correlate each record separately and merge the histograms."""
    return CorrelationHistogram.merge(correlate(r, bin_width, max_tau) for r in records)


def write_timestamps(record: PhotonRecord, path: Union[str, Path]) -> None:
    """
    Export timestamps as a single-column CSV under a `# timestamps_ns` header.

    Args:
        record: Photon record
        path: Output file path
    """
    comments = [
        TIMESTAMP_HEADER,
        f"duration_ns={record.duration!r}",
        f"detection_efficiency={record.detection_efficiency!r}",
    ]
    if record.seed is not None:
        comments.append(f"seed={record.seed}")
    CsvTable({TIMESTAMP_HEADER: record.timestamps}, comments).save(path)


def read_timestamps(path: Union[str, Path], duration: Optional[float] = None) -> PhotonRecord:
    """
    Import a timestamp CSV written by write_timestamps (or by hand).

    Args:
        path: CSV file path
        duration: Observation time; defaults to the `duration_ns` comment or
            the last timestamp

    Returns:
        PhotonRecord: Imported record
    """
    table = CsvInput(path).read()
    if not table.is_timestamp_table:
        raise IngestionError(f"{path} lacks the '# {TIMESTAMP_HEADER}' single-column format")
    metadata = {}
    for comment in table.comments:
        key, sep, value = comment.partition("=")
        if sep:
            metadata[key.strip()] = value.strip()

    timestamps = np.sort(table.column(TIMESTAMP_HEADER))
    if duration is None:
        if "duration_ns" in metadata:
            duration = float(metadata["duration_ns"])
        elif timestamps.size:
            duration = float(timestamps[-1])
        else:
            raise IngestionError(f"{path} is empty and declares no duration")
    efficiency = float(metadata.get("detection_efficiency", 1.0))
    seed = int(metadata["seed"]) if "seed" in metadata else None
    return PhotonRecord(timestamps, duration, efficiency, seed)
