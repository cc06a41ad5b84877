"""
Pulse-sequence module for cavity qubit analyzer.

Covers closed-form Rabi, Ramsey and CPMG signal models and a Bloch-vector
Monte Carlo simulator of the |0>, |+1> two-level subspace. The Bloch
vector starts at sz = +1 (|0>); the signal is the |+1> population
(1 - sz) / 2. Times are in ns and frequencies in MHz, so a phase in
cycles is frequency * time * 1e-3.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from cavity_qubit_analyzer.errors import InvalidParameterError
from cavity_qubit_analyzer.utils.random import RandomStreams

logger = logging.getLogger(__name__)

KINDS = ("rabi", "ramsey", "hahn", "cpmg")
PHASE_CONVENTIONS = ("cpmg", "cp")
SWEEP_MODES = ("amplitude", "power")
TIME_UNITS = {"ns": 1.0, "us": 1e3}

# MHz * ns -> radians
RAD_PER_MHZ_NS = 2.0 * np.pi * 1e-3

NORM_TOLERANCE = 1e-9

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BlochState:
    """
    Bloch vector of the two-level subspace.

    Attributes:
        sx: x component
        sy: y component
        sz: z component (+1 is |0>, -1 is |+1>)
    """

    sx: float = 0.0
    sy: float = 0.0
    sz: float = 1.0

    def __post_init__(self) -> None:
        if self.norm > 1.0 + NORM_TOLERANCE:
            raise InvalidParameterError(f"Bloch vector norm {self.norm} exceeds 1")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.sx**2 + self.sy**2 + self.sz**2))

    @property
    def population(self) -> float:
        """Population of |+1>."""
        return 0.5 * (1.0 - self.sz)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @classmethod
    def from_array(cls, vector: np.ndarray) -> "BlochState":
        sx, sy, sz = (float(v) for v in vector)
        return cls(sx, sy, sz)

    def rotate(self, angle: float, phase: float = 0.0) -> "BlochState":
        """
        Apply an ideal pulse.

        Args:
            angle: Rotation angle in rad (pi/2, pi, ...)
            phase: Axis phase in rad (0 is x, pi/2 is y)

        Returns:
            BlochState: Rotated state
        """
        rotated = rotate(self.as_array()[None, :], pulse_axis(phase), angle)[0]
        return BlochState.from_array(rotated)

    def precess(self, angle: float) -> "BlochState":
        """Free precession about z by `angle` rad."""
        return BlochState.from_array(precess(self.as_array()[None, :], angle)[0])


@dataclass(frozen=True)
class DecayEnvelope:
    """
    Stretched-exponential envelope A * exp(-(t/T)^n) + offset.

    Attributes:
        T: Characteristic time (inf for no decay)
        stretch_n: Stretch exponent n
        amplitude: Amplitude A
        offset: Baseline
        unit: Unit of T, "ns" or "us"
    """

    T: float
    stretch_n: float = 1.0
    amplitude: float = 1.0
    offset: float = 0.0
    unit: str = "ns"

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise InvalidParameterError(f"T must be > 0, got {self.T}")
        if not self.stretch_n > 0:
            raise InvalidParameterError(f"Stretch exponent must be > 0, got {self.stretch_n}")
        if self.unit not in TIME_UNITS:
            raise InvalidParameterError(
                f"Unit must be one of {sorted(TIME_UNITS)}, got {self.unit!r}"
            )

    @classmethod
    def undamped(cls, amplitude: float = 1.0, offset: float = 0.0) -> "DecayEnvelope":
        return cls(float("inf"), 1.0, amplitude, offset)

    @property
    def T_ns(self) -> float:
        return self.T * TIME_UNITS[self.unit]

    def decay(self, t: ArrayLike) -> np.ndarray:
        """exp(-(t/T)^n) for t in ns."""
        t = np.abs(np.asarray(t, dtype=float))
        return np.exp(-((t / self.T_ns) ** self.stretch_n))


@dataclass(frozen=True, eq=False)
class SequenceSpec:
    """
    Pulse sequence definition.

    Attributes:
        kind: "rabi", "ramsey", "hahn" or "cpmg"
        sweep: Swept values: pulse amplitude (or power) for rabi, total
            free-evolution time in ns otherwise
        n_pi: Number of pi pulses (cpmg)
        detuning: Drive detuning in MHz
        rabi_frequency: Rabi frequency at unit amplitude in MHz
        pulse_length: Rabi pulse length in ns
        phases: "cpmg" (pi pulses about y) or "cp" (about x)
        sweep_mode: Rabi sweep variable, "amplitude" or "power"
    """

    kind: str
    sweep: np.ndarray
    n_pi: int = 1
    detuning: float = 0.0
    rabi_frequency: float = 0.0
    pulse_length: float = 400.0
    phases: str = "cpmg"
    sweep_mode: str = "amplitude"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sweep", np.asarray(self.sweep, dtype=float))
        if self.kind not in KINDS:
            raise InvalidParameterError(f"Unknown sequence kind {self.kind!r}; choose from {KINDS}")
        if self.kind == "cpmg" and self.n_pi < 1:
            raise InvalidParameterError(f"CPMG needs n_pi >= 1, got {self.n_pi}")
        if self.phases not in PHASE_CONVENTIONS:
            raise InvalidParameterError(f"Unknown phase convention {self.phases!r}")
        if self.sweep_mode not in SWEEP_MODES:
            raise InvalidParameterError(f"Unknown sweep mode {self.sweep_mode!r}")
        if self.kind == "rabi":
            if self.pulse_length <= 0:
                raise InvalidParameterError("Pulse length must be > 0")
            if self.sweep_mode == "power" and np.any(self.sweep < 0):
                raise InvalidParameterError("Power sweep values must be >= 0")
        elif np.any(self.sweep < 0):
            raise InvalidParameterError("Free-evolution times must be >= 0")

    @property
    def pi_pulses(self) -> int:
        """Number of refocusing pulses (hahn is CPMG-1, ramsey has none)."""
        if self.kind == "hahn":
            return 1
        if self.kind == "cpmg":
            return self.n_pi
        return 0

    @property
    def amplitudes(self) -> np.ndarray:
        """Rabi drive amplitudes (square root of power in power mode)."""
        return np.sqrt(self.sweep) if self.sweep_mode == "power" else self.sweep


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """
    Monte Carlo averaged signal.

    Attributes:
        sweep: Swept values
        signal: Mean |+1> population per sweep value
        standard_error: Standard error of the mean per sweep value
        max_norm: Largest Bloch-vector norm reached by any sample
    """

    sweep: np.ndarray
    signal: np.ndarray
    standard_error: np.ndarray
    max_norm: float = field(default=1.0)


def pulse_axis(phase: float) -> np.ndarray:
    """Unit rotation axis in the xy plane at the given phase (rad)."""
    return np.array([np.cos(phase), np.sin(phase), 0.0])


def rotate(vectors: np.ndarray, axis: np.ndarray, angle: ArrayLike) -> np.ndarray:
    """
    Rodrigues rotation of many Bloch vectors.

    Args:
        vectors: (n, 3) vectors
        axis: Unit axis, shape (3,) or (n, 3)
        angle: Angle in rad, scalar or (n,)

    Returns:
        np.ndarray: Rotated (n, 3) vectors
    """
    axis = np.broadcast_to(axis, vectors.shape)
    angle = np.broadcast_to(np.asarray(angle, dtype=float), vectors.shape[:1])[:, None]
    cos, sin = np.cos(angle), np.sin(angle)
    along = np.sum(axis * vectors, axis=1, keepdims=True)
    return vectors * cos + np.cross(axis, vectors) * sin + axis * along * (1.0 - cos)


def precess(vectors: np.ndarray, angle: ArrayLike) -> np.ndarray:
    """Rotate (n, 3) vectors about z by `angle` rad (scalar or per vector)."""
    angle = np.asarray(angle, dtype=float)
    cos, sin = np.cos(angle), np.sin(angle)
    x, y, z = vectors[:, 0], vectors[:, 1], vectors[:, 2]
    return np.stack([x * cos - y * sin, x * sin + y * cos, z], axis=1)


def rabi_signal(
    rabi_frequency: float,
    amplitudes: ArrayLike,
    pulse_length: float = 400.0,
    envelope: Optional[DecayEnvelope] = None,
    sweep_mode: str = "amplitude",
) -> np.ndarray:
    """
    Population after a resonant pulse of fixed length and swept strength.

    A * (1 - cos(2 pi f_R a t) * decay(a t)) / 2 + offset, which is
    A * sin^2(pi f_R a t) + offset without damping. The envelope decays in
    the equivalent nutation time a * t (ns at unit amplitude).

    Args:
        rabi_frequency: Rabi frequency at unit amplitude (MHz)
        amplitudes: Swept amplitudes, or powers when sweep_mode is "power"
        pulse_length: Pulse length in ns
        envelope: Readout contrast and damping (default: unit contrast, no decay)
        sweep_mode: "amplitude" (angle ~ a) or "power" (angle ~ sqrt(P))

    Returns:
        np.ndarray: Signal per sweep value
    """
    if pulse_length <= 0:
        raise InvalidParameterError(f"Pulse length must be > 0, got {pulse_length}")
    if sweep_mode not in SWEEP_MODES:
        raise InvalidParameterError(f"Unknown sweep mode {sweep_mode!r}")
    envelope = envelope or DecayEnvelope.undamped()
    a = np.asarray(amplitudes, dtype=float)
    if sweep_mode == "power":
        a = np.sqrt(a)
    nutation = a * pulse_length
    theta = RAD_PER_MHZ_NS * rabi_frequency * nutation
    transfer = 0.5 - 0.5 * np.cos(theta) * envelope.decay(nutation)
    return envelope.amplitude * transfer + envelope.offset


def ramsey_signal(
    detuning: float, t_sweep: ArrayLike, envelope: DecayEnvelope, phase: float = 0.0
) -> np.ndarray:
    """
    Free-induction decay A * cos(2 pi delta t + phase) * exp(-(t/T2*)^n) + offset.

    Args:
        detuning: Detuning delta in MHz
        t_sweep: Free-evolution times in ns
        envelope: T2*, stretch, amplitude and offset
        phase: Phase in rad

    Returns:
        np.ndarray: Signal per time
    """
    t = np.asarray(t_sweep, dtype=float)
    oscillation = np.cos(RAD_PER_MHZ_NS * detuning * t + phase)
    return envelope.amplitude * oscillation * envelope.decay(t) + envelope.offset


def cpmg_signal(
    n_pi: int,
    t_sweep: ArrayLike,
    envelope: DecayEnvelope,
    modulation: Optional[Tuple[float, float]] = None,
) -> np.ndarray:
    """
    Echo decay A * exp(-(t/T2)^n) + offset.

    For the Hahn echo (n_pi = 1) an optional (frequency MHz, phase rad)
    modulation multiplies the decay by sin^2(2 pi f t + phase).

    Args:
        n_pi: Number of pi pulses
        t_sweep: Total free-evolution times in ns
        envelope: T2, stretch, amplitude and offset for this n_pi
        modulation: Optional sin^2 modulation (Hahn only)

    Returns:
        np.ndarray: Signal per time
    """
    if n_pi < 1:
        raise InvalidParameterError(f"n_pi must be >= 1, got {n_pi}")
    t = np.asarray(t_sweep, dtype=float)
    decay = envelope.decay(t)
    if modulation is not None:
        if n_pi != 1:
            raise InvalidParameterError("sin^2 modulation applies to the Hahn echo only")
        frequency, phase = modulation
        decay = decay * np.sin(RAD_PER_MHZ_NS * frequency * t + phase) ** 2
    return envelope.amplitude * decay + envelope.offset


def hahn_signal(
    t_sweep: ArrayLike, envelope: DecayEnvelope, modulation: Optional[Tuple[float, float]] = None
) -> np.ndarray:
    """Hahn echo, the n_pi = 1 case of cpmg_signal."""
    return cpmg_signal(1, t_sweep, envelope, modulation)


class BlochSimulator:
    """
    Propagates an ensemble of Bloch vectors through a pulse sequence.

    Pulses are instantaneous ideal rotations except the Rabi pulse, which
    lasts `pulse_length` and feels each sample's detuning. Free evolution
    applies precession, optional white phase noise and optional T1
    relaxation toward |0>.
    """

    def __init__(self, t2_white: Optional[float] = None, t1: float = float("inf")):
        """
        Initialize the simulator.

        Args:
            t2_white: Coherence time of white phase noise in ns (None: off)
            t1: Longitudinal relaxation time in ns
        """
        if t2_white is not None and t2_white <= 0:
            raise InvalidParameterError(f"T2_white must be > 0, got {t2_white}")
        if t1 <= 0:
            raise InvalidParameterError(f"T1 must be > 0, got {t1}")
        self.t2_white = t2_white
        self.t1 = t1

    def free_evolution(
        self,
        vectors: np.ndarray,
        detunings: np.ndarray,
        duration: float,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        """
        Evolve without drive for `duration` ns.

        Args:
            vectors: (n, 3) Bloch vectors
            detunings: Per-sample detuning in MHz
            duration: Time in ns
            rng: Generator for white phase kicks (required when t2_white is set)

        Returns:
            np.ndarray: Evolved vectors
        """
        if duration <= 0:
            return vectors
        angle = RAD_PER_MHZ_NS * detunings * duration
        if self.t2_white is not None:
            if rng is None:
                raise InvalidParameterError("White phase noise needs a random generator")
            angle = angle + rng.normal(0.0, np.sqrt(2.0 * duration / self.t2_white), len(vectors))
        vectors = precess(vectors, angle)
        if np.isfinite(self.t1):
            transverse = np.exp(-duration / (2.0 * self.t1))
            longitudinal = np.exp(-duration / self.t1)
            vectors = vectors * np.array([transverse, transverse, 1.0])
            vectors[:, 2] = 1.0 - (1.0 - vectors[:, 2]) * longitudinal
        return vectors

    def rabi_pulse(
        self, vectors: np.ndarray, detunings: np.ndarray, rabi_frequency: float, duration: float
    ) -> np.ndarray:
        """Finite resonant drive about x, tilted by each sample's detuning."""
        drive = np.stack(
            [np.full(len(vectors), rabi_frequency), np.zeros(len(vectors)), detunings], axis=1
        )
        strength = np.linalg.norm(drive, axis=1)
        safe = np.where(strength > 0, strength, 1.0)[:, None]
        axis = np.where(strength[:, None] > 0, drive / safe, np.array([1.0, 0.0, 0.0]))
        return rotate(vectors, axis, RAD_PER_MHZ_NS * strength * duration)

    def run(
        self,
        spec: SequenceSpec,
        sweep_value: float,
        detunings: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        """
        Run one sweep point for every sample.

        Args:
            spec: Sequence definition
            sweep_value: Amplitude (rabi) or total free time in ns
            detunings: Per-sample detuning in MHz
            rng: Generator for white phase kicks

        Returns:
            np.ndarray: Final (n, 3) Bloch vectors
        """
        vectors = np.tile([0.0, 0.0, 1.0], (len(detunings), 1))
        x_axis = pulse_axis(0.0)

        if spec.kind == "rabi":
            amplitude = np.sqrt(sweep_value) if spec.sweep_mode == "power" else sweep_value
            return self.rabi_pulse(
                vectors, detunings, spec.rabi_frequency * amplitude, spec.pulse_length
            )

        vectors = rotate(vectors, x_axis, np.pi / 2)
        if spec.kind == "ramsey":
            vectors = self.free_evolution(vectors, detunings, sweep_value, rng)
        else:
            n = spec.pi_pulses
            pi_axis = pulse_axis(np.pi / 2 if spec.phases == "cpmg" else 0.0)
            spacing = sweep_value / n
            for _ in range(n):
                vectors = self.free_evolution(vectors, detunings, spacing / 2, rng)
                vectors = rotate(vectors, pi_axis, np.pi)
                vectors = self.free_evolution(vectors, detunings, spacing / 2, rng)
        return rotate(vectors, x_axis, np.pi / 2)


def simulate_sequence_mc(
    spec: SequenceSpec,
    noise_sigma: float,
    n_samples: int,
    T2_white: Optional[float] = None,
    seed: int = 0,
    T1: float = float("inf"),
) -> SimulationResult:
    """
    Average a pulse sequence over quasi-static Gaussian detuning noise.

    Each sample gets a static detuning spec.detuning + N(0, noise_sigma)
    drawn from substream 0; white phase kicks for sweep point j come from
    substream j + 1.

    Args:
        spec: Sequence definition
        noise_sigma: Width of the static detuning distribution (MHz)
        n_samples: Number of noise samples
        T2_white: Optional white-noise coherence time (ns)
        seed: Root seed
        T1: Longitudinal relaxation time (ns)

    Returns:
        SimulationResult: Mean |+1> population per sweep value
    """
    if n_samples < 1:
        raise InvalidParameterError(f"n_samples must be >= 1, got {n_samples}")
    if noise_sigma < 0:
        raise InvalidParameterError(f"noise_sigma must be >= 0, got {noise_sigma}")

    streams = RandomStreams(seed)
    detunings = spec.detuning + noise_sigma * streams.stream(0).standard_normal(n_samples)
    simulator = BlochSimulator(T2_white, T1)

    signal = np.empty(spec.sweep.size)
    error = np.empty(spec.sweep.size)
    max_norm = 0.0
    for j, value in enumerate(spec.sweep):
        rng = streams.stream(j + 1) if T2_white is not None else None
        vectors = simulator.run(spec, float(value), detunings, rng)
        max_norm = max(max_norm, float(np.linalg.norm(vectors, axis=1).max()))
        population = 0.5 * (1.0 - vectors[:, 2])
        signal[j] = population.mean()
        error[j] = population.std(ddof=1) / np.sqrt(n_samples) if n_samples > 1 else 0.0

    if max_norm > 1.0 + NORM_TOLERANCE:
        logger.error("Bloch norm reached %.12g", max_norm)
    logger.debug(
        "Simulated %s over %d points with %d samples", spec.kind, spec.sweep.size, n_samples
    )
    return SimulationResult(spec.sweep.copy(), signal, error, max_norm)
