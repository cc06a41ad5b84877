"""
Three-level rate-equation model for cavity qubit analyzer.

Levels are ordered ground, excited, dark. Times are in nanoseconds and rates
in 1/ns throughout.
"""

import cmath
import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from cavity_qubit_analyzer.errors import (
    DomainError,
    InvalidParameterError,
    NoSteadyStateError,
)

logger = logging.getLogger(__name__)

GROUND, EXCITED, DARK = 0, 1, 2

# Relative eigenvalue gap below which the spectral formula is abandoned
DEGENERACY_GAP = 1e-8

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ThreeLevelRates:
    """
    Kinetic rates of the ground/excited/dark system, in 1/ns.

    Attributes:
        pump: ground -> excited
        radiative: excited -> ground (photon emitting)
        shelve: excited -> dark
        deshelve: dark -> ground
    """

    pump: float
    radiative: float
    shelve: float = 0.0
    deshelve: float = 0.0

    def __post_init__(self) -> None:
        for name in ("pump", "radiative", "shelve", "deshelve"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise InvalidParameterError(f"Rate {name} must be finite and >= 0, got {value}")
        if self.radiative <= 0:
            raise InvalidParameterError(f"Radiative rate must be > 0, got {self.radiative}")

    @property
    def tau_dark(self) -> float:
        """Dark-state lifetime 1/deshelve (inf when deshelve is 0)."""
        return 1.0 / self.deshelve if self.deshelve > 0 else float("inf")

    @property
    def excited_lifetime(self) -> float:
        """Excited-state lifetime including the shelving channel."""
        return 1.0 / (self.radiative + self.shelve)

    @classmethod
    def from_lifetimes(
        cls,
        tau_radiative: float,
        tau_dark: float = float("inf"),
        pump: float = 0.0,
        shelve: float = 0.0,
    ) -> "ThreeLevelRates":
        """
        Build rates from lifetimes in ns.

        Args:
            tau_radiative: 1/radiative
            tau_dark: 1/deshelve (inf for a permanent dark state)
            pump: Pump rate
            shelve: Shelving rate

        Returns:
            ThreeLevelRates: The rate set
        """
        if tau_radiative <= 0 or tau_dark <= 0:
            raise InvalidParameterError("Lifetimes must be > 0")
        deshelve = 0.0 if np.isinf(tau_dark) else 1.0 / tau_dark
        return cls(pump=pump, radiative=1.0 / tau_radiative, shelve=shelve, deshelve=deshelve)

    def with_radiative(self, radiative: float) -> "ThreeLevelRates":
        """Copy with a different radiative rate (cavity on/off configurations)."""
        return ThreeLevelRates(self.pump, radiative, self.shelve, self.deshelve)


@dataclass(frozen=True)
class PopulationState:
    """
    Level populations (probabilities) of the three-level system.
    """

    p_ground: float
    p_excited: float
    p_dark: float = 0.0

    def __post_init__(self) -> None:
        values = (self.p_ground, self.p_excited, self.p_dark)
        if any(not (-1e-9 <= v <= 1 + 1e-9) for v in values):
            raise InvalidParameterError(f"Populations must lie in [0, 1], got {values}")
        if abs(sum(values) - 1.0) > 1e-9:
            raise InvalidParameterError(f"Populations must sum to 1, got {sum(values)}")

    @classmethod
    def ground(cls) -> "PopulationState":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def excited(cls) -> "PopulationState":
        return cls(0.0, 1.0, 0.0)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "PopulationState":
        """
        Build a state from a length-3 vector, removing round-off.

        Args:
            values: Populations (ground, excited, dark)

        Returns:
            PopulationState: Clipped and renormalized state
        """
        p = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
        p = p / p.sum()
        return cls(float(p[GROUND]), float(p[EXCITED]), float(p[DARK]))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_ground, self.p_excited, self.p_dark])


def rate_matrix(rates: ThreeLevelRates) -> np.ndarray:
    """
    Generator of the rate equations dp/dt = M p.

    Column j holds the flow out of level j, so every column sums to zero.

    Args:
        rates: Kinetic rates

    Returns:
        np.ndarray: 3x3 rate matrix
    """
    out_excited = rates.radiative + rates.shelve
    return np.array(
        [
            [-rates.pump, rates.radiative, rates.deshelve],
            [rates.pump, -out_excited, 0.0],
            [0.0, rates.shelve, -rates.deshelve],
        ]
    )


def eigenvalues(rates: ThreeLevelRates) -> np.ndarray:
    """
    Eigenvalues of the rate matrix from its characteristic polynomial.

    The polynomial is lambda * (lambda^2 + s*lambda + c); the quadratic roots
    are taken in the cancellation-free form.

    Args:
        rates: Kinetic rates

    Returns:
        np.ndarray: Complex eigenvalues [0, slow, fast]
    """
    s = rates.pump + rates.radiative + rates.shelve + rates.deshelve
    c = (
        rates.pump * rates.shelve
        + rates.pump * rates.deshelve
        + (rates.radiative + rates.shelve) * rates.deshelve
    )
    root = cmath.sqrt(s * s - 4.0 * c)
    fast = (-s - root) / 2.0
    slow = c / fast if fast != 0 else (-s + root) / 2.0
    return np.array([0.0, slow, fast], dtype=complex)


def _is_degenerate(lam: np.ndarray) -> bool:
    scale = float(np.max(np.abs(lam)))
    if scale == 0.0:
        return True
    gaps = [abs(lam[i] - lam[j]) for i in range(3) for j in range(i + 1, 3)]
    return min(gaps) < DEGENERACY_GAP * scale


def _spectral_projectors(matrix: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # Sylvester's formula: A_i = prod_{j != i} (M - lam_j I) / (lam_i - lam_j)
    identity = np.eye(3)
    projectors = np.empty((3, 3, 3), dtype=complex)
    for i in range(3):
        term = identity.astype(complex)
        for j in range(3):
            if j != i:
                term = term @ (matrix - lam[j] * identity) / (lam[i] - lam[j])
        projectors[i] = term
    return projectors


def propagator(rates: ThreeLevelRates, t: ArrayLike) -> np.ndarray:
    """
    Transition matrix exp(M t) for one or many times.

    Uses the spectral decomposition of the rate matrix and falls back to a
    matrix exponential when eigenvalues are nearly degenerate.

    Args:
        rates: Kinetic rates
        t: Time or array of times in ns (>= 0)

    Returns:
        np.ndarray: Array of shape t.shape + (3, 3)
    """
    times = np.asarray(t, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise InvalidParameterError("Evolution times must be finite and >= 0")

    matrix = rate_matrix(rates)
    lam = eigenvalues(rates)

    if _is_degenerate(lam):
        logger.debug("Near-degenerate eigenvalues %s, using expm", lam)
        flat = [expm(matrix * ti) for ti in times.ravel()]
        result = np.array(flat).reshape(times.shape + (3, 3))
    else:
        projectors = _spectral_projectors(matrix, lam)
        weights = np.exp(np.multiply.outer(times, lam))
        result = np.einsum("...i,ijk->...jk", weights, projectors).real

    # exp(M * 0) is the identity exactly
    result[times == 0] = np.eye(3)
    return result


def evolve(
    rates: ThreeLevelRates,
    initial: PopulationState,
    t: float,
    method: str = "eigen",
) -> PopulationState:
    """
    Evolve populations for a time t.

    Args:
        rates: Kinetic rates
        initial: Starting populations
        t: Time in ns (>= 0)
        method: "eigen" (closed form) or "ode" (adaptive integration)

    Returns:
        PopulationState: Populations at time t
    """
    if t < 0:
        raise InvalidParameterError(f"Time must be >= 0, got {t}")
    if method == "eigen":
        values = propagator(rates, t) @ initial.as_array()
    elif method == "ode":
        values = evolve_ode(rates, initial, np.array([t]))[0]
    else:
        raise InvalidParameterError(f"Unknown evolution method {method!r}")
    return PopulationState.from_array(values)


def populations(rates: ThreeLevelRates, initial: PopulationState, times: np.ndarray) -> np.ndarray:
    """
    Population trajectory on a time grid.

    Args:
        rates: Kinetic rates
        initial: Starting populations
        times: Times in ns (>= 0)

    Returns:
        np.ndarray: Array of shape (len(times), 3)
    """
    return propagator(rates, np.asarray(times, dtype=float)) @ initial.as_array()


def evolve_ode(
    rates: ThreeLevelRates,
    initial: PopulationState,
    times: np.ndarray,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> np.ndarray:
    """
    Integrate the rate equations numerically.

    Args:
        rates: Kinetic rates
        initial: Starting populations
        times: Increasing output times in ns
        rtol: Relative tolerance
        atol: Absolute tolerance

    Returns:
        np.ndarray: Array of shape (len(times), 3)
    """
    times = np.asarray(times, dtype=float)
    matrix = rate_matrix(rates)
    t_end = float(times.max()) if times.size else 0.0
    if t_end == 0.0:
        return np.tile(initial.as_array(), (times.size, 1))
    solution = solve_ivp(
        lambda _t, p: matrix @ p,
        (0.0, t_end),
        initial.as_array(),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    return solution.y.T


def steady_state(rates: ThreeLevelRates) -> PopulationState:
    """
    Stationary populations (null vector of the rate matrix).

    Args:
        rates: Kinetic rates

    Returns:
        PopulationState: Steady state

    Raises:
        NoSteadyStateError: If the excited level is empty in steady state
    """
    if rates.pump == 0:
        raise NoSteadyStateError("Pump rate is zero: no steady state with excited population")
    if rates.shelve > 0 and rates.deshelve == 0:
        raise NoSteadyStateError("Dark state never empties: population is trapped")
    excited = rates.pump / (rates.radiative + rates.shelve)
    dark = rates.shelve * excited / rates.deshelve if rates.shelve > 0 else 0.0
    return PopulationState.from_array(np.array([1.0, excited, dark]))


def g2_analytic(rates: ThreeLevelRates, tau: ArrayLike) -> ArrayLike:
    """
    Second-order correlation of the rate model.

    After a detection the emitter is in the ground state, so
    g2(tau) = p_excited(|tau| | ground) / p_excited(steady state).

    Args:
        rates: Kinetic rates (pump > 0)
        tau: Delay or array of delays in ns

    Returns:
        float or np.ndarray: g2 values
    """
    stationary = steady_state(rates)
    delays = np.abs(np.asarray(tau, dtype=float))
    conditional = propagator(rates, delays)[..., EXCITED, GROUND]
    g2 = conditional / stationary.p_excited
    if np.ndim(g2) == 0:
        return float(g2)
    return g2


def g2_decay_constants(rates: ThreeLevelRates) -> Tuple[float, float]:
    """
    Time constants of the two nonzero relaxation modes.

    Returns:
        Tuple[float, float]: (fast, slow) time constants in ns
    """
    lam = eigenvalues(rates)[1:]
    if np.any(np.abs(lam.imag) > 1e-12 * np.abs(lam).max()):
        raise DomainError(f"Relaxation modes are oscillatory: {lam}")
    fast, slow = sorted(1.0 / np.abs(lam.real))
    return float(fast), float(slow)


def g2_fit_parameters(rates: ThreeLevelRates) -> Dict[str, float]:
    """
    Map rates onto the amplitudes/time constants of g2_fit_model.

    The antibunching term is the mode with the negative weight, so the
    mapping holds whichever mode is faster.

    Args:
        rates: Kinetic rates (pump > 0, real and distinct relaxation modes)

    Returns:
        Dict[str, float]: amp_anti, amp_bunch, t1, t2
    """
    lam = eigenvalues(rates)
    if _is_degenerate(lam):
        raise DomainError("Relaxation modes are degenerate; no unique mapping")
    if np.any(np.abs(lam.imag) > 1e-12 * np.abs(lam).max()):
        raise DomainError(f"Relaxation modes are oscillatory: {lam}")

    stationary = steady_state(rates)
    projectors = _spectral_projectors(rate_matrix(rates), lam)
    weights = projectors[1:, EXCITED, GROUND].real / stationary.p_excited
    rates_out = -lam[1:].real

    anti = int(np.argmin(weights))
    bunch = 1 - anti
    return {
        "amp_anti": float(-weights[anti]),
        "amp_bunch": float(weights[bunch]),
        "t1": float(1.0 / rates_out[anti]),
        "t2": float(1.0 / rates_out[bunch]),
    }


def g2_curve(tau: ArrayLike, amp_anti: float, amp_bunch: float, t1: float, t2: float) -> ArrayLike:
    """Unchecked two-exponential g2 curve shared with the fit registry."""
    delays = np.abs(np.asarray(tau, dtype=float))
    return 1.0 - amp_anti * np.exp(-delays / t1) + amp_bunch * np.exp(-delays / t2)


def g2_fit_model(params: Mapping[str, float], tau: ArrayLike) -> ArrayLike:
    """
    Phenomenological g2 used to fit measured correlations.

    g2 = 1 - amp_anti * exp(-|tau|/t1) + amp_bunch * exp(-|tau|/t2). With
    amp_anti = 1 + amp_bunch it has the functional form of g2_analytic.

    Args:
        params: amp_anti, amp_bunch, t1, t2
        tau: Delay or array of delays in ns

    Returns:
        float or np.ndarray: g2 values
    """
    t1, t2 = params["t1"], params["t2"]
    if t1 <= 0 or t2 <= 0:
        raise InvalidParameterError(f"Time constants must be > 0, got t1={t1}, t2={t2}")
    value = g2_curve(tau, params["amp_anti"], params["amp_bunch"], t1, t2)
    if np.ndim(value) == 0:
        return float(value)
    return value


def excited_decay_trace(rates: ThreeLevelRates, times: np.ndarray) -> np.ndarray:
    """
    Photoluminescence decay: excited population after a pulse, pump off.

    Args:
        rates: Kinetic rates (pump is ignored)
        times: Times in ns

    Returns:
        np.ndarray: p_excited(t) starting from the excited state
    """
    dark_pump = ThreeLevelRates(0.0, rates.radiative, rates.shelve, rates.deshelve)
    return populations(dark_pump, PopulationState.excited(), times)[:, EXCITED]
