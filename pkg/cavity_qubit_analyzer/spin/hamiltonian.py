"""
Spin-1 ground-state Hamiltonian module for cavity qubit analyzer.

Frequencies are in MHz, fields in Gauss. Operators are written in the
S_z eigenbasis ordered (+1, 0, -1).
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from cavity_qubit_analyzer.errors import InvalidParameterError

logger = logging.getLogger(__name__)

GAMMA_ELECTRON = 2.8  # MHz/G

PRESETS: Dict[str, float] = {
    "nanobeam-hh": 1328.0,
    "bulk-hh": 1336.0,
}

PLUS, ZERO, MINUS = 0, 1, 2

_SQRT2 = np.sqrt(2.0)
SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _SQRT2
SY = np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]], dtype=complex) / (_SQRT2 * 1j)
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)

# Overlaps closer than this cannot tell two eigenstates apart
LABEL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SpinSystem:
    """
    Spin-1 defect in a static magnetic field.

    Attributes:
        d: Axial zero-field splitting D (MHz)
        e: Transverse zero-field splitting E (MHz)
        gamma: Gyromagnetic ratio (MHz/G)
        b_field: Field (Bx, By, Bz) in G, defect frame with z along the c-axis
    """

    d: float
    e: float = 0.0
    gamma: float = GAMMA_ELECTRON
    b_field: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if len(self.b_field) != 3:
            raise InvalidParameterError("b_field needs three components")
        object.__setattr__(self, "b_field", tuple(float(b) for b in self.b_field))
        if abs(self.e) > abs(self.d) / 3:
            logger.warning("|E| = %g exceeds |D|/3 = %g", abs(self.e), abs(self.d) / 3)

    @classmethod
    def from_preset(
        cls,
        name: str,
        b_field: Sequence[float] = (0.0, 0.0, 0.0),
        gamma: float = GAMMA_ELECTRON,
        e: float = 0.0,
    ) -> "SpinSystem":
        """
        Build a system from a named D preset.

        Args:
            name: "nanobeam-hh" (D = 1328 MHz) or "bulk-hh" (D = 1336 MHz)
            b_field: Field vector in G
            gamma: Gyromagnetic ratio in MHz/G
            e: Transverse splitting in MHz

        Returns:
            SpinSystem: System with the preset D
        """
        if name not in PRESETS:
            raise InvalidParameterError(f"Unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(PRESETS[name], e, gamma, tuple(b_field))  # type: ignore[arg-type]

    def with_bz(self, bz: float) -> "SpinSystem":
        """Copy with the axial field replaced."""
        bx, by, _ = self.b_field
        return replace(self, b_field=(bx, by, float(bz)))


@dataclass(frozen=True)
class TransitionFrequencies:
    """
    The two ODMR transitions, labeled by dominant m_s character.

    Attributes:
        minus: |0> -> |-1>-like frequency (MHz)
        plus: |0> -> |+1>-like frequency (MHz)
        ambiguous: True when the labels could not be assigned and the
            values are simply sorted (minus <= plus)
    """

    minus: float
    plus: float
    ambiguous: bool = False

    def sorted(self) -> Tuple[float, float]:
        return (min(self.minus, self.plus), max(self.minus, self.plus))


@dataclass(frozen=True, eq=False)
class OdmrSpectrum:
    """
    Synthetic ODMR spectrum.

    Attributes:
        frequencies: Microwave frequency grid (MHz)
        contrast: Signed fractional PL change per frequency
        peak_centers: Transition frequencies (MHz), sorted
        contrast_sign: +1 for resonant, -1 for off-resonant excitation
    """

    frequencies: np.ndarray
    contrast: np.ndarray
    peak_centers: Tuple[float, ...]
    contrast_sign: int = 1


@dataclass(frozen=True, eq=False)
class ZeemanFan:
    """
    Transition frequencies across an axial field sweep.

    Attributes:
        bz: Axial fields (G)
        minus: |-1>-like branch (MHz)
        plus: |+1>-like branch (MHz)
        slope_minus: Fitted slope of the minus branch (MHz/G)
        slope_plus: Fitted slope of the plus branch (MHz/G)
    """

    bz: np.ndarray
    minus: np.ndarray
    plus: np.ndarray
    slope_minus: float
    slope_plus: float

    def rows(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.bz.tolist(), self.minus.tolist(), self.plus.tolist()))


def hamiltonian(system: SpinSystem) -> np.ndarray:
    """
    H = D Sz^2 + E (Sx^2 - Sy^2) + gamma B . S.

    Args:
        system: Spin system

    Returns:
        np.ndarray: 3x3 Hermitian matrix in MHz
    """
    bx, by, bz = system.b_field
    h = system.d * SZ @ SZ
    h = h + system.e * (SX @ SX - SY @ SY)
    h = h + system.gamma * (bx * SX + by * SY + bz * SZ)
    return 0.5 * (h + h.conj().T)


def transition_frequencies(system: SpinSystem) -> TransitionFrequencies:
    """
    Frequencies of the two spin transitions out of the m_s = 0-like level.

    Each eigenstate is labeled by its largest overlap with |+1>, |0>, |-1>.
    When two eigenstates overlap a basis state equally (e.g. E != 0 at zero
    field) a warning is logged and the frequencies are returned sorted.

    Args:
        system: Spin system

    Returns:
        TransitionFrequencies: Labeled (or sorted) transitions
    """
    energies, vectors = np.linalg.eigh(hamiltonian(system))
    weights = np.abs(vectors) ** 2  # weights[m, k]: overlap of eigenstate k with basis m

    order = np.argsort(weights[ZERO])[::-1]
    zero_state = int(order[0])
    others = [k for k in range(3) if k != zero_state]
    frequencies = [abs(float(energies[k] - energies[zero_state])) for k in others]

    degenerate = abs(frequencies[0] - frequencies[1]) <= 1e-12 * max(1.0, *frequencies)
    zero_tie = weights[ZERO, order[0]] - weights[ZERO, order[1]] < LABEL_TOLERANCE
    plus_tie = abs(weights[PLUS, others[0]] - weights[PLUS, others[1]]) < LABEL_TOLERANCE
    if not degenerate and (zero_tie or plus_tie):
        logger.warning(
            "Ambiguous m_s labeling for D=%g, E=%g, B=%s; returning sorted frequencies",
            system.d,
            system.e,
            system.b_field,
        )
        low, high = sorted(frequencies)
        return TransitionFrequencies(low, high, ambiguous=True)

    if weights[PLUS, others[0]] >= weights[PLUS, others[1]]:
        plus, minus = frequencies
    else:
        minus, plus = frequencies
    return TransitionFrequencies(minus, plus)


def _lorentzian(x: np.ndarray, center: float, fwhm: float) -> np.ndarray:
    half = 0.5 * fwhm
    return half**2 / ((x - center) ** 2 + half**2)


def odmr_spectrum(
    system: SpinSystem,
    frequencies: np.ndarray,
    linewidth: float,
    contrast_amp: float = 1.0,
    contrast_sign: int = 1,
) -> OdmrSpectrum:
    """
    Sum of unit-height Lorentzians at both transitions.

    Args:
        system: Spin system
        frequencies: Increasing microwave grid in MHz
        linewidth: Lorentzian FWHM in MHz
        contrast_amp: Contrast per line
        contrast_sign: +1 or -1

    Returns:
        OdmrSpectrum: Spectrum on the grid
    """
    if linewidth <= 0:
        raise InvalidParameterError(f"Linewidth must be > 0, got {linewidth}")
    if contrast_sign not in (1, -1):
        raise InvalidParameterError(f"contrast_sign must be +1 or -1, got {contrast_sign}")
    grid = np.asarray(frequencies, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("Frequency grid must be increasing")

    centers = transition_frequencies(system).sorted()
    lines = sum(_lorentzian(grid, c, linewidth) for c in centers)
    contrast = contrast_sign * contrast_amp * lines
    return OdmrSpectrum(grid, contrast, centers, contrast_sign)


def zeeman_fan(system: SpinSystem, bz_values: Sequence[float]) -> ZeemanFan:
    """
    Transition frequencies for each axial field and their linear slopes.

    Args:
        system: Spin system (its transverse field is kept)
        bz_values: Axial fields in G (at least two)

    Returns:
        ZeemanFan: Fan table with fitted slopes in MHz/G
    """
    bz = np.asarray(bz_values, dtype=float)
    if bz.size < 2:
        raise InvalidParameterError("Need at least two field values for a fan")
    pairs = [transition_frequencies(system.with_bz(b)) for b in bz]
    minus = np.array([p.minus for p in pairs])
    plus = np.array([p.plus for p in pairs])
    slope_minus = float(np.polyfit(bz, minus, 1)[0])
    slope_plus = float(np.polyfit(bz, plus, 1)[0])
    logger.info("Zeeman slopes: minus %.6g MHz/G, plus %.6g MHz/G", slope_minus, slope_plus)
    return ZeemanFan(bz, minus, plus, slope_minus, slope_plus)
