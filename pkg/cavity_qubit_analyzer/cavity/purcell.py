"""
Purcell-factor algebra for cavity qubit analyzer.

Three experimental routes lead to the Purcell factor F: cavity parameters,
zero-phonon-line intensity ratios, and lifetimes corrected for a dark
channel. The Debye-Waller relation links F to the fraction of emission
into the zero-phonon line. Lifetimes are in ns.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from cavity_qubit_analyzer.emitter.kinetics import ThreeLevelRates
from cavity_qubit_analyzer.errors import DomainError, InvalidParameterError

# Intrinsic Debye-Waller factor of the neutral divacancy
DEFAULT_ALPHA = 0.053


@dataclass(frozen=True)
class CavityParams:
    """
    Photonic cavity description.

    Attributes:
        quality_factor: Q
        mode_volume: V in um^3, or in units of (lambda/n)^3 when
            `volume_in_cubic_wavelengths` is set
        wavelength: Resonant wavelength in um
        index: Refractive index n
        overlap: Spatial overlap F1 in [0, 1]
        spectral_match: Spectral matching F2 in [0, 1]
        volume_in_cubic_wavelengths: Unit flag for mode_volume
    """

    quality_factor: float
    mode_volume: float
    wavelength: float
    index: float
    overlap: float = 1.0
    spectral_match: float = 1.0
    volume_in_cubic_wavelengths: bool = False

    def __post_init__(self) -> None:
        if self.quality_factor <= 0:
            raise InvalidParameterError(f"Q must be > 0, got {self.quality_factor}")
        if self.mode_volume <= 0:
            raise InvalidParameterError(f"Mode volume must be > 0, got {self.mode_volume}")
        if self.wavelength <= 0:
            raise InvalidParameterError(f"Wavelength must be > 0, got {self.wavelength}")
        if self.index < 1:
            raise InvalidParameterError(f"Refractive index must be >= 1, got {self.index}")
        for name in ("overlap", "spectral_match"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1]")

    @property
    def normalized_volume(self) -> float:
        """Mode volume in units of (lambda/n)^3."""
        if self.volume_in_cubic_wavelengths:
            return self.mode_volume
        return self.mode_volume / (self.wavelength / self.index) ** 3


def purcell_from_cavity(cavity: CavityParams) -> float:
    """
    F = F1 * F2 * 3Q / (4 pi^2 V) * (lambda/n)^3 + 1.

    Args:
        cavity: Cavity parameters

    Returns:
        float: Purcell factor (>= 1)
    """
    coupling = cavity.overlap * cavity.spectral_match
    enhancement = 3.0 * cavity.quality_factor / (4.0 * math.pi**2 * cavity.normalized_volume)
    return coupling * enhancement + 1.0


def purcell_from_intensity(i_on: float, i_off: float) -> float:
    """
    F = I_ZPL,on / I_ZPL,off.

    Args:
        i_on: ZPL intensity with the cavity on resonance
        i_off: ZPL intensity with the cavity detuned

    Returns:
        float: Purcell factor
    """
    if i_off <= 0 or i_on <= 0:
        raise InvalidParameterError(f"Intensities must be > 0, got on={i_on}, off={i_off}")
    return i_on / i_off


def purcell_from_lifetimes(tau_on: float, tau_off: float, tau_dark: float, alpha: float) -> float:
    """
    Lifetime route with a dark-channel correction.

    F = tau_dark (tau_off - tau_on) / (alpha tau_on (tau_dark - tau_off)) + 1,
    reducing to (tau_off - tau_on) / (alpha tau_on) + 1 for tau_dark = inf.

    Args:
        tau_on: Excited lifetime on cavity resonance
        tau_off: Excited lifetime off resonance
        tau_dark: Combined lifetime of all nonradiative decays
        alpha: Intrinsic Debye-Waller factor

    Returns:
        float: Purcell factor
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < tau_on <= tau_off < tau_dark:
        raise DomainError(
            f"Need 0 < tau_on <= tau_off < tau_dark, got {tau_on}, {tau_off}, {tau_dark}"
        )
    if math.isinf(tau_dark):
        return (tau_off - tau_on) / (alpha * tau_on) + 1.0
    return tau_dark * (tau_off - tau_on) / (alpha * tau_on * (tau_dark - tau_off)) + 1.0


def purcell_from_dw(alpha: float, beta: float) -> float:
    """
    F = beta (alpha - 1) / (alpha (beta - 1)).

    Args:
        alpha: Debye-Waller factor off resonance
        beta: Debye-Waller factor on resonance

    Returns:
        float: Purcell factor (> 1 iff beta > alpha)
    """
    if beta == 1.0:
        raise InvalidParameterError("beta = 1 makes the Debye-Waller relation singular")
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise InvalidParameterError(f"alpha and beta must lie in (0, 1), got {alpha}, {beta}")
    return beta * (alpha - 1.0) / (alpha * (beta - 1.0))


def dw_on_resonance(purcell: float, alpha: float) -> float:
    """
    Invert the Debye-Waller relation: beta = F alpha / (1 + alpha (F - 1)).

    Args:
        purcell: Purcell factor F >= 1
        alpha: Debye-Waller factor off resonance

    Returns:
        float: On-resonance Debye-Waller factor
    """
    if purcell < 1.0:
        raise InvalidParameterError(f"F must be >= 1, got {purcell}")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return purcell * alpha / (1.0 + alpha * (purcell - 1.0))


def entanglement_rate_gain(beta: float, alpha: float) -> float:
    """
    Two-photon entanglement rate gain (beta / alpha)^2.

    The success rate of a two-click protocol scales with the square of the
    zero-phonon fraction.

    Args:
        beta: Debye-Waller factor on resonance
        alpha: Debye-Waller factor off resonance

    Returns:
        float: Rate gain
    """
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be > 0, got {alpha}")
    if not alpha <= beta < 1.0:
        raise InvalidParameterError(f"Need alpha <= beta < 1, got alpha={alpha}, beta={beta}")
    return (beta / alpha) ** 2


def emission_events_gain(tau_off: float, tau_on: float) -> float:
    """Photons emitted per unit time gained by the lifetime reduction."""
    if tau_on <= 0 or tau_off <= 0:
        raise InvalidParameterError("Lifetimes must be > 0")
    return tau_off / tau_on


def lifetime_limited_linewidth(tau: float) -> float:
    """
    Transform-limited optical linewidth 1 / (2 pi tau).

    Args:
        tau: Excited-state lifetime in ns

    Returns:
        float: Linewidth (FWHM) in MHz
    """
    if tau <= 0:
        raise InvalidParameterError(f"Lifetime must be > 0, got {tau}")
    return 1e3 / (2.0 * math.pi * tau)


def quality_factor(center: float, fwhm: float) -> float:
    """Q = center / FWHM (same units for both)."""
    if fwhm <= 0:
        raise InvalidParameterError(f"FWHM must be > 0, got {fwhm}")
    return abs(center) / fwhm


def decay_rates_from_budget(
    purcell: float, alpha: float, tau_off: float, tau_dark: float
) -> Tuple[ThreeLevelRates, ThreeLevelRates]:
    """
    Excited-state rate models off and on cavity resonance.

    The radiative rate 1/tau_off - 1/tau_dark splits into a zero-phonon part
    alpha * G and a sideband part (1 - alpha) * G; on resonance only the
    zero-phonon part is multiplied by F. Nonradiative decay is the shelving
    channel of rate 1/tau_dark with no return (pump off, deshelve 0).

    Args:
        purcell: Purcell factor
        alpha: Intrinsic Debye-Waller factor
        tau_off: Off-resonance lifetime in ns
        tau_dark: Nonradiative lifetime in ns

    Returns:
        Tuple[ThreeLevelRates, ThreeLevelRates]: (off, on) rate sets
    """
    if not 0.0 < tau_off < tau_dark:
        raise DomainError("Need 0 < tau_off < tau_dark")
    nonradiative = 0.0 if math.isinf(tau_dark) else 1.0 / tau_dark
    radiative = 1.0 / tau_off - nonradiative
    enhanced = purcell * alpha * radiative + (1.0 - alpha) * radiative
    off = ThreeLevelRates(pump=0.0, radiative=radiative, shelve=nonradiative)
    return off, off.with_radiative(enhanced)


@dataclass(frozen=True)
class EmissionBudget:
    """
    Measured quantities from which the Purcell factor can be inferred.

    Attributes:
        alpha: Debye-Waller factor off resonance
        beta: Debye-Waller factor on resonance
        intensity_off: ZPL intensity off resonance
        intensity_on: ZPL intensity on resonance
        tau_off: Lifetime off resonance (ns)
        tau_on: Lifetime on resonance (ns)
        tau_dark: Nonradiative lifetime (ns)
        f_external: Purcell factor from another route, supplied by the user
    """

    alpha: Optional[float] = DEFAULT_ALPHA
    beta: Optional[float] = None
    intensity_off: Optional[float] = None
    intensity_on: Optional[float] = None
    tau_off: Optional[float] = None
    tau_on: Optional[float] = None
    tau_dark: Optional[float] = None
    f_external: Optional[float] = None

    @classmethod
    def synthesize(
        cls,
        purcell: float,
        alpha: float = DEFAULT_ALPHA,
        tau_off: float = 15.7,
        tau_dark: float = 75.0,
        intensity_off: float = 1.0,
    ) -> "EmissionBudget":
        """
        Forward-generate a budget whose every route gives the same F.

        Args:
            purcell: Purcell factor
            alpha: Intrinsic Debye-Waller factor
            tau_off: Off-resonance lifetime in ns
            tau_dark: Nonradiative lifetime in ns
            intensity_off: Off-resonance ZPL intensity

        Returns:
            EmissionBudget: Self-consistent budget
        """
        shortening = (purcell - 1.0) * alpha * (tau_dark - tau_off) / tau_dark
        return cls(
            alpha=alpha,
            beta=dw_on_resonance(purcell, alpha),
            intensity_off=intensity_off,
            intensity_on=purcell * intensity_off,
            tau_off=tau_off,
            tau_on=tau_off / (1.0 + shortening),
            tau_dark=tau_dark,
        )
