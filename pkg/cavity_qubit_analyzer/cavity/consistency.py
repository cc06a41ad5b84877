"""
Purcell-factor consistency validation module for cavity qubit analyzer.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from cavity_qubit_analyzer.cavity.purcell import (
    EmissionBudget,
    purcell_from_dw,
    purcell_from_intensity,
    purcell_from_lifetimes,
)
from cavity_qubit_analyzer.data.report import ReportGenerator
from cavity_qubit_analyzer.errors import InvalidParameterError

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.25


@dataclass
class ConsistencyReport:
    """
    Purcell factors from every computable route and their agreement.

    Attributes:
        routes: Route name -> F (F_intensity, F_lifetime, F_dw, F_external)
        errors: Route name -> reason the route could not be evaluated
        spread: Largest pairwise |a - b| / mean(a, b), 0 with fewer than two routes
        threshold: Spread above which the routes are flagged
    """

    routes: Dict[str, float] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    spread: float = 0.0
    threshold: float = DEFAULT_THRESHOLD

    @property
    def flagged(self) -> bool:
        return self.spread > self.threshold

    def to_report(self) -> ReportGenerator:
        """
        Render as key=value lines.

        Returns:
            ReportGenerator: Report with one line per route, then spread and flag
        """
        report = ReportGenerator()
        report.add_mapping(self.routes)
        for name, reason in self.errors.items():
            report.add(f"error.{name}", reason)
        report.add("spread", self.spread)
        report.add("threshold", self.threshold)
        report.add("flagged", self.flagged)
        return report


class ConsistencyValidator:
    """
    Cross-checks the intensity, lifetime and Debye-Waller routes to F.
    """

    def __init__(self, threshold: float = DEFAULT_THRESHOLD):
        """
        Initialize the validator.

        Args:
            threshold: Relative spread above which the budget is flagged
        """
        if threshold <= 0:
            raise InvalidParameterError(f"Threshold must be > 0, got {threshold}")
        self.threshold = threshold

    def validate(self, budget: EmissionBudget) -> ConsistencyReport:
        """
        Evaluate every route the budget has the fields for.

        Args:
            budget: Measured quantities

        Returns:
            ConsistencyReport: Route values, per-route errors and spread
        """
        report = ConsistencyReport(threshold=self.threshold)

        self._intensity_route(budget, report)
        self._lifetime_route(budget, report)
        self._dw_route(budget, report)
        if budget.f_external is not None:
            report.routes["F_external"] = float(budget.f_external)

        report.spread = self._max_spread(list(report.routes.values()))
        if report.flagged:
            logger.warning(
                "Purcell routes disagree: spread %.3g exceeds %.3g (%s)",
                report.spread,
                self.threshold,
                report.routes,
            )
        return report

    def _intensity_route(self, budget: EmissionBudget, report: ConsistencyReport) -> None:
        if budget.intensity_on is None or budget.intensity_off is None:
            return
        try:
            report.routes["F_intensity"] = purcell_from_intensity(
                budget.intensity_on, budget.intensity_off
            )
        except InvalidParameterError as e:
            report.errors["F_intensity"] = str(e)

    def _lifetime_route(self, budget: EmissionBudget, report: ConsistencyReport) -> None:
        fields = (budget.tau_on, budget.tau_off, budget.tau_dark, budget.alpha)
        if any(value is None for value in fields):
            return
        try:
            report.routes["F_lifetime"] = purcell_from_lifetimes(*fields)  # type: ignore[arg-type]
        except InvalidParameterError as e:
            report.errors["F_lifetime"] = str(e)

    def _dw_route(self, budget: EmissionBudget, report: ConsistencyReport) -> None:
        if budget.alpha is None or budget.beta is None:
            return
        try:
            report.routes["F_dw"] = purcell_from_dw(budget.alpha, budget.beta)
        except InvalidParameterError as e:
            report.errors["F_dw"] = str(e)

    @staticmethod
    def _max_spread(values: List[float]) -> float:
        spread = 0.0
        for a, b in itertools.combinations(values, 2):
            spread = max(spread, abs(a - b) / (0.5 * (a + b)))
        return spread


def consistency_report(
    budget: EmissionBudget, threshold: Optional[float] = None
) -> ConsistencyReport:
    """
    Compute all available Purcell routes and their spread.

    Args:
        budget: Measured quantities
        threshold: Flag threshold (default 0.25)

    Returns:
        ConsistencyReport: Report of the computable routes
    """
    return ConsistencyValidator(threshold or DEFAULT_THRESHOLD).validate(budget)
