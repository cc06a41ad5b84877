"""
Levenberg-Marquardt fitting engine for cavity qubit analyzer.

Positive parameters are fitted as logarithms and bounded parameters through
a scaled logistic, so every accepted step stays inside the model domain.
Uncertainties come from the Gauss-Newton covariance in natural units.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy import stats

from cavity_qubit_analyzer.data.report import ReportGenerator
from cavity_qubit_analyzer.errors import (
    InsufficientDataError,
    InvalidParameterError,
    RankDeficiencyError,
)
from cavity_qubit_analyzer.fitting.guess import initial_guess
from cavity_qubit_analyzer.fitting.models import ModelSpec, jacobian, zero_columns
from cavity_qubit_analyzer.fitting.series import DataSeries

logger = logging.getLogger(__name__)

Z95 = 1.96
INTERVALS = ("ci95", "t95", "sd")
# Largest damping before the optimizer declares that no step can improve
MAX_DAMPING = 1e16
# Condition number of the scaled normal matrix treated as singular
MAX_CONDITION = 1e14


def coverage_factor(interval: str, dof: int) -> float:
    """
    Multiplier turning a standard error into a 95% half-width.

    Args:
        interval: "t95" uses the Student-t quantile, anything else the normal 1.96
        dof: Residual degrees of freedom

    Returns:
        float: Half-width factor (nan for "t95" without degrees of freedom)
    """
    if interval != "t95":
        return Z95
    if dof < 1:
        return float("nan")
    return float(stats.t.ppf(0.975, dof))


@dataclass
class FitOptions:
    """
    Optimizer settings.

    Attributes:
        max_iterations: Step attempts before giving up
        damping: Initial Marquardt damping
        damping_factor: Multiplier on reject, divisor on accept
        ftol: Relative objective decrease that ends the fit
        xtol: Relative internal step norm that ends the fit
        interval: "ci95" (1.96 sd), "t95" (Student-t quantile at the residual
            degrees of freedom) or "sd" (one standard deviation)
        fixed: Parameters held at the given values
    """

    max_iterations: int = 200
    damping: float = 1e-3
    damping_factor: float = 10.0
    ftol: float = 1e-10
    xtol: float = 1e-12
    interval: str = "ci95"
    fixed: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise InvalidParameterError("max_iterations must be >= 1")
        if self.interval not in INTERVALS:
            raise InvalidParameterError(
                f"interval must be one of {sorted(INTERVALS)}, got {self.interval!r}"
            )


@dataclass(eq=False)
class FitResult:
    """
    Outcome of a fit.

    Attributes:
        model_id: Model identifier
        params: Estimates by name (fixed parameters included)
        stderr: Standard errors by name (0 for fixed parameters)
        ci95: 95% half-widths, 1.96 * stderr (t quantile * stderr for "t95")
        covariance: Covariance of the free parameters in natural units
        free: Names of the free parameters, in covariance order
        residual_rms: Root-mean-square of the unweighted residuals
        reduced_chi2: Weighted chi^2 per degree of freedom (sigma given only)
        converged: Whether a stopping tolerance was met
        n_iterations: Step attempts made
        objective_history: Objective after the start and every accepted step
        interval: Reporting convention, "ci95", "t95" or "sd"
        dof: Residual degrees of freedom
        derived: Derived quantities (Q, sigma, rate, g2_zero ...)
    """

    model_id: str
    params: Dict[str, float]
    stderr: Dict[str, float]
    ci95: Dict[str, float]
    covariance: np.ndarray
    free: List[str]
    residual_rms: float
    reduced_chi2: Optional[float]
    converged: bool
    n_iterations: int
    objective_history: List[float] = field(default_factory=list)
    interval: str = "ci95"
    dof: int = 0
    derived: Dict[str, float] = field(default_factory=dict)

    @property
    def intervals(self) -> Dict[str, float]:
        """Half-widths in the requested convention."""
        if self.interval == "sd":
            return dict(self.stderr)
        return dict(self.ci95)

    def to_report(self) -> ReportGenerator:
        """
        Serialize as key=value lines.

        Returns:
            ReportGenerator: model, convergence, param.*, ci95.* (and sd.* or dof),
            derived.* and residual statistics, in that order
        """
        report = ReportGenerator()
        report.add("model", self.model_id)
        report.add("converged", self.converged)
        report.add("n_iterations", self.n_iterations)
        report.add_mapping(self.params, prefix="param")
        report.add_mapping(self.ci95, prefix="ci95")
        if self.interval == "sd":
            report.add_mapping(self.stderr, prefix="sd")
        elif self.interval == "t95":
            report.add("dof", self.dof)
        report.add_mapping(self.derived, prefix="derived")
        report.add("residual_rms", self.residual_rms)
        if self.reduced_chi2 is not None:
            report.add("reduced_chi2", self.reduced_chi2)
        return report


class _Reparameterization:
    """Maps natural parameters to unconstrained internal coordinates."""

    def __init__(self, model: ModelSpec, free: List[str]):
        self.kinds = []
        for name in free:
            if name in model.positive:
                self.kinds.append(("log", 0.0, 0.0))
            elif name in model.bounds:
                low, high = model.bounds[name]
                self.kinds.append(("logistic", low, high))
            else:
                self.kinds.append(("linear", 0.0, 0.0))

    def to_internal(self, values: np.ndarray) -> np.ndarray:
        out = np.empty_like(values)
        for i, (kind, low, high) in enumerate(self.kinds):
            if kind == "log":
                out[i] = np.log(values[i])
            elif kind == "logistic":
                fraction = (values[i] - low) / (high - low)
                out[i] = np.log(fraction / (1.0 - fraction))
            else:
                out[i] = values[i]
        return out

    def to_natural(self, internal: np.ndarray) -> np.ndarray:
        out = np.empty_like(internal)
        for i, (kind, low, high) in enumerate(self.kinds):
            if kind == "log":
                out[i] = np.exp(internal[i])
            elif kind == "logistic":
                out[i] = low + (high - low) / (1.0 + np.exp(-internal[i]))
            else:
                out[i] = internal[i]
        return out

    def derivative(self, natural: np.ndarray) -> np.ndarray:
        """d natural / d internal, per parameter."""
        out = np.ones_like(natural)
        for i, (kind, low, high) in enumerate(self.kinds):
            if kind == "log":
                out[i] = natural[i]
            elif kind == "logistic":
                out[i] = (natural[i] - low) * (high - natural[i]) / (high - low)
        return out


class LevenbergMarquardt:
    """
    Damped Gauss-Newton minimizer of weighted squared residuals.
    """

    def __init__(self, model: ModelSpec, data: DataSeries, options: FitOptions):
        """
        Initialize the optimizer.

        Args:
            model: Model to fit
            data: Data series
            options: Optimizer settings
        """
        self.model = model
        self.data = data
        self.options = options
        unknown = set(options.fixed) - set(model.param_names)
        if unknown:
            raise InvalidParameterError(f"Cannot fix unknown parameters {sorted(unknown)}")
        self.free = [name for name in model.param_names if name not in options.fixed]
        if not self.free:
            raise InvalidParameterError("Every parameter is fixed; nothing to fit")
        self.free_index = np.array([model.param_names.index(name) for name in self.free])
        self.weights = 1.0 / data.sigma if data.sigma is not None else np.ones(len(data))
        self.transform = _Reparameterization(model, self.free)

    def _full_vector(self, base: np.ndarray, free_values: np.ndarray) -> np.ndarray:
        vector = base.copy()
        vector[self.free_index] = free_values
        return vector

    def _objective(self, vector: np.ndarray) -> float:
        residual = (self.data.y - self.model.function(vector, self.data.x)) * self.weights
        value = float(residual @ residual)
        return value if np.isfinite(value) else np.inf

    def _weighted_jacobian(self, vector: np.ndarray) -> np.ndarray:
        jac = jacobian(self.model, vector, self.data.x)[:, self.free_index]
        return jac * self.weights[:, None]

    def _check_columns(self, jac: np.ndarray) -> None:
        zero = zero_columns(self.model, jac, self.free)
        if zero:
            raise RankDeficiencyError(
                f"Parameter {zero[0]!r} does not affect the model (zero Jacobian column)",
                parameter=zero[0],
            )

    def minimize(self, start: Mapping[str, float]) -> FitResult:
        """
        Run the optimizer from a starting point.

        Args:
            start: Starting values for every parameter

        Returns:
            FitResult: Estimates and uncertainties
        """
        options = self.options
        base = self.model.vector(start)
        self.model.check_domain(base)
        internal = self.transform.to_internal(base[self.free_index])
        vector = base
        objective = self._objective(vector)
        if not np.isfinite(objective):
            raise InvalidParameterError(f"Model {self.model.id} is not finite at the start point")
        history = [objective]
        damping = options.damping
        converged = objective == 0.0
        iterations = 0
        stale = True

        while not converged and iterations < options.max_iterations:
            iterations += 1
            if stale:
                natural = self.transform.to_natural(internal)
                jac = self._weighted_jacobian(vector) * self.transform.derivative(natural)[None, :]
                if iterations == 1:
                    self._check_columns(jac)
                residual = (self.data.y - self.model.function(vector, self.data.x)) * self.weights
                normal = jac.T @ jac
                gradient = jac.T @ residual
                diagonal = np.diag(normal).copy()
                diagonal[diagonal <= 0] = 1.0
                stale = False

            try:
                step = np.linalg.solve(normal + damping * np.diag(diagonal), gradient)
            except np.linalg.LinAlgError:
                damping *= options.damping_factor
                continue
            trial_internal = internal + step
            trial = self._full_vector(base, self.transform.to_natural(trial_internal))
            trial_objective = self._objective(trial)

            if trial_objective < objective:
                decrease = (objective - trial_objective) / objective
                internal, vector, objective = trial_internal, trial, trial_objective
                history.append(objective)
                stale = True
                damping = max(damping / options.damping_factor, 1e-15)
                small_step = np.linalg.norm(step) < options.xtol * (
                    np.linalg.norm(internal) + options.xtol
                )
                if objective == 0.0 or decrease < options.ftol or small_step:
                    converged = True
            else:
                damping *= options.damping_factor
                if damping > MAX_DAMPING:
                    converged = True

        if not converged:
            logger.warning(
                "%s fit did not converge in %d iterations (objective %.6g)",
                self.model.id,
                iterations,
                objective,
            )
        return self._result(vector, objective, converged, iterations, history)

    def _covariance(self, vector: np.ndarray, objective: float) -> np.ndarray:
        jac = self._weighted_jacobian(vector)
        self._check_columns(jac)
        normal = jac.T @ jac
        scale = np.sqrt(np.diag(normal))
        scaled = normal / np.outer(scale, scale)
        singular_values, vectors = np.linalg.eigh(scaled)
        if singular_values[0] <= singular_values[-1] / MAX_CONDITION:
            culprit = self.free[int(np.argmax(np.abs(vectors[:, 0])))]
            raise RankDeficiencyError(
                f"Normal matrix is singular; parameter {culprit!r} is not constrained",
                parameter=culprit,
            )
        covariance = np.linalg.inv(scaled) / np.outer(scale, scale)
        if self.data.sigma is None:
            dof = len(self.data) - len(self.free)
            covariance = covariance * (objective / dof if dof > 0 else np.nan)
        return 0.5 * (covariance + covariance.T)

    def _result(
        self,
        vector: np.ndarray,
        objective: float,
        converged: bool,
        iterations: int,
        history: List[float],
    ) -> FitResult:
        covariance = self._covariance(vector, objective)
        errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
        stderr = {name: 0.0 for name in self.model.param_names}
        stderr.update(zip(self.free, errors.tolist()))

        dof = len(self.data) - len(self.free)
        factor = coverage_factor(self.options.interval, dof)
        residual = self.data.y - self.model.function(vector, self.data.x)
        reduced_chi2 = None
        if self.data.sigma is not None:
            reduced_chi2 = objective / dof if dof > 0 else float("nan")

        params = self.model.as_dict(vector)
        return FitResult(
            model_id=self.model.id,
            params=params,
            stderr=stderr,
            ci95={name: factor * value for name, value in stderr.items()},
            covariance=covariance,
            free=list(self.free),
            residual_rms=float(np.sqrt(np.mean(residual**2))),
            reduced_chi2=reduced_chi2,
            converged=converged,
            n_iterations=iterations,
            objective_history=history,
            interval=self.options.interval,
            dof=dof,
            derived=self.model.derived_quantities(vector),
        )


def fit(
    model: ModelSpec,
    data: DataSeries,
    initial: Optional[Mapping[str, float]] = None,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """
    Fit a model to a data series.

    Missing starting values come from initial_guess; fixed parameters in
    the options override both.

    Args:
        model: Model to fit
        data: Data series
        initial: Starting values (all or some parameters)
        options: Optimizer settings

    Returns:
        FitResult: Estimates, uncertainties and convergence status

    Raises:
        InsufficientDataError: Fewer than n_free + 1 points
        RankDeficiencyError: A parameter is not constrained by the data
        NoSignalError: No start point could be guessed from the data
    """
    options = options or FitOptions()
    n_free = model.n_params - len(options.fixed)
    if len(data) < n_free + 1:
        raise InsufficientDataError(
            f"{model.id} has {n_free} free parameters and needs at least {n_free + 1} points, "
            f"got {len(data)}"
        )

    start: Dict[str, float] = {}
    provided = dict(initial or {})
    unknown = set(provided) - set(model.param_names)
    if unknown:
        raise InvalidParameterError(f"Unknown parameters for {model.id}: {sorted(unknown)}")
    if not set(model.param_names) <= set(provided) | set(options.fixed):
        start.update(initial_guess(model, data, options.fixed))
    start.update(provided)
    start.update(options.fixed)

    for name, (low, high) in model.bounds.items():
        if name not in options.fixed and not low < start[name] < high:
            margin = 1e-3 * (high - low)
            clipped = float(np.clip(start[name], low + margin, high - margin))
            logger.warning("Start value %s=%g moved inside (%g, %g)", name, start[name], low, high)
            start[name] = clipped

    result = LevenbergMarquardt(model, data, options).minimize(start)
    logger.info(
        "Fitted %s: converged=%s after %d iterations",
        model.id,
        result.converged,
        result.n_iterations,
    )
    return result
