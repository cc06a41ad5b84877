"""
Model registry for cavity qubit analyzer fits.

Every model maps a parameter vector (ordered as `param_names`) and an x
array to predictions. Registered models carry analytic Jacobians; custom
ModelSpec instances without one are differentiated numerically.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from cavity_qubit_analyzer.cavity.purcell import quality_factor
from cavity_qubit_analyzer.emitter.kinetics import g2_curve
from cavity_qubit_analyzer.errors import InvalidParameterError

ModelFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
Params = Union[Mapping[str, float], Sequence[float], np.ndarray]

STRETCH_BOUNDS = (0.2, 4.0)
FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
_GAUSS_K = 4.0 * np.log(2.0)
_TWO_PI = 2.0 * np.pi
_SINUSOID_UNITS = {
    "amplitude": "y",
    "frequency": "1/x",
    "phase": "rad",
    "T": "x",
    "n": "",
    "offset": "y",
}


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    A fit model.

    Attributes:
        id: Model identifier
        param_names: Parameter names in vector order
        function: f(params, x)
        jacobian: Analytic df/dparams(params, x) of shape (len(x), n_params), or None
        units: Parameter name -> unit tag ("x", "y", "1/x", "rad", "")
        positive: Parameters constrained to be > 0
        bounds: Parameters constrained to an open interval
        derived: Map from fitted parameters to derived quantities
        family: Initial-guess family ("peak", "decay", "sinusoid", "g2", "custom")
        n_peaks: Number of peaks for peak models
    """

    id: str
    param_names: Tuple[str, ...]
    function: ModelFunction
    jacobian: Optional[ModelFunction] = None
    units: Mapping[str, str] = field(default_factory=dict)
    positive: Tuple[str, ...] = ()
    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    derived: Optional[Callable[[Mapping[str, float]], Dict[str, float]]] = None
    family: str = "custom"
    n_peaks: int = 1

    @property
    def analytic(self) -> bool:
        return self.jacobian is not None

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def vector(self, params: Params) -> np.ndarray:
        """Parameter vector in `param_names` order."""
        if isinstance(params, Mapping):
            missing = [name for name in self.param_names if name not in params]
            if missing:
                raise InvalidParameterError(f"Missing parameters for {self.id}: {missing}")
            return np.array([float(params[name]) for name in self.param_names])
        vector = np.asarray(params, dtype=float)
        if vector.shape != (self.n_params,):
            raise InvalidParameterError(
                f"{self.id} takes {self.n_params} parameters, got shape {vector.shape}"
            )
        return vector

    def as_dict(self, vector: np.ndarray) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.param_names, vector)}

    def evaluate(self, params: Params, x: np.ndarray) -> np.ndarray:
        return self.function(self.vector(params), np.asarray(x, dtype=float))

    def check_domain(self, params: Params) -> None:
        """Raise InvalidParameterError outside the documented domain."""
        values = self.as_dict(self.vector(params))
        for name in self.positive:
            if not values[name] > 0:
                raise InvalidParameterError(f"{self.id}: {name} must be > 0, got {values[name]}")
        for name, (low, high) in self.bounds.items():
            if not low < values[name] < high:
                raise InvalidParameterError(
                    f"{self.id}: {name} must lie in ({low}, {high}), got {values[name]}"
                )

    def derived_quantities(self, params: Params) -> Dict[str, float]:
        if self.derived is None:
            return {}
        return self.derived(self.as_dict(self.vector(params)))


def numeric_jacobian(function: ModelFunction, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Central-difference Jacobian with Richardson extrapolation.

    The step of each parameter scales with its magnitude (at least 1), and
    the h and h/2 estimates are combined to cancel the O(h^2) error.

    Args:
        function: f(params, x)
        params: Parameter vector
        x: Abscissa

    Returns:
        np.ndarray: (len(x), len(params)) derivatives
    """
    params = np.asarray(params, dtype=float)
    base = np.cbrt(np.finfo(float).eps)
    columns = []
    for j, value in enumerate(params):
        h = base * max(abs(value), 1.0)

        def central(step: float) -> np.ndarray:
            up, down = params.copy(), params.copy()
            up[j] += step
            down[j] -= step
            return (function(up, x) - function(down, x)) / (2.0 * step)

        coarse, fine = central(h), central(h / 2)
        columns.append(fine + (fine - coarse) / 3.0)
    return np.stack(columns, axis=1)


def _lorentz_shape(x: np.ndarray, center: float, fwhm: float) -> Tuple[np.ndarray, ...]:
    half = 0.5 * fwhm
    d = x - center
    denom = d**2 + half**2
    value = half**2 / denom
    d_center = 2.0 * half**2 * d / denom**2
    d_fwhm = half * d**2 / denom**2
    return value, d_center, d_fwhm


def _gauss_shape(x: np.ndarray, center: float, fwhm: float) -> Tuple[np.ndarray, ...]:
    d = x - center
    value = np.exp(-_GAUSS_K * d**2 / fwhm**2)
    d_center = value * 2.0 * _GAUSS_K * d / fwhm**2
    d_fwhm = value * 2.0 * _GAUSS_K * d**2 / fwhm**3
    return value, d_center, d_fwhm


def _peak_names(n_peaks: int) -> Tuple[str, ...]:
    if n_peaks == 1:
        return ("amplitude", "center", "fwhm", "offset")
    names: List[str] = []
    for i in range(1, n_peaks + 1):
        names.extend((f"amplitude_{i}", f"center_{i}", f"fwhm_{i}"))
    return tuple(names) + ("offset",)


def _peak_model(model_id: str, shape: Callable, n_peaks: int, width_name: str) -> ModelSpec:
    names = _peak_names(n_peaks)

    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        y = np.full(x.shape, p[-1])
        for i in range(n_peaks):
            amplitude, center, fwhm = p[3 * i : 3 * i + 3]
            y = y + amplitude * shape(x, center, fwhm)[0]
        return y

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        jac = np.empty((x.size, p.size))
        for i in range(n_peaks):
            amplitude, center, fwhm = p[3 * i : 3 * i + 3]
            value, d_center, d_fwhm = shape(x, center, fwhm)
            jac[:, 3 * i] = value
            jac[:, 3 * i + 1] = amplitude * d_center
            jac[:, 3 * i + 2] = amplitude * d_fwhm
        jac[:, -1] = 1.0
        return jac

    def derived(params: Mapping[str, float]) -> Dict[str, float]:
        out = {}
        for i in range(1, n_peaks + 1):
            suffix = "" if n_peaks == 1 else f"_{i}"
            center, fwhm = params[f"center{suffix}"], params[f"fwhm{suffix}"]
            if width_name == "Q":
                out[f"Q{suffix}"] = quality_factor(center, fwhm)
            else:
                out[f"sigma{suffix}"] = fwhm * FWHM_TO_SIGMA
        return out

    units = {name: "y" if name.startswith(("amplitude", "offset")) else "x" for name in names}
    return ModelSpec(
        id=model_id,
        param_names=names,
        function=function,
        jacobian=jacobian,
        units=units,
        positive=tuple(n for n in names if n.startswith("fwhm")),
        derived=derived,
        family="peak",
        n_peaks=n_peaks,
    )


def _stretch(x: np.ndarray, T: float, n: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """exp(-(|x|/T)^n), (|x|/T)^n and log(|x|/T) (0 where x = 0)."""
    ratio = np.abs(x) / T
    u = ratio**n
    log_ratio = np.log(np.where(ratio > 0, ratio, 1.0))
    return np.exp(-u), u, log_ratio


def _exp_decay() -> ModelSpec:
    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, tau, offset = p
        return amplitude * np.exp(-x / tau) + offset

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, tau, _ = p
        e = np.exp(-x / tau)
        return np.stack([e, amplitude * x / tau**2 * e, np.ones_like(x)], axis=1)

    return ModelSpec(
        id="exp_decay",
        param_names=("amplitude", "tau", "offset"),
        function=function,
        jacobian=jacobian,
        units={"amplitude": "y", "tau": "x", "offset": "y"},
        positive=("tau",),
        derived=lambda params: {"rate": 1.0 / params["tau"]},
        family="decay",
    )


def _stretched_exp() -> ModelSpec:
    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, T, n, offset = p
        return amplitude * _stretch(x, T, n)[0] + offset

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, T, n, _ = p
        s, u, log_ratio = _stretch(x, T, n)
        return np.stack(
            [s, amplitude * s * u * n / T, -amplitude * s * u * log_ratio, np.ones_like(x)], axis=1
        )

    return ModelSpec(
        id="stretched_exp",
        param_names=("amplitude", "T", "n", "offset"),
        function=function,
        jacobian=jacobian,
        units={"amplitude": "y", "T": "x", "n": "", "offset": "y"},
        positive=("T",),
        bounds={"n": STRETCH_BOUNDS},
        derived=lambda params: {"rate": 1.0 / params["T"]},
        family="decay",
    )


def _period(params: Mapping[str, float]) -> Dict[str, float]:
    frequency = params["frequency"]
    return {"period": 1.0 / abs(frequency)} if frequency != 0 else {}


def _damped_sinusoid() -> ModelSpec:
    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, frequency, phase, T, n, offset = p
        return amplitude * np.cos(_TWO_PI * frequency * x + phase) * _stretch(x, T, n)[0] + offset

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, frequency, phase, T, n, _ = p
        theta = _TWO_PI * frequency * x + phase
        c, s_theta = np.cos(theta), np.sin(theta)
        s, u, log_ratio = _stretch(x, T, n)
        return np.stack(
            [
                c * s,
                -amplitude * s_theta * _TWO_PI * x * s,
                -amplitude * s_theta * s,
                amplitude * c * s * u * n / T,
                -amplitude * c * s * u * log_ratio,
                np.ones_like(x),
            ],
            axis=1,
        )

    return ModelSpec(
        id="damped_sinusoid",
        param_names=("amplitude", "frequency", "phase", "T", "n", "offset"),
        function=function,
        jacobian=jacobian,
        units=_SINUSOID_UNITS,
        positive=("T",),
        bounds={"n": STRETCH_BOUNDS},
        derived=_period,
        family="sinusoid",
    )


def _sin2_stretched() -> ModelSpec:
    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, frequency, phase, T, n, offset = p
        modulation = np.sin(_TWO_PI * frequency * x + phase) ** 2
        return amplitude * modulation * _stretch(x, T, n)[0] + offset

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amplitude, frequency, phase, T, n, _ = p
        theta = _TWO_PI * frequency * x + phase
        modulation = np.sin(theta) ** 2
        d_theta = np.sin(2.0 * theta)
        s, u, log_ratio = _stretch(x, T, n)
        return np.stack(
            [
                modulation * s,
                amplitude * d_theta * _TWO_PI * x * s,
                amplitude * d_theta * s,
                amplitude * modulation * s * u * n / T,
                -amplitude * modulation * s * u * log_ratio,
                np.ones_like(x),
            ],
            axis=1,
        )

    return ModelSpec(
        id="sin2_stretched",
        param_names=("amplitude", "frequency", "phase", "T", "n", "offset"),
        function=function,
        jacobian=jacobian,
        units=_SINUSOID_UNITS,
        positive=("T",),
        bounds={"n": STRETCH_BOUNDS},
        family="sinusoid",
    )


def _g2_three_level() -> ModelSpec:
    def function(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.asarray(g2_curve(x, *p), dtype=float)

    def jacobian(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        amp_anti, amp_bunch, t1, t2 = p
        delay = np.abs(x)
        e1, e2 = np.exp(-delay / t1), np.exp(-delay / t2)
        return np.stack(
            [-e1, e2, -amp_anti * e1 * delay / t1**2, amp_bunch * e2 * delay / t2**2], axis=1
        )

    return ModelSpec(
        id="g2_three_level",
        param_names=("amp_anti", "amp_bunch", "t1", "t2"),
        function=function,
        jacobian=jacobian,
        units={"amp_anti": "", "amp_bunch": "", "t1": "x", "t2": "x"},
        positive=("t1", "t2"),
        derived=lambda params: {"g2_zero": 1.0 - params["amp_anti"] + params["amp_bunch"]},
        family="g2",
    )


MODEL_IDS = (
    "lorentzian",
    "gaussian",
    "exp_decay",
    "stretched_exp",
    "damped_sinusoid",
    "sin2_stretched",
    "g2_three_level",
)

_BUILDERS: Dict[str, Callable[[], ModelSpec]] = {
    "exp_decay": _exp_decay,
    "stretched_exp": _stretched_exp,
    "damped_sinusoid": _damped_sinusoid,
    "sin2_stretched": _sin2_stretched,
    "g2_three_level": _g2_three_level,
}


def get_model(model_id: str, n_peaks: int = 1) -> ModelSpec:
    """
    Look up a registered model.

    Args:
        model_id: One of MODEL_IDS
        n_peaks: Number of peaks (lorentzian and gaussian only)

    Returns:
        ModelSpec: The model
    """
    if model_id not in MODEL_IDS:
        raise InvalidParameterError(f"Unknown model {model_id!r}; choose from {MODEL_IDS}")
    if n_peaks < 1:
        raise InvalidParameterError(f"n_peaks must be >= 1, got {n_peaks}")
    if model_id == "lorentzian":
        return _peak_model(model_id, _lorentz_shape, n_peaks, "Q")
    if model_id == "gaussian":
        return _peak_model(model_id, _gauss_shape, n_peaks, "sigma")
    if n_peaks != 1:
        raise InvalidParameterError(f"{model_id} does not take n_peaks")
    return _BUILDERS[model_id]()


def jacobian(model: ModelSpec, params: Params, x: np.ndarray) -> np.ndarray:
    """
    Derivatives of the model with respect to its parameters.

    Args:
        model: Model
        params: Parameter values
        x: Abscissa

    Returns:
        np.ndarray: (len(x), n_params) matrix, analytic when the model has one
    """
    vector = model.vector(params)
    x = np.asarray(x, dtype=float)
    if model.jacobian is not None:
        return model.jacobian(vector, x)
    return numeric_jacobian(model.function, vector, x)


def zero_columns(
    model: ModelSpec, jac: np.ndarray, names: Optional[Sequence[str]] = None
) -> List[str]:
    """
    Names of Jacobian columns that vanish identically.

    Args:
        model: Model the columns belong to
        jac: Jacobian, one column per name
        names: Column names (default: model.param_names)

    Returns:
        List[str]: Parameters the data cannot constrain
    """
    names = list(names or model.param_names)
    norms = np.sqrt(np.sum(jac**2, axis=0))
    scale = norms.max() if norms.size and norms.max() > 0 else 1.0
    return [name for name, norm in zip(names, norms) if norm <= 1e-14 * scale]
