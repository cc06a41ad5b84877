"""
Data series container for cavity qubit analyzer fits.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from cavity_qubit_analyzer.errors import IngestionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DataSeries:
    """
    Ordered (x, y[, sigma]) samples with unit tags.

    Attributes:
        x: Strictly increasing abscissa
        y: Ordinates
        sigma: Optional per-point uncertainties (> 0)
        x_unit: Unit tag of x (e.g. "ns", "MHz")
        y_unit: Unit tag of y
        source: Path the data came from, if any
        columns: Names of the source columns (x, y[, sigma])
    """

    x: np.ndarray
    y: np.ndarray
    sigma: Optional[np.ndarray] = None
    x_unit: str = ""
    y_unit: str = ""
    source: Optional[str] = None
    columns: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape:
            raise IngestionError(
                f"x and y must be 1-D of equal length, got {x.shape} and {y.shape}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise IngestionError("Data contains NaN or infinite values")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise IngestionError("x must be strictly increasing")
        if self.sigma is not None:
            sigma = np.asarray(self.sigma, dtype=float)
            object.__setattr__(self, "sigma", sigma)
            if sigma.shape != x.shape:
                raise IngestionError("sigma must have the same length as x")
            if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
                raise IngestionError("sigma must be finite and > 0")

    def __len__(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_unsorted(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        sigma: Optional[np.ndarray] = None,
        **metadata: object,
    ) -> "DataSeries":
        """
        Sort by x and average samples that share an x value.

        Duplicated y values are averaged; their sigmas combine as the
        standard error of the mean, sqrt(sum sigma^2) / n.

        Args:
            x: Abscissa in any order
            y: Ordinates
            sigma: Optional uncertainties
            **metadata: Forwarded to the constructor (units, source, columns)

        Returns:
            DataSeries: Sorted, duplicate-free series
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise IngestionError(f"x and y lengths differ: {x.size} vs {y.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise IngestionError("Data contains NaN or infinite values")

        unique_x, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
        if unique_x.size < x.size:
            logger.warning(
                "Averaged %d duplicate x values (%d samples -> %d)",
                int(np.sum(counts > 1)),
                x.size,
                unique_x.size,
            )
        mean_y = np.bincount(inverse, weights=y) / counts
        mean_sigma = None
        if sigma is not None:
            sigma = np.asarray(sigma, dtype=float)
            mean_sigma = np.sqrt(np.bincount(inverse, weights=sigma**2)) / counts
        return cls(unique_x, mean_y, mean_sigma, **metadata)  # type: ignore[arg-type]

    def scaled(self, factor: float) -> "DataSeries":
        """Copy with y (and sigma) multiplied by a positive factor."""
        sigma = None if self.sigma is None else self.sigma * abs(factor)
        return DataSeries(
            self.x, self.y * factor, sigma, self.x_unit, self.y_unit, self.source, self.columns
        )
