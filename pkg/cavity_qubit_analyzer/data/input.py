"""
CSV input handling module for cavity qubit analyzer.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from cavity_qubit_analyzer.data.report import format_value
from cavity_qubit_analyzer.errors import (
    CsvFormatError,
    IngestionError,
    InsufficientDataError,
    MissingColumnError,
)
from cavity_qubit_analyzer.fitting.series import DataSeries

logger = logging.getLogger(__name__)

TIMESTAMP_HEADER = "timestamps_ns"

KNOWN_UNITS = ("ns", "us", "ms", "s", "MHz", "GHz", "THz", "nm", "um", "G", "counts")


@dataclass(eq=False)
class CsvTable:
    """
    Named numeric columns read from a comma-separated file.

    Attributes:
        columns: Column name -> values, in file order
        comments: Text of `#` comment lines, in file order
        delimiter: Cell delimiter
    """

    columns: Dict[str, np.ndarray]
    comments: List[str] = field(default_factory=list)
    delimiter: str = ","

    def __post_init__(self) -> None:
        lengths = {name: len(values) for name, values in self.columns.items()}
        if len(set(lengths.values())) > 1:
            raise CsvFormatError(f"Columns have unequal lengths: {lengths}")

    @property
    def names(self) -> List[str]:
        return list(self.columns)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def is_timestamp_table(self) -> bool:
        """True when the file declares the single-column timestamp format."""
        return TIMESTAMP_HEADER in self.columns and len(self.columns) == 1

    def column(self, name: str) -> np.ndarray:
        """
        Get a column by name.

        Args:
            name: Column name

        Returns:
            np.ndarray: Column values
        """
        if name not in self.columns:
            raise MissingColumnError(f"Column {name!r} not found; available: {self.names}")
        return self.columns[name]

    def save(self, path: Union[str, Path], header: bool = True) -> None:
        """
        Write the table as CSV with 17 significant digits per value.

        Args:
            path: Output file path
            header: Whether to write the column-name row
        """
        with open(path, "w", newline="", encoding="utf-8") as f:
            for comment in self.comments:
                f.write(f"# {comment}\n")
            writer = csv.writer(f, delimiter=self.delimiter, lineterminator="\n")
            if header and not self.is_timestamp_table:
                writer.writerow(self.names)
            for row in zip(*self.columns.values()):
                writer.writerow([format_value(float(v)) for v in row])


class CsvInput:
    """
    Handles CSV input from files.
    """

    def __init__(self, source: Union[str, Path], delimiter: str = ","):
        """
        Initialize the CSV input handler.

        Args:
            source: Path to the CSV file
            delimiter: Cell delimiter
        """
        self.source = str(source)
        self.delimiter = delimiter
        self.table: Optional[CsvTable] = None

    def open(self) -> bool:
        """
        Read the source into memory.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            self.table = self.read()
            return True
        except (OSError, IngestionError) as e:
            logger.error("Could not read %s: %s", self.source, e)
            return False

    def read(self) -> CsvTable:
        """
        Parse the file.

        A first row with any non-numeric cell is the header. Headerless files
        get names from their width: x / x,y / x,y,sigma, or col1..colN; a
        single column under a `# timestamps_ns` comment is a timestamp table.

        Returns:
            CsvTable: Parsed table
        """
        comments: List[str] = []
        header: Optional[List[str]] = None
        rows: List[List[float]] = []
        width: Optional[int] = None

        with open(self.source, newline="", encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                if stripped.startswith("#"):
                    comments.append(stripped.lstrip("#").strip())
                    continue
                cells = next(csv.reader([stripped], delimiter=self.delimiter))
                cells = [c.strip() for c in cells]
                if header is None and not rows and not all(_is_number(c) for c in cells):
                    header = cells
                    width = len(cells)
                    continue
                if width is None:
                    width = len(cells)
                if len(cells) != width:
                    raise CsvFormatError(
                        f"Expected {width} cells, found {len(cells)}", row=line_number
                    )
                values = []
                for index, cell in enumerate(cells):
                    if not _is_number(cell):
                        name = header[index] if header else str(index + 1)
                        raise CsvFormatError(f"Non-numeric cell {cell!r}", line_number, name)
                    values.append(float(cell))
                rows.append(values)

        if width is None:
            raise IngestionError(f"No data in {self.source}")
        names = header if header is not None else _default_names(width, comments)
        data = np.array(rows, dtype=float).reshape(len(rows), width)
        columns = {name: data[:, i] for i, name in enumerate(names)}
        return CsvTable(columns, comments, self.delimiter)

    def get_table_info(self) -> dict:
        """
        Get information about the loaded table.

        Returns:
            dict: Source, column names, row count and comment count
        """
        table = self.table
        return {
            "source": self.source,
            "columns": table.names if table else [],
            "rows": table.n_rows if table else 0,
            "comments": len(table.comments) if table else 0,
        }

    @staticmethod
    def is_valid_csv_file(file_path: Union[str, Path]) -> bool:
        """
        Check if the given file is a readable numeric CSV file.

        Args:
            file_path: Path to the file

        Returns:
            bool: True if valid, False otherwise
        """
        path = Path(file_path)
        if not path.exists() or not path.is_file():
            return False
        if path.suffix.lower() not in (".csv", ".txt", ".dat"):
            return False
        return CsvInput(path).open()


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _default_names(width: int, comments: Sequence[str]) -> List[str]:
    if width == 1:
        return [TIMESTAMP_HEADER] if TIMESTAMP_HEADER in comments else ["x"]
    if width == 2:
        return ["x", "y"]
    if width == 3:
        return ["x", "y", "sigma"]
    return [f"col{i + 1}" for i in range(width)]


def unit_of(column_name: str) -> str:
    """
    Infer a unit tag from a column name suffix such as "time_ns".

    Args:
        column_name: Column name

    Returns:
        str: Unit tag, or "" when none is recognized
    """
    suffix = column_name.rsplit("_", 1)[-1] if "_" in column_name else ""
    return suffix if suffix in KNOWN_UNITS else ""


def ingest_csv(
    path: Union[str, Path],
    x_column: Optional[str] = None,
    y_column: Optional[str] = None,
    sigma_column: Optional[str] = None,
    min_points: int = 2,
) -> DataSeries:
    """
    Read a CSV file into a sorted DataSeries.

    Args:
        path: CSV file path
        x_column: Name of the x column (default: first column)
        y_column: Name of the y column (default: second column)
        sigma_column: Optional name of the uncertainty column
        min_points: Minimum number of distinct x values required

    Returns:
        DataSeries: Sorted series with duplicate x values averaged
    """
    table = CsvInput(path).read()
    if table.is_timestamp_table:
        raise IngestionError(
            f"{path} is a timestamp file; read it with read_timestamps instead"
        )
    names = table.names
    if len(names) < 2 and (x_column is None or y_column is None):
        raise MissingColumnError(f"Need at least two columns, found {names}")
    x_name = x_column or names[0]
    y_name = y_column or names[1]
    x = table.column(x_name)
    y = table.column(y_name)
    sigma = table.column(sigma_column) if sigma_column else None

    for name, values in ((x_name, x), (y_name, y)):
        if not np.all(np.isfinite(values)):
            raise IngestionError(f"Column {name!r} contains NaN or infinite values")

    columns = (x_name, y_name) + ((sigma_column,) if sigma_column else ())
    series = DataSeries.from_unsorted(
        x,
        y,
        sigma,
        x_unit=unit_of(x_name),
        y_unit=unit_of(y_name),
        source=str(path),
        columns=columns,
    )
    if len(series) < min_points:
        raise InsufficientDataError(
            f"{path} has {len(series)} distinct points, at least {min_points} are needed"
        )
    return series


def write_series(
    path: Union[str, Path],
    x: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] = ("x", "y"),
    comments: Sequence[str] = (),
) -> None:
    """
    Write two (or more) aligned columns as CSV.

    Args:
        path: Output file path
        x: First column
        y: Second column, or 2-D array of further columns
        names: Column names
        comments: Comment lines written first
    """
    y = np.asarray(y, dtype=float)
    extra = [y] if y.ndim == 1 else list(y)
    arrays = [np.asarray(x, dtype=float)] + extra
    if len(arrays) != len(names):
        raise ValueError(f"{len(names)} names for {len(arrays)} columns")
    CsvTable(dict(zip(names, arrays)), list(comments)).save(path)
