"""
Report generation module for cavity qubit analyzer.

Reports are `key=value` lines with stable ordering; numbers are written with
17 significant digits so they parse back to the same double.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

Value = Union[str, int, float, bool, None]


def format_value(value: Value) -> str:
    """
    Format one value for a report or CSV cell.

    Args:
        value: Scalar to format

    Returns:
        str: Text form ("true"/"false" for booleans, %.17g for floats)
    """
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


class ReportGenerator:
    """
    Collects key=value entries and renders them as text.
    """

    def __init__(self) -> None:
        """
        Initialize the report generator.
        """
        self.entries: List[Tuple[str, str]] = []
        self.headers: Dict[str, str] = {}

    def set_header(self, key: str, value: str) -> None:
        """
        Set a header emitted as a `# key: value` comment before the entries.

        Args:
            key: Header key
            value: Header value
        """
        self.headers[key] = value

    def add(self, key: str, value: Value) -> None:
        """
        Add one entry.

        Args:
            key: Entry key (no '=' allowed)
            value: Entry value
        """
        if "=" in key:
            raise ValueError(f"Report keys cannot contain '=': {key!r}")
        self.entries.append((key, format_value(value)))

    def add_mapping(self, mapping: Mapping[str, Value], prefix: Optional[str] = None) -> None:
        """
        Add every entry of a mapping, keeping its order.

        Args:
            mapping: Keys and values
            prefix: Optional prefix joined with a dot (e.g. "param")
        """
        for key, value in mapping.items():
            self.add(f"{prefix}.{key}" if prefix else key, value)

    def extend(self, pairs: Iterable[Tuple[str, Value]]) -> None:
        """Add (key, value) pairs in order."""
        for key, value in pairs:
            self.add(key, value)

    def get_lines(self, include_headers: bool = True) -> List[str]:
        """
        Get the report as a list of lines.

        Args:
            include_headers: Whether to include header comment lines

        Returns:
            List[str]: Report lines
        """
        lines = []
        if include_headers:
            lines.extend(f"# {key}: {value}" for key, value in self.headers.items())
        lines.extend(f"{key}={value}" for key, value in self.entries)
        return lines

    def get_report(self, include_headers: bool = True) -> str:
        """Get the report text (newline terminated)."""
        return "\n".join(self.get_lines(include_headers)) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        """
        Save the report to a file.

        Args:
            path: Output file path
        """
        Path(path).write_text(self.get_report(), encoding="utf-8")

    @staticmethod
    def parse(text: str) -> Dict[str, str]:
        """
        Parse report text back into a dictionary.

        Args:
            text: Report text

        Returns:
            Dict[str, str]: Entries (comment lines skipped)
        """
        entries = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key] = value
        return entries
