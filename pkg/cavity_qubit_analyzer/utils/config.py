"""
Run configuration for cavity qubit analyzer.

Config files are UTF-8 text with `key = value` lines and `#` comments.
Keys belong to a section, written either under a `[section]` header or as
`section.key`; a bare key is accepted when exactly one section defines it.
"""

import difflib
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from cavity_qubit_analyzer.cavity.consistency import DEFAULT_THRESHOLD
from cavity_qubit_analyzer.cavity.purcell import DEFAULT_ALPHA
from cavity_qubit_analyzer.errors import ConfigError
from cavity_qubit_analyzer.spin.hamiltonian import GAMMA_ELECTRON, PRESETS

logger = logging.getLogger(__name__)

CONFIG_ENV = "CAVITY_QUBIT_CONFIG"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PurcellSection(_Section):
    alpha: float = Field(DEFAULT_ALPHA, gt=0, lt=1)
    consistency_threshold: float = Field(DEFAULT_THRESHOLD, gt=0)


class SpinSection(_Section):
    gamma: float = Field(GAMMA_ELECTRON, gt=0)
    d_nanobeam: float = PRESETS["nanobeam-hh"]
    d_bulk: float = PRESETS["bulk-hh"]
    e: float = 0.0
    linewidth: float = Field(10.0, gt=0)

    def preset_d(self, name: str) -> float:
        """Axial splitting of a named preset, as configured."""
        values = {"nanobeam-hh": self.d_nanobeam, "bulk-hh": self.d_bulk}
        if name not in values:
            raise ConfigError(f"Unknown preset {name!r}; choose from {sorted(values)}")
        return values[name]


class EmitterSection(_Section):
    pump: float = Field(0.02, ge=0)
    radiative: float = Field(1.0 / 15.7, gt=0)
    shelve: float = Field(0.003, ge=0)
    deshelve: float = Field(1.0 / 75.0, ge=0)


class FitSection(_Section):
    max_iterations: int = Field(200, ge=1)
    interval: Literal["ci95", "t95", "sd"] = "ci95"


class SimulationSection(_Section):
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)


class RunConfig(BaseModel):
    """
    Built-in defaults overlaid with a config file.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    purcell: PurcellSection = Field(default_factory=PurcellSection)
    spin: SpinSection = Field(default_factory=SpinSection)
    emitter: EmitterSection = Field(default_factory=EmitterSection)
    fit: FitSection = Field(default_factory=FitSection)
    simulation: SimulationSection = Field(default_factory=SimulationSection)

    @classmethod
    def known_keys(cls) -> List[str]:
        """All `section.key` names."""
        keys = []
        for section, info in cls.model_fields.items():
            section_model = info.annotation
            fields = section_model.model_fields  # type: ignore[union-attr]
            keys.extend(f"{section}.{key}" for key in fields)
        return keys

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        """
        Parse config text.

        Args:
            text: File contents
            source: Name used in diagnostics

        Returns:
            RunConfig: Validated configuration
        """
        values: Dict[str, Dict[str, str]] = {}
        for section, key, value, line_number in _parse_lines(text, source):
            full = _qualify(section, key, source, line_number)
            section_name, field_name = full.split(".", 1)
            values.setdefault(section_name, {})[field_name] = value
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in error['loc'])}: {error['msg']}" for error in e.errors()
            )
            raise ConfigError(f"{source}: {problems}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Load a config file.

        Args:
            path: Config file path

        Returns:
            RunConfig: Validated configuration
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        logger.info("Loaded configuration from %s", path)
        return cls.from_text(text, str(path))

    def resolve(self, section: str, key: str, cli_value: Any = None) -> Any:
        """
        Apply precedence: CLI flag > config file > built-in default.

        Args:
            section: Section name
            key: Key name
            cli_value: Value given on the command line, or None

        Returns:
            Any: Effective value
        """
        if cli_value is not None:
            return cli_value
        try:
            return getattr(getattr(self, section), key)
        except AttributeError:
            raise ConfigError(f"Unknown config key {section}.{key}") from None


def _parse_lines(text: str, source: str) -> List[Tuple[Optional[str], str, str, int]]:
    entries = []
    section: Optional[str] = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in RunConfig.model_fields:
                raise ConfigError(
                    f"{source}:{line_number}: unknown section [{section}]"
                    f"{_suggest(section, list(RunConfig.model_fields))}"
                )
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(
                f"{source}:{line_number}: expected 'key = value', got {raw.strip()!r}"
            )
        entries.append((section, key.strip(), value.strip(), line_number))
    return entries


def _qualify(section: Optional[str], key: str, source: str, line_number: int) -> str:
    known = RunConfig.known_keys()
    if "." in key:
        full = key
    elif section is not None:
        full = f"{section}.{key}"
    else:
        matches = [k for k in known if k.split(".", 1)[1] == key]
        if len(matches) > 1:
            raise ConfigError(
                f"{source}:{line_number}: key {key!r} is ambiguous; use one of {matches}"
            )
        full = matches[0] if matches else key
    if full not in known:
        raise ConfigError(f"{source}:{line_number}: unknown key {full!r}{_suggest(full, known)}")
    return full


def _suggest(name: str, candidates: List[str]) -> str:
    close = difflib.get_close_matches(name, candidates, n=1)
    if not close:
        bare = [c.split(".", 1)[-1] for c in candidates]
        matches = difflib.get_close_matches(name.split(".")[-1], bare, n=1)
        close = [candidates[bare.index(m)] for m in matches]
    return f"; did you mean {close[0]!r}?" if close else ""


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load the run configuration.

    Args:
        path: Explicit config path; falls back to $CAVITY_QUBIT_CONFIG

    Returns:
        RunConfig: Configuration (defaults only when no file is given)
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    return RunConfig.load(path)
