"""Experiment configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Dict, List, Optional

from . import diagnostics, sampling
from .selection import DEFAULT_TOURNAMENT_SIZE, LEXICASE, SELECTIONS
from .phylo import DEFAULT_DEPTH_LIMIT


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    diagnostic: str = "exploitation"
    selection: str = LEXICASE
    tournament_size: int = DEFAULT_TOURNAMENT_SIZE
    regime: str = sampling.FULL
    subsample_rate: float = 1.0
    pop_size: int = 500
    num_genes: int = diagnostics.DEFAULT_NUM_GENES
    max_generations: Optional[int] = 50_000
    max_evaluations: Optional[int] = None
    mutation_rate: float = diagnostics.DEFAULT_MUTATION_RATE
    mutation_sigma: float = diagnostics.DEFAULT_MUTATION_SIGMA
    depth_limit: int = DEFAULT_DEPTH_LIMIT
    worst_score: float = 0.0
    seed: int = 0
    replicate: int = 0
    record_interval: int = 1
    audit_estimation: bool = False
    condition: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def condition_name(self) -> str:
        if self.condition:
            return self.condition
        return f"{self.diagnostic}-{self.selection}-{self.regime}-{self.subsample_rate:g}"

    @property
    def sample_size(self) -> int:
        return sampling.sample_size(self.subsample_rate, self.num_genes)

    def validate(self) -> None:
        problems: List[str] = []
        if self.diagnostic not in diagnostics.DIAGNOSTICS:
            problems.append(f"diagnostic must be one of {diagnostics.DIAGNOSTICS}")
        if self.selection not in SELECTIONS:
            problems.append(f"selection must be one of {SELECTIONS}")
        if self.regime not in sampling.REGIMES:
            problems.append(f"regime must be one of {sampling.REGIMES}")
        if not 0.0 < self.subsample_rate <= 1.0:
            problems.append("subsample_rate must be in (0, 1]")
        if self.tournament_size < 1:
            problems.append("tournament_size must be >= 1")
        if self.pop_size < 1:
            problems.append("pop_size must be >= 1")
        if self.num_genes < 1:
            problems.append("num_genes must be >= 1")
        if self.max_generations is None and self.max_evaluations is None:
            problems.append("set max_generations and/or max_evaluations")
        if self.max_generations is not None and self.max_generations < 0:
            problems.append("max_generations must be >= 0")
        if (self.max_evaluations is not None and not problems
                and self.max_evaluations < self.pop_size * self.sample_size):
            problems.append("max_evaluations is smaller than one generation of evaluations")
        if not 0.0 <= self.mutation_rate <= 1.0:
            problems.append("mutation_rate must be in [0, 1]")
        if not self.mutation_sigma > 0:
            problems.append("mutation_sigma must be > 0")
        if self.depth_limit < 0:
            problems.append("depth_limit must be >= 0")
        if self.record_interval < 1:
            problems.append("record_interval must be >= 1")
        if self.condition is not None and ("," in self.condition or "\n" in self.condition):
            problems.append("condition may not contain commas or newlines")
        if problems:
            raise ConfigError("; ".join(problems))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_lines(self) -> List[str]:
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            out.append(f"{f.name} = {_format(value)}")
        return out


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str, annotation: str):
    text = raw.strip()
    optional = annotation.startswith("Optional")
    if optional and text.lower() in ("", "none"):
        return None
    try:
        if "bool" in annotation:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if "int" in annotation:
            # allow 50_000 and 5e4-style integral literals
            number = float(text.replace("_", "")) if any(c in text for c in ".eE") else int(text.replace("_", ""))
            if isinstance(number, float):
                if not number.is_integer():
                    raise ValueError(text)
                number = int(number)
            return number
        if "float" in annotation:
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return text


_FIELD_TYPES: Dict[str, str] = {f.name: str(f.type) for f in fields(ExperimentConfig)}

# External spellings accepted for a few keys.
_ALIASES = {"subsample-rate": "subsample_rate", "sampling": "regime"}


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, _FIELD_TYPES[key])
    values.update(overrides)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, **overrides)
