"""Runtime settings read from the environment, and run configurations read from YAML files."""
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from owid.charnum.common import ConfigError, ParameterRangeError

# PARALLELISM
THREADS = max(1, int(os.environ.get("CHARNUM_THREADS", "1")))
CHUNK_SIZE = max(1, int(os.environ.get("CHARNUM_CHUNK_SIZE", "32768")))

# NUMERICS
FD_STEP = float(os.environ.get("CHARNUM_FD_STEP", "1e-4"))
PAIR_CAP = int(os.environ.get("CHARNUM_PAIR_CAP", "2000000"))
SEED = int(os.environ.get("CHARNUM_SEED", "0"))

# Partition of unity denominators below this value mean the charts do not cover.
COVERAGE_FLOOR = 1e-12

# Relative quadrature step used when a run does not set one.
DEFAULT_STEP = 1 / 64

TEXT_KEYS = ("manifold", "spec", "poly", "connection", "out", "family", "eps")
NUMBER_KEYS = ("h", "iota", "kappa_lower", "kappa_upper")


def parse_range(text: str) -> Tuple[float, ...]:
    """Values ``start, start + step, …`` up to and including ``stop`` from ``"start:stop:step"``."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise ParameterRangeError(f"Range {text!r} is not of the form start:stop:step.")
    if step <= 0 or stop < start:
        raise ParameterRangeError(f"Range {text!r} needs a positive step and stop >= start.")
    count = int((stop - start) / step + 1e-9) + 1
    return tuple(round(start + k * step, 12) for k in range(count))


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one ``charnum`` command.

    ``iota``, ``kappa_lower`` and ``kappa_upper`` (injectivity radius floor and curvature bounds) are labels
    copied to sweep outputs; they are never computed.
    """

    manifold: Optional[str] = None
    spec: Optional[str] = None
    poly: str = "euler"
    connection: str = "lc"
    h: Optional[float] = None
    out: Optional[str] = None
    family: Optional[str] = None
    eps: Optional[str] = None
    harmonic_only: bool = False
    iota: Optional[float] = None
    kappa_lower: Optional[float] = None
    kappa_upper: Optional[float] = None

    def __post_init__(self) -> None:
        for name in TEXT_KEYS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                object.__setattr__(self, name, str(value))
        for name in NUMBER_KEYS:
            value = getattr(self, name)
            if value is None:
                continue
            try:
                object.__setattr__(self, name, float(value))
            except (TypeError, ValueError):
                raise ConfigError(f"Run configuration key '{name}' must be a number, got {value!r}.")
        if not isinstance(self.harmonic_only, bool):
            raise ConfigError(f"Run configuration key 'harmonic_only' must be a boolean, got {self.harmonic_only!r}.")
        if self.h is not None and not self.h > 0:
            raise ParameterRangeError(f"Quadrature step must be positive, got {self.h}.")

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "RunConfig":
        with open(path, "r") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Run configuration {path} is not valid YAML: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Run configuration {path} must be a mapping.")
        return cls().merged(**{str(key).replace("-", "_"): value for key, value in data.items()})

    def merged(self, **overrides: Any) -> "RunConfig":
        """Copy with the given non-None values replaced."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"Unknown run configuration keys: {', '.join(unknown)}.")
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    @property
    def step(self) -> float:
        return DEFAULT_STEP if self.h is None else float(self.h)

    @property
    def eps_values(self) -> Tuple[float, ...]:
        if self.eps is None:
            raise ParameterRangeError("A sweep needs an --eps range.")
        return parse_range(str(self.eps))

    def metadata(self) -> Dict[str, Optional[float]]:
        return {"iota": self.iota, "kappa_lower": self.kappa_lower, "kappa_upper": self.kappa_upper}
