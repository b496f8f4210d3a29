"""Manifold-spec JSON documents.

A spec lists charts and transitions explicitly::

    {
      "name": "my_sphere",
      "dim": 2,
      "charts": [{"radius": 3, "metric": "round_sphere", "orientation": 1, "center": "north"}, ...],
      "transitions": [{"from": 0, "to": 1, "kind": "inversion"}, ...]
    }

Chart metrics are builtin ids or ``{"grid": "<file>"}`` with a CHGRID01 file relative to the spec. Transitions whose
reverse is missing get the closed-form inverse.
"""
from pathlib import Path
from typing import Any, Callable, Dict, Union

import structlog

from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.metrics import (
    ConformalMetric,
    FlatMetric,
    FubiniStudyMetric,
    GridMetric,
    MetricModel,
    round_sphere_potential,
)
from owid.charnum.atlas.transitions import (
    AffineTransition,
    IdentityTransition,
    InversionTransition,
    ProjectiveTransition,
    TransitionMap,
    TranslationTransition,
)
from owid.charnum.common import CharnumError, ConfigError
from owid.charnum.io.grid import load_grid
from owid.charnum.io.json import load_json

logger = structlog.get_logger()

METRICS: Dict[str, Callable[[int], MetricModel]] = {
    "flat": FlatMetric,
    "round_sphere": lambda dim: ConformalMetric(dim, round_sphere_potential),
    "fubini_study": lambda dim: FubiniStudyMetric(dim // 2),
}


def _metric(entry: Any, dim: int, radius: float, base_dir: Path) -> MetricModel:
    if isinstance(entry, str):
        if entry not in METRICS:
            raise ConfigError(f"Unknown metric '{entry}'. Available: {', '.join(METRICS)} or {{'grid': <file>}}.")
        return METRICS[entry](dim)
    if isinstance(entry, dict) and "grid" in entry:
        try:
            grid = load_grid(base_dir / entry["grid"])
        except FileNotFoundError:
            raise ConfigError(f"Grid file {entry['grid']} not found next to the manifold spec.")
        model = GridMetric(grid, radius)
        if model.dim != dim:
            raise ConfigError(f"Grid {entry['grid']} has dimension {model.dim}, spec declares {dim}.")
        return model
    raise ConfigError(f"Cannot read chart metric {entry!r}.")


def _transition(entry: Dict[str, Any], dim: int, radii: Dict[int, float]) -> TransitionMap:
    try:
        source, target, kind = int(entry["from"]), int(entry["to"]), entry["kind"]
    except KeyError as e:
        raise ConfigError(f"Transition entry {entry} lacks key {e}.")
    if source not in radii or target not in radii:
        raise ConfigError(f"Transition {source} -> {target} refers to a missing chart.")
    target_radius, source_radius = radii[target], radii[source]
    if kind == "identity":
        return IdentityTransition(source, target, dim, target_radius, source_radius)
    if kind == "translation":
        return TranslationTransition(
            source, target, entry["offset"], target_radius, entry.get("period"), source_radius
        )
    if kind == "inversion":
        return InversionTransition(source, target, dim, target_radius, source_radius)
    if kind == "affine":
        return AffineTransition(source, target, entry["matrix"], entry["offset"], target_radius, source_radius)
    if kind == "projective":
        return ProjectiveTransition(source, target, dim // 2, target_radius, source_radius)
    raise ConfigError(f"Unknown transition kind '{kind}'.")


def _build(data: Dict[str, Any], base_dir: Path) -> AtlasManifold:
    try:
        name, dim, chart_entries = data["name"], int(data["dim"]), data["charts"]
    except KeyError as e:
        raise ConfigError(f"Manifold spec lacks key {e}.")
    charts = []
    for index, entry in enumerate(chart_entries):
        try:
            radius = float(entry["radius"])
        except KeyError:
            raise ConfigError(f"Chart {index} of manifold spec lacks key 'radius'.")
        charts.append(
            Chart(
                index,
                radius,
                _metric(entry.get("metric", "flat"), dim, radius, base_dir),
                orientation=int(entry.get("orientation", 1)),
                center=str(entry.get("center", "")),
            )
        )
    radii = {chart.index: chart.radius for chart in charts}
    transitions = {}
    for entry in data.get("transitions", []):
        transition = _transition(entry, dim, radii)
        transitions[(transition.source, transition.target)] = transition
    return AtlasManifold(str(name), tuple(charts), transitions)


def manifold_from_dict(data: Dict[str, Any], base_dir: Union[str, Path] = ".") -> AtlasManifold:
    """Build an atlas from a parsed manifold spec.

    Parameters
    ----------
    data : dict
        Parsed spec document.
    base_dir : str or Path
        Directory against which grid files are resolved.

    Returns
    -------
    AtlasManifold
        Atlas whose metrics have been checked for positive definiteness.

    Raises
    ------
    ConfigError
        If keys are missing or values have the wrong type.
    """
    try:
        manifold = _build(data, Path(base_dir))
    except CharnumError:
        raise
    except KeyError as e:
        raise ConfigError(f"Manifold spec lacks key {e}.")
    except (AttributeError, TypeError, ValueError) as e:
        raise ConfigError(f"Cannot read manifold spec: {e}")
    manifold.check_metrics()
    logger.info(
        "manifold.loaded",
        manifold=manifold.name,
        dim=manifold.dim,
        charts=len(manifold),
        transitions=len(manifold.transitions),
    )
    return manifold


def load_manifold_spec(spec_file: Union[str, Path]) -> AtlasManifold:
    """Read a manifold-spec JSON file (grid files resolve against its folder)."""
    spec_file = Path(spec_file)
    try:
        data = load_json(spec_file)
    except ValueError as e:
        raise ConfigError(f"Manifold spec {spec_file} is not valid JSON: {e}")
    return manifold_from_dict(data, spec_file.parent)
