"""Built-in manifolds: spheres, flat tori, the complex projective plane and deformed metrics."""
import itertools
import re
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import structlog

from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.metrics import (
    ConformalMetric,
    FlatMetric,
    FubiniStudyMetric,
    MetricModel,
    perturbed_sphere_potential,
    perturbed_torus_potential,
    round_sphere_potential,
)
from owid.charnum.atlas.transitions import InversionTransition, ProjectiveTransition, TranslationTransition
from owid.charnum.common import ParameterRangeError, UnknownManifoldError

logger = structlog.get_logger()

SPHERE_CHART_RADIUS = 3.0
TORUS_CHART_RADIUS = 1.0
PROJECTIVE_CHART_RADIUS = 3.0


def sphere(dim: int, potential=round_sphere_potential, name: Optional[str] = None) -> AtlasManifold:
    """Sphere with the two stereographic charts from the north and south poles.

    The south chart is the inversion of the north chart, so the two charts carry opposite orientations.
    """
    charts = (
        Chart(0, SPHERE_CHART_RADIUS, ConformalMetric(dim, potential), orientation=1, center="north"),
        Chart(1, SPHERE_CHART_RADIUS, ConformalMetric(dim, potential), orientation=-1, center="south"),
    )
    transitions = {(0, 1): InversionTransition(0, 1, dim, SPHERE_CHART_RADIUS)}
    return AtlasManifold(name or f"s{dim}", charts, transitions)


def torus_centers(dim: int) -> np.ndarray:
    """Chart centres ``{0, 1/2}^dim`` on the unit torus."""
    return np.array(list(itertools.product([0.0, 0.5], repeat=dim)))


def flat_torus(
    dim: int,
    metric_factory: Optional[Callable[[np.ndarray], MetricModel]] = None,
    name: Optional[str] = None,
) -> AtlasManifold:
    """Unit torus ``R^dim / Z^dim`` with local isometry charts centred on the half lattice."""
    centers = torus_centers(dim)
    factory = metric_factory or (lambda center: FlatMetric(dim))
    charts = tuple(
        Chart(i, TORUS_CHART_RADIUS, factory(center), center=",".join(f"{c:g}" for c in center))
        for i, center in enumerate(centers)
    )
    transitions = {
        (j, i): TranslationTransition(j, i, centers[j] - centers[i], TORUS_CHART_RADIUS, period=1.0)
        for j, i in itertools.permutations(range(len(centers)), 2)
    }
    return AtlasManifold(name or f"t{dim}_flat", charts, transitions)


def complex_projective(complex_dim: int, name: Optional[str] = None) -> AtlasManifold:
    """``CP^n`` with its ``n + 1`` affine charts and the Fubini-Study metric."""
    charts = tuple(
        Chart(i, PROJECTIVE_CHART_RADIUS, FubiniStudyMetric(complex_dim), center=f"Z{i}")
        for i in range(complex_dim + 1)
    )
    transitions = {
        (j, i): ProjectiveTransition(j, i, complex_dim, PROJECTIVE_CHART_RADIUS)
        for j, i in itertools.permutations(range(complex_dim + 1), 2)
    }
    return AtlasManifold(name or f"cp{complex_dim}", charts, transitions)


def perturbed_sphere(eps: float) -> AtlasManifold:
    """Round 2-sphere with its conformal factor multiplied by ``1 + eps F`` for a smooth ``F``."""
    manifold = sphere(2, perturbed_sphere_potential(eps), name=f"s2_perturbed({eps:g})")
    manifold.check_metrics()
    return manifold


def perturbed_torus(eps: float) -> AtlasManifold:
    """Flat 2-torus with conformal factor ``1 + eps sin(2π p_1) sin(2π p_2)``."""
    manifold = flat_torus(
        2,
        lambda center: ConformalMetric(2, perturbed_torus_potential(eps, center)),
        name=f"t2_perturbed({eps:g})",
    )
    manifold.check_metrics()
    return manifold


BUILTINS: Dict[str, Callable[..., AtlasManifold]] = {
    "s2": lambda: sphere(2),
    "s4": lambda: sphere(4),
    "t2_flat": lambda: flat_torus(2),
    "t4_flat": lambda: flat_torus(4),
    "cp2": lambda: complex_projective(2),
    "s2_perturbed": perturbed_sphere,
    "t2_perturbed": perturbed_torus,
}

FAMILIES = ("s2_perturbed", "t2_perturbed")

NAME_PATTERN = re.compile(r"^\s*(?P<name>[a-z0-9_]+)\s*(?:\(\s*(?P<param>[^()]*?)\s*\))?\s*$")


def parse_manifold_name(text: str) -> Tuple[str, Optional[float]]:
    """Split ``"s2_perturbed(0.1)"`` into ``("s2_perturbed", 0.1)``."""
    match = NAME_PATTERN.match(text)
    if match is None or match.group("name") not in BUILTINS:
        raise UnknownManifoldError(f"Unknown manifold '{text}'. Available: {', '.join(BUILTINS)}.")
    name, param = match.group("name"), match.group("param")
    if param is None:
        return name, None
    try:
        return name, float(param)
    except ValueError:
        raise ParameterRangeError(f"Parameter '{param}' of manifold '{name}' is not a number.")


def builtin_manifold(text: str) -> AtlasManifold:
    """Build a built-in manifold from its name, e.g. ``"cp2"`` or ``"t2_perturbed(0.5)"``."""
    name, param = parse_manifold_name(text)
    if name in FAMILIES:
        if param is None:
            raise ParameterRangeError(f"Manifold family '{name}' needs a parameter, e.g. '{name}(0.1)'.")
        manifold = BUILTINS[name](param)
    elif param is not None:
        raise ParameterRangeError(f"Manifold '{name}' takes no parameter.")
    else:
        manifold = BUILTINS[name]()
    logger.info("manifold.built", manifold=manifold.name, dim=manifold.dim, charts=len(manifold))
    return manifold
