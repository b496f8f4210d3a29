"""Charts and chart atlases of closed even-dimensional manifolds."""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from owid.charnum import config
from owid.charnum.atlas.metrics import MetricModel, ScaledMetric
from owid.charnum.atlas.transitions import TransitionMap
from owid.charnum.common import (
    AtlasError,
    DimensionError,
    NotPositiveDefiniteError,
    OddDimensionError,
    OrientationError,
    SingularMetricError,
)

logger = structlog.get_logger()

# Relative tolerance for metric symmetry checks.
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Chart:
    """Coordinate chart on ``[-radius, radius]^d`` carrying a metric model.

    Partition weights of the chart are supported on the half box ``[-radius/2, radius/2]^d``.
    """

    index: int
    radius: float
    metric_model: MetricModel
    orientation: int = 1
    center: str = ""

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise AtlasError(f"Chart {self.index} has non-positive radius {self.radius}.")
        if self.orientation not in (1, -1):
            raise AtlasError(f"Chart {self.index} has orientation {self.orientation}, expected +1 or -1.")

    @property
    def dim(self) -> int:
        return self.metric_model.dim

    @property
    def support_radius(self) -> float:
        return self.radius / 2

    def metric(self, x: np.ndarray) -> np.ndarray:
        return self.metric_model.value(np.atleast_2d(np.asarray(x, dtype=float)))

    def metric_jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.metric_model.jacobian(np.atleast_2d(np.asarray(x, dtype=float)))

    def metric_hessian(self, x: np.ndarray) -> np.ndarray:
        return self.metric_model.hessian(np.atleast_2d(np.asarray(x, dtype=float)))

    def lattice(self, step: float, radius: Optional[float] = None) -> np.ndarray:
        """Nodes of the lattice with spacing `step` on ``[-radius, radius]^d`` (default: the weight support)."""
        radius = self.support_radius if radius is None else radius
        n = int(round(2 * radius / step)) + 1
        axis = np.linspace(-radius, radius, n)
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([grid.ravel() for grid in grids], axis=-1)

    def check_metric(self, x: np.ndarray) -> None:
        """Raise if the metric is not symmetric positive definite at the points `x`."""
        g = self.metric(x)
        if not np.all(np.isfinite(g)):
            raise SingularMetricError(f"Chart {self.index} metric has non-finite entries.")
        scale = max(float(np.max(np.abs(g))), 1.0)
        if np.max(np.abs(g - np.swapaxes(g, -1, -2))) > SYMMETRY_RTOL * scale:
            raise AtlasError(f"Chart {self.index} metric is not symmetric.")
        lowest = np.linalg.eigvalsh(g)[:, 0]
        if np.any(lowest <= 0):
            worst = int(np.argmin(lowest))
            raise NotPositiveDefiniteError(
                f"Chart {self.index} metric is not positive definite at {np.atleast_2d(x)[worst].tolist()} "
                f"(smallest eigenvalue {lowest[worst]:.3g})."
            )

    def rescaled(self, factor: float) -> "Chart":
        return replace(self, metric_model=ScaledMetric(self.metric_model, factor))


@dataclass(frozen=True, eq=False)
class AtlasManifold:
    """Closed manifold given by charts and the transitions between them.

    ``transitions[(j, i)]`` maps coordinates of chart ``j`` to coordinates of chart ``i``.
    """

    name: str
    charts: Tuple[Chart, ...]
    transitions: Dict[Tuple[int, int], TransitionMap] = field(default_factory=dict)

    def __post_init__(self) -> None:
        charts = tuple(self.charts)
        object.__setattr__(self, "charts", charts)
        if not charts:
            raise AtlasError("Atlas without charts.")
        d = charts[0].dim
        if d % 2:
            raise OddDimensionError(f"Manifold {self.name} has odd dimension {d}.")
        for position, chart in enumerate(charts):
            if chart.index != position:
                raise AtlasError(f"Chart at position {position} has index {chart.index}.")
            if chart.dim != d:
                raise DimensionError(f"Chart {chart.index} has dimension {chart.dim}, expected {d}.")
        transitions = dict(self.transitions)
        for (source, target), transition in list(transitions.items()):
            if (transition.source, transition.target) != (source, target):
                raise AtlasError(f"Transition stored under {(source, target)} maps {transition}.")
            if not (0 <= source < len(charts) and 0 <= target < len(charts)) or source == target:
                raise AtlasError(f"Transition {source} -> {target} does not connect two charts of the atlas.")
            if transition.dim != d:
                raise DimensionError(f"Transition {source} -> {target} acts on R^{transition.dim}.")
            if (target, source) not in transitions:
                transitions[(target, source)] = transition.inverse()
        object.__setattr__(self, "transitions", transitions)

    @property
    def dim(self) -> int:
        return self.charts[0].dim

    def __len__(self) -> int:
        return len(self.charts)

    def transition(self, source: int, target: int) -> Optional[TransitionMap]:
        return self.transitions.get((source, target))

    def neighbours(self, index: int) -> List[int]:
        """Charts reachable from chart `index` by a transition."""
        return sorted(target for source, target in self.transitions if source == index)

    def rescaled(self, factor: float) -> "AtlasManifold":
        """Same atlas with every metric multiplied by ``factor²``."""
        if factor <= 0:
            raise AtlasError(f"Cannot rescale by {factor}.")
        charts = tuple(chart.rescaled(factor) for chart in self.charts)
        return AtlasManifold(f"{self.name}*{factor:g}", charts, self.transitions)

    def overlap_samples(self, transition: TransitionMap, samples: int, seed: Optional[int] = None) -> np.ndarray:
        chart = self.charts[transition.source]
        rng = np.random.default_rng(config.SEED if seed is None else seed)
        x = rng.uniform(-chart.support_radius, chart.support_radius, size=(samples, self.dim))
        return x[transition.overlap(x)]

    def check_metrics(self, nodes_per_axis: Optional[int] = None) -> None:
        """Check every chart metric on a node lattice of its whole domain."""
        n = nodes_per_axis or (121 if self.dim <= 2 else 9)
        for chart in self.charts:
            chart.check_metric(chart.lattice(2 * chart.radius / (n - 1), radius=chart.radius))

    def check_orientation(self, samples: int = 200, seed: Optional[int] = None) -> None:
        """Check ``sign det D(T) = o_source o_target`` on random overlap points of every transition.

        Raises
        ------
        OrientationError
            At the first transition whose Jacobian sign disagrees.
        """
        for (source, target), transition in sorted(self.transitions.items()):
            x = self.overlap_samples(transition, samples, seed)
            if not len(x):
                continue
            expected = self.charts[source].orientation * self.charts[target].orientation
            signs = np.sign(np.linalg.det(transition.jacobian(x)))
            if np.any(signs != expected):
                raise OrientationError(
                    f"Transition {source} -> {target} has Jacobian sign {int(signs[signs != expected][0])}, "
                    f"charts have orientations {self.charts[source].orientation} and {self.charts[target].orientation}."
                )

    def check_round_trip(self, samples: int = 1000, seed: Optional[int] = None, tolerance: float = 1e-8) -> float:
        """Largest ``|T_back(T(x)) - x|`` over random overlap points of every transition pair.

        Raises
        ------
        AtlasError
            If the round trip error exceeds `tolerance` relative to ``1 + |x|``.
        """
        worst = 0.0
        for (source, target), transition in sorted(self.transitions.items()):
            back = self.transitions[(target, source)]
            x = self.overlap_samples(transition, samples, seed)
            if not len(x):
                continue
            error = np.max(np.abs(back.value(transition.value(x)) - x), axis=1) / (1 + np.max(np.abs(x), axis=1))
            worst = max(worst, float(np.max(error)))
        logger.info("atlas.round_trip", manifold=self.name, max_error=worst)
        if worst > tolerance:
            raise AtlasError(f"Transition round trip error {worst:.3g} exceeds {tolerance:.3g}.")
        return worst
