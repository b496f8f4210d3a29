"""Hölder and Sobolev norms of grid-sampled functions, chart norms and empirical estimate constants."""
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from owid.charnum import config
from owid.charnum.common import (
    GridTooSmallError,
    NotPositiveDefiniteError,
    ParameterRangeError,
    SingularMetricError,
    SubsampledSearchWarning,
)
from owid.charnum.forms import max_norm

logger = structlog.get_logger()

ESTIMATE_KINDS = ("product", "reciprocal", "composition", "difference_composition", "inverse")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Function sampled on the node lattice ``center - radius + k * step`` of a max-norm ball.

    ``values`` has shape ``(n,)*dim + value_shape``; ``mask`` (shape ``(n,)*dim``) selects the nodes that belong to
    the sampled set when it is not the whole lattice.
    """

    center: np.ndarray
    radius: float
    step: float
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", center)
        if self.step <= 0 or self.radius <= 0:
            raise ParameterRangeError("Sample grids need a positive radius and step.")
        d = center.size
        n = self.values.shape[0] if self.values.ndim else 0
        if self.values.ndim < d or self.values.shape[:d] != (n,) * d:
            raise GridTooSmallError(f"Values of shape {self.values.shape} are not a {d}-dimensional lattice.")
        if self.mask is not None and self.mask.shape != (n,) * d:
            raise GridTooSmallError("Mask does not match the lattice.")
        if not np.isfinite(self.values[self.node_mask]).all():
            raise ParameterRangeError("Sampled values must be finite.")

    @property
    def dim(self) -> int:
        return int(self.center.size)

    @property
    def points_per_axis(self) -> int:
        return int(self.values.shape[0])

    @property
    def value_shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape[self.dim :])

    @property
    def codomain_dim(self) -> int:
        return int(np.prod(self.value_shape, dtype=int))

    @property
    def node_mask(self) -> np.ndarray:
        if self.mask is None:
            return np.ones((self.points_per_axis,) * self.dim, dtype=bool)
        return self.mask

    def axes(self) -> List[np.ndarray]:
        offsets = self.step * np.arange(self.points_per_axis)
        return [c - self.radius + offsets for c in self.center]

    def points(self) -> np.ndarray:
        """All lattice nodes as an array of shape ``(n^dim, dim)``."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def samples(self) -> Tuple[np.ndarray, np.ndarray]:
        """Masked nodes and their values flattened to ``(m, dim)`` and ``(m, codomain_dim)``."""
        keep = self.node_mask.ravel()
        values = self.values.reshape((-1, self.codomain_dim))
        return self.points()[keep], values[keep]

    def with_values(self, values: np.ndarray) -> "SampledFunction":
        return SampledFunction(self.center, self.radius, self.step, values, self.mask)

    @classmethod
    def from_callable(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        dim: int,
        radius: float,
        step: float,
        center: Optional[Sequence[float]] = None,
        mask: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> "SampledFunction":
        """Sample ``func`` (points ``(m, dim)`` to values ``(m, ...)``) on the lattice of ``B(center, radius)``."""
        center_array = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        n = int(round(2 * radius / step)) + 1
        template = cls(center_array, radius, step, np.zeros((n,) * dim))
        points = template.points()
        values = np.asarray(func(points), dtype=float)
        values = values.reshape((n,) * dim + values.shape[1:])
        node_mask = None if mask is None else np.asarray(mask(points), dtype=bool).reshape((n,) * dim)
        return cls(center_array, radius, step, values, node_mask)


@dataclass
class ChartNormReport:
    """Components of the harmonic chart norm of one chart."""

    chart: int
    r: float
    m: int
    alpha: float
    step: float
    q_metric_bound: float
    q_holder: List[float]
    sup_norms: List[float]
    harmonic_residual: float
    q_total: float
    q_sobolev: Optional[List[float]] = None
    sobolev_p: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DistanceComparisonReport:
    q: float
    pairs: int
    slack: float
    upper_ratio: float
    lower_ratio: float
    max_upper_violation: float
    max_lower_violation: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.max_upper_violation <= self.tolerance and self.max_lower_violation <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "holds": self.holds}


@dataclass
class EstimateCalibration:
    kind: str
    max_ratio: float
    samples: int
    skipped: int
    ratios: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def finite_difference_gradient(f: SampledFunction, order: int = 1) -> SampledFunction:
    """Derivatives of order `order` by second order finite differences.

    Central differences inside, one-sided second order stencils on the boundary layer. Each derivative order
    appends one axis of length ``dim`` after the value axes, so ``∇g`` of a metric has axes ``(…, k, l, m)`` with
    the derivative last.

    Parameters
    ----------
    f : SampledFunction
        Sampled function.
    order : int
        Number of derivatives to take.

    Returns
    -------
    SampledFunction
        Derivative stack on the same lattice.

    Raises
    ------
    GridTooSmallError
        If the lattice has fewer than ``2 * order + 1`` points per axis.
    """
    if order < 0:
        raise ParameterRangeError("Derivative order must be non-negative.")
    if order and f.points_per_axis < 2 * order + 1:
        raise GridTooSmallError(f"{f.points_per_axis} points per axis cannot carry derivatives of order {order}.")
    values = f.values
    for _ in range(order):
        values = np.stack([central_difference(values, f.step, axis) for axis in range(f.dim)], axis=-1)
    return f.with_values(values)


def central_difference(values: np.ndarray, step: float, axis: int) -> np.ndarray:
    """Second order first derivative along `axis`, written in differences so constants give exactly zero."""
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * step)
    out[0] = (4 * (f[1] - f[0]) - (f[2] - f[0])) / (2 * step)
    out[-1] = (f[-3] - f[-1] - 4 * (f[-2] - f[-1])) / (2 * step)
    return np.moveaxis(out, 0, axis)


def _pair_ratios(points_a, values_a, points_b, values_b, alpha: float) -> float:
    dx = max_norm(points_a - points_b)
    dv = max_norm(values_a - values_b)
    valid = dx > 0
    if not valid.any():
        return 0.0
    return float(np.max(dv[valid] / dx[valid] ** alpha))


def holder_seminorm(
    f: SampledFunction, alpha: float, pair_cap: Optional[int] = None, seed: Optional[int] = None
) -> float:
    """Hölder seminorm ``sup |f(x) - f(y)| / |x - y|^alpha`` over sample pairs, max-norms on both sides.

    Exhaustive while the number of pairs is at most `pair_cap`; beyond it `pair_cap` pairs are drawn with a seeded
    generator and a `SubsampledSearchWarning` is issued. ``alpha = 0`` gives 0.
    """
    if not 0 <= alpha <= 1:
        raise ParameterRangeError(f"Hölder exponent {alpha} outside [0, 1].")
    if alpha == 0:
        return 0.0
    pair_cap = config.PAIR_CAP if pair_cap is None else pair_cap
    seed = config.SEED if seed is None else seed
    points, values = f.samples()
    m = len(points)
    n_pairs = m * (m - 1) // 2
    best = 0.0
    if n_pairs <= pair_cap:
        block = max(1, config.CHUNK_SIZE // max(m, 1))
        for start in range(0, m, block):
            stop = min(m, start + block)
            best = max(
                best,
                _pair_ratios(
                    points[start:stop, None, :], values[start:stop, None, :], points[None], values[None], alpha
                ),
            )
        return best
    warnings.warn(
        f"Hölder seminorm over {n_pairs} pairs subsampled to {pair_cap}.", SubsampledSearchWarning, stacklevel=2
    )
    rng = np.random.default_rng(seed)
    first = rng.integers(0, m, size=pair_cap)
    second = rng.integers(0, m, size=pair_cap)
    for start in range(0, pair_cap, config.CHUNK_SIZE):
        i = first[start : start + config.CHUNK_SIZE]
        j = second[start : start + config.CHUNK_SIZE]
        best = max(best, _pair_ratios(points[i], values[i], points[j], values[j], alpha))
    return best


def sup_norm(f: SampledFunction) -> float:
    _, values = f.samples()
    return float(np.max(np.abs(values))) if values.size else 0.0


def holder_norm(f: SampledFunction, m: int, alpha: float) -> float:
    """``Σ_{k≤m} (sup|∇^k f| + [∇^k f]_alpha)``; infinite when the lattice cannot carry ``m`` derivatives."""
    if m < 0:
        raise ParameterRangeError("Hölder order must be non-negative.")
    total = 0.0
    current = f
    for k in range(m + 1):
        if k:
            try:
                current = finite_difference_gradient(current, 1)
            except GridTooSmallError:
                return math.inf
        total += sup_norm(current) + holder_seminorm(current, alpha)
    return total


def _cell_average(values: np.ndarray, dim: int) -> np.ndarray:
    n = values.shape[0]
    for axis in range(dim):
        values = 0.5 * (np.take(values, range(n - 1), axis=axis) + np.take(values, range(1, n), axis=axis))
    return values


def sobolev_seminorm(g_field: SampledFunction, p: float, r: float, k: int) -> float:
    """``r^{2 - d/p} ‖∇^k g‖_{L^p}`` with midpoint quadrature over the lattice cells.

    Cell midpoint values are averages of the ``2^d`` corners; only cells with all corners in the mask count.
    """
    d = g_field.dim
    if not d <= p < math.inf:
        raise ParameterRangeError(f"Sobolev exponent {p} outside [{d}, inf).")
    derivative = finite_difference_gradient(g_field, k)
    n = derivative.points_per_axis
    flat = derivative.values.reshape((n,) * d + (-1,))
    midpoints = _cell_average(flat, d)
    cells = _cell_average(derivative.node_mask.astype(float), d) == 1.0
    integrand = np.linalg.norm(midpoints, axis=-1) ** p
    integral = float(np.sum(integrand[cells])) * g_field.step**d
    return float(r ** (2 - d / p) * integral ** (1 / p))


def _inverse_and_sqrt_det(metric: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    det = np.linalg.det(metric)
    if not np.all(np.isfinite(det)) or np.any(np.abs(det) < 1e-14):
        raise SingularMetricError("Metric is singular at a sample point.")
    return np.linalg.inv(metric), np.sqrt(np.abs(det))


def harmonic_residual(chart_metric: SampledFunction) -> float:
    """``max_j |∂_k(√det g · g^{kj})|`` over the masked nodes; zero exactly when coordinates are harmonic."""
    d = chart_metric.dim
    inverse, root = _inverse_and_sqrt_det(chart_metric.values)
    flux = root[..., None, None] * inverse
    divergence = sum(central_difference(flux[..., k, :], chart_metric.step, k) for k in range(d))
    return float(np.max(np.abs(divergence[chart_metric.node_mask]))) if d else 0.0


def metric_bound(samples: np.ndarray) -> float:
    """Smallest ``Q`` with ``e^{-2Q} δ ≤ g ≤ e^{2Q} δ`` on the given metric samples."""
    eigenvalues = np.linalg.eigvalsh(samples)
    if np.any(eigenvalues <= 0):
        raise NotPositiveDefiniteError("Metric has a non-positive eigenvalue at a sample point.")
    return float(0.5 * np.max(np.abs(np.log(eigenvalues))))


def chart_norm_report(
    chart: Any,
    m: int = 1,
    alpha: float = 0.5,
    step: Optional[float] = None,
    sobolev_p: Optional[float] = None,
    index: int = 0,
) -> ChartNormReport:
    """Harmonic chart norm components of `chart` on its own scale.

    Parameters
    ----------
    chart : Chart
        Object with ``dim``, ``radius`` and a vectorised ``metric(points)``.
    m : int
        Highest derivative order in the Hölder conditions.
    alpha : float
        Hölder exponent.
    step : float, optional
        Lattice step, defaults to a tenth of the radius.
    sobolev_p : float, optional
        If given, also report ``r^{2-d/p} ‖∇^k g‖_{L^p}`` for ``k = 1..m``.
    index : int
        Chart number recorded in the report.

    Returns
    -------
    ChartNormReport
        ``q_total`` is the maximum of the metric bound and the scaled seminorms.
    """
    r = float(chart.radius)
    step = r / 10 if step is None else step
    sample = SampledFunction.from_callable(chart.metric, chart.dim, r, step)
    q_metric = metric_bound(sample.values)
    q_holder: List[float] = []
    sup_norms: List[float] = []
    current = sample
    for k in range(m + 1):
        if k:
            try:
                current = finite_difference_gradient(current, 1)
            except GridTooSmallError:
                q_holder.extend([math.inf] * (m + 1 - k))
                sup_norms.extend([math.inf] * (m + 1 - k))
                break
        sup_norms.append(sup_norm(current))
        q_holder.append(r ** (k + alpha) * holder_seminorm(current, alpha))
    q_sobolev = None
    if sobolev_p is not None:
        q_sobolev = [sobolev_seminorm(sample, sobolev_p, r, k) for k in range(1, m + 1)]
    report = ChartNormReport(
        chart=index,
        r=r,
        m=m,
        alpha=alpha,
        step=step,
        q_metric_bound=q_metric,
        q_holder=q_holder,
        sup_norms=sup_norms,
        harmonic_residual=harmonic_residual(sample),
        q_total=max([q_metric] + q_holder),
        q_sobolev=q_sobolev,
        sobolev_p=sobolev_p,
    )
    logger.info("chart_norm.computed", chart=index, q_total=report.q_total, residual=report.harmonic_residual)
    return report


def lattice_path_slack(dim: int) -> float:
    """Largest ratio between shortest king-move lattice paths and Euclidean length in ``dim`` dimensions."""
    coefficients = [math.sqrt(k) - math.sqrt(k - 1) for k in range(1, dim + 1)]
    return math.sqrt(sum(c * c for c in coefficients))


def neighbour_offsets(dim: int) -> np.ndarray:
    grids = np.meshgrid(*[np.array([-1, 0, 1])] * dim, indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=-1)
    return offsets[np.any(offsets != 0, axis=1)]


def lattice_graph(
    metric: Callable[[np.ndarray], np.ndarray], points: np.ndarray, n: int, dim: int, step: float
) -> coo_matrix:
    """Sparse graph joining every lattice node to its ``3^dim - 1`` neighbours.

    Edge lengths are ``sqrt(v^T g(mid) v)`` with the metric at the edge midpoint.
    """
    index = np.arange(n**dim).reshape((n,) * dim)
    rows, cols, lengths = [], [], []
    for offset in neighbour_offsets(dim):
        source = index[tuple(slice(max(0, -o), n - max(0, o)) for o in offset)].ravel()
        target = index[tuple(slice(max(0, o), n - max(0, -o)) for o in offset)].ravel()
        v = step * offset.astype(float)
        g = metric(0.5 * (points[source] + points[target]))
        lengths.append(np.sqrt(np.einsum("k,nkl,l->n", v, g, v)))
        rows.append(source)
        cols.append(target)
    return coo_matrix(
        (np.concatenate(lengths), (np.concatenate(rows), np.concatenate(cols))), shape=(n**dim, n**dim)
    )


def verify_distance_comparison(
    chart: Any,
    q: Optional[float] = None,
    step: Optional[float] = None,
    sources: int = 8,
    seed: Optional[int] = None,
    rtol: float = 1e-6,
) -> DistanceComparisonReport:
    """Check ``e^{-Q} min{|x-y|, 2r-|x|} ≤ d_g(x, y) ≤ e^Q |x-y|`` on a chart lattice.

    ``d_g`` is the shortest path length in the neighbour graph of the lattice, which overestimates straight
    lengths by at most `lattice_path_slack`; the upper inequality is checked with that factor. ``|x - y|`` is
    Euclidean, ``|x|`` the max-norm.

    Parameters
    ----------
    chart : Chart
        Object with ``dim``, ``radius`` and a vectorised ``metric(points)``.
    q : float, optional
        Metric bound, defaults to the one measured on the lattice nodes.
    step : float, optional
        Lattice step, defaults to a tenth of the radius.
    sources : int
        Number of seeded random source nodes (the chart centre is always included).
    seed : int, optional
        Seed for the source selection.
    rtol : float
        Tolerance relative to the largest graph distance.
    """
    r = float(chart.radius)
    d = chart.dim
    step = r / 10 if step is None else step
    seed = config.SEED if seed is None else seed
    sample = SampledFunction.from_callable(chart.metric, d, r, step)
    q = metric_bound(sample.values) if q is None else q
    points = sample.points()
    n = sample.points_per_axis
    graph = lattice_graph(chart.metric, points, n, d, step)
    rng = np.random.default_rng(seed)
    centre = int(np.argmin(max_norm(points)))
    picked = rng.choice(len(points), size=min(sources, len(points)), replace=False)
    chosen = np.unique(np.concatenate([[centre], picked]))
    distances = dijkstra(graph.tocsr(), directed=False, indices=chosen)
    slack = lattice_path_slack(d)
    upper_ratio, lower_ratio = 0.0, math.inf
    upper_violation, lower_violation = 0.0, 0.0
    pairs = 0
    for row, source in enumerate(chosen):
        others = np.arange(len(points)) != source
        euclid = np.linalg.norm(points[others] - points[source], axis=-1)
        graph_distance = distances[row][others]
        upper = math.exp(q) * euclid
        lower = math.exp(-q) * np.minimum(euclid, 2 * r - max_norm(points[source]))
        upper_ratio = max(upper_ratio, float(np.max(graph_distance / upper)))
        lower_ratio = min(lower_ratio, float(np.min(graph_distance / lower)))
        upper_violation = max(upper_violation, float(np.max(graph_distance - slack * upper)))
        lower_violation = max(lower_violation, float(np.max(lower - graph_distance)))
        pairs += int(others.sum())
    tolerance = rtol * float(np.max(distances[np.isfinite(distances)]))
    report = DistanceComparisonReport(
        q=q,
        pairs=pairs,
        slack=slack,
        upper_ratio=upper_ratio,
        lower_ratio=lower_ratio,
        max_upper_violation=max(upper_violation, 0.0),
        max_lower_violation=max(lower_violation, 0.0),
        tolerance=tolerance,
    )
    logger.info("distance_comparison.checked", pairs=pairs, holds=report.holds, q=q)
    return report


# ESTIMATE CALIBRATION
UNIT_SQUARE = (np.array([0.5, 0.5]), 0.5)


def random_cubic(seed: int, outputs: int = 1, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Random polynomial of degree 3 in two variables, with `outputs` components."""
    rng = np.random.default_rng(seed)
    exponents = [(i, j) for i in range(4) for j in range(4 - i)]
    coefficients = scale * rng.normal(size=(len(exponents), outputs))

    def polynomial(points: np.ndarray) -> np.ndarray:
        monomials = np.stack([points[:, 0] ** i * points[:, 1] ** j for i, j in exponents], axis=-1)
        values = monomials @ coefficients
        return values[:, 0] if outputs == 1 else values

    return polynomial


def _sample_on(func: Callable, center: np.ndarray, radius: float, cells: int) -> SampledFunction:
    return SampledFunction.from_callable(func, 2, radius, 2 * radius / cells, center)


def _enclosing_ball(*values: np.ndarray) -> Tuple[np.ndarray, float]:
    stacked = np.concatenate([v.reshape(-1, 2) for v in values])
    low, high = stacked.min(axis=0), stacked.max(axis=0)
    return 0.5 * (low + high), max(float(np.max(high - low)) / 2, 1e-3)


def _jacobian(func: Callable, points: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    columns = []
    for k in range(points.shape[1]):
        shift = np.zeros(points.shape[1])
        shift[k] = eps
        columns.append((func(points + shift) - func(points - shift)) / (2 * eps))
    return np.stack(columns, axis=-1)


def _right_inverse(g: Callable, points: np.ndarray, iterations: int = 50) -> Optional[np.ndarray]:
    y = points.copy()
    for _ in range(iterations):
        residual = g(y) - points
        if np.max(np.abs(residual)) < 1e-12:
            return y
        y = y - np.linalg.solve(_jacobian(g, y), residual[..., None])[..., 0]
    return y if np.max(np.abs(g(y) - points)) < 1e-10 else None


def _default_family(kind: str, size: int, seed: int) -> List[Tuple[Callable, ...]]:
    family: List[Tuple[Callable, ...]] = []
    for i in range(size):
        s = 1000 * (seed + i)
        if kind == "product":
            family.append((random_cubic(s), random_cubic(s + 1)))
        elif kind == "reciprocal":
            perturbation = random_cubic(s, outputs=4, scale=0.05)
            family.append((lambda x, p=perturbation: 2 * np.eye(2) + p(x).reshape(-1, 2, 2),))
        elif kind == "composition":
            family.append((random_cubic(s), random_cubic(s + 1, outputs=2)))
        elif kind == "difference_composition":
            family.append((random_cubic(s), random_cubic(s + 1, outputs=2), random_cubic(s + 2, outputs=2)))
        else:
            perturbation = random_cubic(s, outputs=2, scale=0.02)
            family.append((lambda x, p=perturbation: x + p(x),))
    return family


def _estimate_sides(kind: str, sample: Tuple[Callable, ...], m: int, alpha: float, cells: int) -> Tuple[float, float]:
    center, radius = UNIT_SQUARE
    points = _sample_on(lambda x: x, center, radius, cells).points()
    if kind == "product":
        f, g = sample
        left = holder_norm(_sample_on(lambda x: f(x) * g(x), center, radius, cells), m, alpha)
        right = holder_norm(_sample_on(f, center, radius, cells), m, alpha) * holder_norm(
            _sample_on(g, center, radius, cells), m, alpha
        )
        return left, right
    if kind == "reciprocal":
        (a,) = sample
        if np.min(np.abs(np.linalg.det(a(points)))) < 1e-3:
            return 0.0, 0.0
        left = holder_norm(_sample_on(lambda x: np.linalg.inv(a(x)), center, radius, cells), m, alpha)
        return left, holder_norm(_sample_on(a, center, radius, cells), m, alpha)
    if kind == "composition":
        g, f = sample
        outer_center, outer_radius = _enclosing_ball(f(points))
        g_sampled = _sample_on(g, outer_center, outer_radius, cells)
        left = holder_norm(_sample_on(lambda x: g(f(x)), center, radius, cells), m, alpha)
        right = holder_norm(g_sampled, m, alpha) * holder_norm(_sample_on(f, center, radius, cells), m, alpha)
        return left, right + sup_norm(g_sampled)
    if kind == "difference_composition":
        g, u, v = sample
        outer_center, outer_radius = _enclosing_ball(u(points), v(points))
        left = holder_norm(_sample_on(lambda x: g(u(x)) - g(v(x)), center, radius, cells), m, 0.0)
        difference = _sample_on(lambda x: u(x) - v(x), center, radius, cells)
        right = (
            holder_norm(_sample_on(g, outer_center, outer_radius, cells), m, alpha)
            * (
                1
                + holder_norm(_sample_on(u, center, radius, cells), m, alpha)
                + holder_norm(_sample_on(v, center, radius, cells), m, alpha)
            )
            * (sup_norm(difference) ** alpha + holder_norm(difference, m, alpha))
        )
        return left, right
    (g,) = sample
    inverse = _right_inverse(g, points)
    if inverse is None:
        return 0.0, 0.0
    outer_center, outer_radius = _enclosing_ball(inverse)
    left = holder_norm(_sample_on(lambda x: inverse, center, radius, cells), m, alpha)
    return left, holder_norm(_sample_on(g, outer_center, outer_radius, cells), m, alpha)


def calibrate_estimate(
    kind: str,
    samples: Optional[Sequence[Tuple[Callable, ...]]] = None,
    family_size: int = 100,
    m: int = 1,
    alpha: float = 0.5,
    cells: int = 16,
    seed: Optional[int] = None,
) -> EstimateCalibration:
    """Largest ratio ``left / right`` of a Hölder estimate over a family of smooth functions on the unit square.

    Parameters
    ----------
    kind : str
        One of ``product``, ``reciprocal``, ``composition``, ``difference_composition``, ``inverse``.
    samples : sequence of tuples of callables, optional
        Functions plugged into the estimate: ``(f, g)`` for product, ``(A,)`` for reciprocal, ``(g, f)`` for
        ``g∘f``, ``(g, u, v)`` for ``g∘u - g∘v`` and ``(g,)`` for the right inverse of ``g``. Defaults to
        `family_size` random cubic polynomials, member ``i`` drawn from ``seed + i``.
    m, alpha : int, float
        Hölder order and exponent.
    cells : int
        Lattice cells per axis on every sampled domain.
    seed : int, optional
        Seed of the default family.

    Returns
    -------
    EstimateCalibration
        Samples with a vanishing right side (or a failed inverse) are skipped and counted.
    """
    if kind not in ESTIMATE_KINDS:
        raise ParameterRangeError(f"Unknown estimate {kind}; expected one of {', '.join(ESTIMATE_KINDS)}.")
    if kind == "difference_composition" and (alpha <= 0 or m < 1):
        raise ParameterRangeError("The difference composition estimate needs alpha > 0 and m >= 1.")
    seed = config.SEED if seed is None else seed
    family = _default_family(kind, family_size, seed) if samples is None else list(samples)
    ratios: List[float] = []
    skipped = 0
    for sample in family:
        left, right = _estimate_sides(kind, sample, m, alpha, cells)
        if right <= 0 or not math.isfinite(right):
            skipped += 1
            continue
        ratios.append(left / right)
    calibration = EstimateCalibration(
        kind=kind, max_ratio=max(ratios) if ratios else math.nan, samples=len(family), skipped=skipped, ratios=ratios
    )
    logger.info("estimate.calibrated", kind=kind, max_ratio=calibration.max_ratio, skipped=skipped)
    return calibration
