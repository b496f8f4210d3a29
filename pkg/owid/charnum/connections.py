"""Christoffel and curvature fields of the Levi-Civita and the piecewise Euclidean connection.

Fields are evaluators: a `ChristoffelField` maps points ``x[n, k]`` of its chart to ``Γ[n, k, μ, ν]`` and a
`CurvatureField` maps them to ``R[n, k, λ, μ, ν]``. Curvature is always assembled as

    R^k_{λμν} = (∂_μ Γ^k_{νλ} + Σ_κ Γ^k_{μκ} Γ^κ_{νλ})_{[μν]}

from a Christoffel array and an array of (possibly effective) first derivatives ``dΓ[n, k, ν, λ, μ]``, so every
curvature array is antisymmetric in its last two axes bit for bit.

The piecewise Euclidean connection of an atlas with partition of unity ``ψ_i`` is the convex combination of the
flat connections of the charts. Its curvature is evaluated from transition Jacobians and Hessians only: the
derivative of the inverse Jacobian comes from the chain rule, and the third derivative term of ``∂_μ Γ`` is
symmetric in ``(μ, ν)`` and drops out of the bracket.
"""
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import signal
from scipy.interpolate import RegularGridInterpolator

from owid.charnum import config
from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.partition import PartitionOfUnity, Weights, bump
from owid.charnum.atlas.transitions import TransitionMap
from owid.charnum.common import (
    AtlasError,
    GridTooSmallError,
    MarginError,
    OverlapError,
    ParameterRangeError,
    SingularMetricError,
)
from owid.charnum.forms import antisymmetrize_pair, max_norm
from owid.charnum.holder import SampledFunction

logger = structlog.get_logger()

Evaluator = Callable[[np.ndarray], np.ndarray]


# Mollification cutoff: identically 1 on |y| <= r/2, zero from |y| >= 3r/4 (target chart coordinates).
CUTOFF_EXTENT = 0.75
CUTOFF_CORE = 2 / 3


def _points(x: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    """Christoffel symbols ``Γ^k_{μν}`` of a connection in the coordinates of chart `chart`.

    `derivative`, when given, evaluates ``dΓ[n, k, μ, ν, λ] = ∂_λ Γ^k_{μν}``.
    """

    chart: int
    evaluate: Evaluator
    source: str
    derivative: Optional[Evaluator] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(_points(x))


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Curvature ``R^k_{λμν}`` in the coordinates of chart `chart`.

    `connection` names the source of the connection it was computed from.
    """

    chart: int
    evaluate: Evaluator
    provenance: str
    connection: str = "levi_civita"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(_points(x))


def curvature_from_derivative(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """Assemble ``R[n, k, λ, μ, ν]`` from ``Γ[n, k, ν, λ]`` and ``dΓ[n, k, ν, λ, μ] = ∂_μ Γ^k_{νλ}``."""
    a = np.einsum("nkvlm->nklmv", dgamma) + np.einsum("nkmc,ncvl->nklmv", gamma, gamma)
    return antisymmetrize_pair(a, 3, 4)


def _central_difference(func: Evaluator, x: np.ndarray, h: float) -> np.ndarray:
    columns = []
    for c in range(x.shape[1]):
        shift = np.zeros(x.shape[1])
        shift[c] = h
        columns.append((func(x + shift) - func(x - shift)) / (2 * h))
    return np.stack(columns, axis=-1)


def _check_overlap(transition: TransitionMap, x: np.ndarray) -> None:
    inside = transition.overlap(x)
    if not inside.all():
        raise OverlapError(
            f"Point {x[np.argmin(inside)].tolist()} of chart {transition.source} is outside the overlap "
            f"with chart {transition.target}."
        )


def _metric_and_derivative(chart: Chart, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    g = chart.metric(x)
    if not np.all(np.isfinite(g)) or np.any(np.linalg.det(g) <= 0):
        raise SingularMetricError(f"Metric of chart {chart.index} is singular or indefinite at some point.")
    return g, chart.metric_jacobian(x)


def _christoffel_from_metric(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    n, d = g.shape[:2]
    # B[κ, μ, ν] = ∂_ν g_κμ + ∂_μ g_κν - ∂_κ g_μν
    b = dg + np.swapaxes(dg, 2, 3) - np.einsum("nmvk->nkmv", dg)
    return 0.5 * np.linalg.solve(g, b.reshape(n, d, d * d)).reshape(n, d, d, d)


def levi_civita_christoffel(chart: Chart) -> ChristoffelField:
    """Levi-Civita connection of the metric of `chart`.

    The inverse metric is applied by a linear solve per point. The derivative evaluator uses the closed-form
    second derivatives of the metric when the metric model has them and central differences of ``Γ`` with the
    model's `fd_step` otherwise.

    Raises
    ------
    SingularMetricError
        When evaluated at a point where the metric is singular or not finite.
    """

    def evaluate(x: np.ndarray) -> np.ndarray:
        return _christoffel_from_metric(*_metric_and_derivative(chart, _points(x)))

    def derivative(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        if not chart.metric_model.closed_form:
            return _central_difference(evaluate, x, chart.metric_model.fd_step)
        g, dg = _metric_and_derivative(chart, x)
        ddg = chart.metric_hessian(x)
        n, d = g.shape[:2]
        gamma = _christoffel_from_metric(g, dg)
        # g ∂_λ Γ = ½ ∂_λ B - (∂_λ g) Γ
        db = ddg + np.swapaxes(ddg, 2, 3) - np.einsum("nmvkl->nkmvl", ddg)
        rhs = 0.5 * db - np.einsum("nkal,namv->nkmvl", dg, gamma)
        return np.linalg.solve(g, rhs.reshape(n, d, d**3)).reshape(n, d, d, d, d)

    return ChristoffelField(chart.index, evaluate, "levi_civita", derivative)


def coordinate_curvature(gamma: ChristoffelField, fd_step: float = config.FD_STEP) -> CurvatureField:
    """Curvature of `gamma` by the coordinate formula.

    Uses the derivative evaluator of `gamma` when it has one and central differences with step `fd_step` otherwise.
    """
    if fd_step <= 0:
        raise ParameterRangeError("Finite difference step must be positive.")

    def evaluate(x: np.ndarray) -> np.ndarray:
        values = gamma.evaluate(x)
        if gamma.derivative is not None:
            dgamma = gamma.derivative(x)
        else:
            dgamma = _central_difference(gamma.evaluate, x, fd_step)
        return curvature_from_derivative(values, dgamma)

    return CurvatureField(gamma.chart, evaluate, "coordinate_formula", gamma.source)


def levi_civita_curvature(chart: Chart) -> CurvatureField:
    return coordinate_curvature(levi_civita_christoffel(chart), chart.metric_model.fd_step)


def pushforward_christoffel(gamma: Optional[ChristoffelField], transition: TransitionMap) -> ChristoffelField:
    """Connection given in chart ``transition.target`` expressed in chart ``transition.source``.

    ``Γ^k_{μν} = Σ X_{kk'} Γ'^{k'}_{μ'ν'}(y) J_{μ'μ} J_{ν'ν} + Σ_l X_{kl} H_{lμν}``
    with ``J = Dy``, ``H = D²y`` and ``X = (Dy)^{-1}``. ``gamma=None`` stands for the flat connection of the
    target chart, for which only the second derivative term remains.

    Raises
    ------
    AtlasError
        If `gamma` lives in another chart than the transition target.
    OverlapError
        When evaluated outside the overlap.
    """
    if gamma is not None and gamma.chart != transition.target:
        raise AtlasError(f"Connection of chart {gamma.chart} cannot be pushed through {transition}.")

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        _check_overlap(transition, x)
        jac = transition.jacobian(x)
        inverse_jac = np.linalg.inv(jac)
        values = np.einsum("nkl,nlmv->nkmv", inverse_jac, transition.hessian(x))
        if gamma is not None:
            values = values + np.einsum(
                "nka,nabc,nbm,ncv->nkmv", inverse_jac, gamma.evaluate(transition.value(x)), jac, jac, optimize=True
            )
        return values

    source = "piecewise_euclidean" if gamma is None else gamma.source
    return ChristoffelField(transition.source, evaluate, source)


def _euclidean_terms(
    manifold: AtlasManifold, chart: int, x: np.ndarray, weights: Weights, with_derivative: bool
) -> Iterator[Tuple[int, np.ndarray, np.ndarray, Optional[np.ndarray]]]:
    """Flat connection of every other chart whose weight is positive somewhere in `x`.

    Yields ``(i, rows, Γ_i, S_i)`` where ``Γ_i = X H`` on ``x[rows]`` and ``S_i[n, k, ν, λ, μ]`` is
    ``Σ_l (X_{kl})_{,μ} H_{lνλ}``.
    """
    for i in range(len(manifold)):
        if i == chart:
            continue
        rows = np.flatnonzero(weights.values[:, i] > 0)
        if not len(rows):
            continue
        transition = manifold.transition(chart, i)
        back = manifold.transition(i, chart)
        if transition is None or back is None:
            raise AtlasError(f"Chart {i} has weight on chart {chart} but no transition to it.")
        xs = x[rows]
        if not transition.overlap(xs).all():
            raise AtlasError(f"Chart {i} has weight outside its overlap with chart {chart}.")
        y = transition.value(xs)
        hess = transition.hessian(xs)
        gamma = np.einsum("nkl,nlmv->nkmv", back.jacobian(y), hess)
        second = None
        if with_derivative:
            d_inverse_jac = np.einsum("nklm,nmu->nklu", back.hessian(y), transition.jacobian(xs))
            second = np.einsum("nklu,nlvw->nkvwu", d_inverse_jac, hess)
        yield i, rows, gamma, second


def piecewise_euclidean_christoffel(
    manifold: AtlasManifold, pou: PartitionOfUnity, target_chart: int
) -> ChristoffelField:
    """``Γ = Σ_i ψ_i Γ_i`` where ``Γ_i`` is the flat connection of chart ``i`` seen from `target_chart`.

    Charts whose weight vanishes at a point contribute nothing there and their transitions are not evaluated.
    """

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        weights = pou.evaluate(target_chart, x, order=1)
        d = manifold.dim
        values = np.zeros((len(x), d, d, d))
        for i, rows, gamma, _ in _euclidean_terms(manifold, target_chart, x, weights, False):
            values[rows] += weights.values[rows, i, None, None, None] * gamma
        return values

    return ChristoffelField(target_chart, evaluate, "piecewise_euclidean")


def pe_curvature(manifold: AtlasManifold, pou: PartitionOfUnity, target_chart: int) -> CurvatureField:
    """Curvature of the piecewise Euclidean connection from first and second transition derivatives only."""

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        weights = pou.evaluate(target_chart, x, order=1)
        d = manifold.dim
        gamma = np.zeros((len(x), d, d, d))
        dgamma = np.zeros((len(x), d, d, d, d))
        for i, rows, gamma_i, second in _euclidean_terms(manifold, target_chart, x, weights, True):
            psi = weights.values[rows, i]
            gamma[rows] += psi[:, None, None, None] * gamma_i
            dgamma[rows] += np.einsum("nu,nkvw->nkvwu", weights.gradients[rows, i], gamma_i)
            dgamma[rows] += psi[:, None, None, None, None] * second
        return curvature_from_derivative(gamma, dgamma)

    return CurvatureField(target_chart, evaluate, "pe_formula", "piecewise_euclidean")


def tensor_transform_curvature(curvature: CurvatureField, transition: TransitionMap) -> CurvatureField:
    """Transform a curvature field of chart ``transition.target`` as a (3,1)-tensor into ``transition.source``.

    Raises
    ------
    AtlasError
        If `curvature` lives in another chart than the transition target.
    OverlapError
        When evaluated outside the overlap.
    """
    if curvature.chart != transition.target:
        raise AtlasError(f"Curvature of chart {curvature.chart} cannot be transformed through {transition}.")

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        _check_overlap(transition, x)
        jac = transition.jacobian(x)
        other = curvature.evaluate(transition.value(x))
        return np.einsum("nKLMN,nLl,nMm,nNv,nkK->nklmv", other, jac, jac, jac, np.linalg.inv(jac), optimize=True)

    return CurvatureField(transition.source, evaluate, curvature.provenance, curvature.connection)


def prime_bracket_identity(f: np.ndarray, g: np.ndarray) -> float:
    """Residual of ``Σ_{μ'ν'} (f_{μμ'} g_{νν'})_{[μν]'} = (Σ_{μ'} f_{μμ'} Σ_{ν'} g_{νν'})_{[μν]}``.

    The primed bracket swaps the index pairs ``(μ, μ')`` and ``(ν, ν')`` together. `f` and `g` have shape
    ``(..., d, d)``.
    """
    h = np.einsum("...ab,...cd->...abcd", f, g)
    swapped = np.einsum("...abcd->...cdab", h)
    lhs = (h - swapped).sum(axis=(-3, -1))
    rhs = antisymmetrize_pair(np.einsum("...a,...c->...ac", f.sum(axis=-1), g.sum(axis=-1)), -2, -1)
    return float(np.max(np.abs(lhs - rhs)))


def double_derivative_identity(transition: TransitionMap, inverse: TransitionMap, x: np.ndarray) -> float:
    """Residual of ``0 = Σ_l ((X_{kl}∘y)_{,λ} y_{l,ν} + (X_{kl}∘y) y_{l,νλ})`` at points `x`.

    ``y`` is `transition`, ``X`` the Jacobian of `inverse`; the derivative of ``X∘y`` is taken by the chain rule.
    """
    x = _points(x)
    _check_overlap(transition, x)
    y = transition.value(x)
    jac = transition.jacobian(x)
    d_inverse_jac = np.einsum("nklm,nmu->nklu", inverse.hessian(y), jac)
    residual = np.einsum("nklu,nlv->nkvu", d_inverse_jac, jac) + np.einsum(
        "nkl,nlvu->nkvu", inverse.jacobian(y), transition.hessian(x)
    )
    return float(np.max(np.abs(residual)))


def mollifier_kernel(delta: float, step: float, dim: int) -> np.ndarray:
    """Discrete kernel ``exp(-1 / (1 - |z/δ|²))`` on the lattice ``step · Z^dim``, normalized to sum 1.

    Raises
    ------
    GridTooSmallError
        If `delta` does not exceed `step`, so the kernel would collapse to a single node.
    """
    m = int(np.floor(delta / step))
    if m < 1:
        raise GridTooSmallError(f"Mollifier radius {delta:g} is below the lattice step {step:g}.")
    axis = np.arange(-m, m + 1) * step
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    rho2 = sum(grid**2 for grid in grids) / delta**2
    inside = rho2 < 1
    kernel = np.where(inside, np.exp(-1 / np.where(inside, 1 - rho2, 1.0)), 0.0)
    kernel /= kernel.sum()
    return kernel


@dataclass(frozen=True, eq=False)
class MollifiedConnection:
    """Mollified piecewise Euclidean connection of one chart, sampled on its weight support box.

    Attributes
    ----------
    christoffel : SampledFunction
        ``Γ[…, k, μ, ν]`` on the lattice of step `step` over ``[-r/2, r/2]^d``.
    curvature : SampledFunction
        ``R[…, k, λ, μ, ν]`` on the same lattice.
    kernel_mass : float
        Sum of the discrete kernel weights.
    margin : float
        Distance from the supports of the weights to the points where transition derivatives are undefined,
        capped by the lattice padding available inside the chart.
    """

    chart: int
    delta: float
    step: float
    christoffel: SampledFunction
    curvature: SampledFunction
    kernel_mass: float
    margin: float

    @property
    def points(self) -> np.ndarray:
        return self.christoffel.points()

    def christoffel_field(self) -> ChristoffelField:
        return ChristoffelField(self.chart, _interpolator(self.christoffel), "mollified")

    def curvature_field(self) -> CurvatureField:
        return CurvatureField(self.chart, _interpolator(self.curvature), "pe_formula", "mollified")


def _interpolator(f: SampledFunction) -> Evaluator:
    interpolate = RegularGridInterpolator(f.axes(), f.values, bounds_error=False, fill_value=None)

    def evaluate(x: np.ndarray) -> np.ndarray:
        return interpolate(_points(x))

    return evaluate


def _convolve(values: np.ndarray, kernel: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    d = len(shape)
    grid = values.reshape(shape + values.shape[1:])
    weights = kernel.reshape(kernel.shape + (1,) * (values.ndim - 1))
    return signal.fftconvolve(grid, weights, mode="same", axes=tuple(range(d))).reshape(values.shape)


def support_margin(
    transition: TransitionMap, support_radius: float, nodes: np.ndarray, per_axis: int = 4096
) -> float:
    """Distance between the target weight support, seen in source coordinates, and the singular set of `transition`.

    The support is the preimage of the box ``[-s, s]^d``; its boundary is sampled on the faces of the box (corners
    included) and mapped back, and the lattice `nodes` inside the support cover the rest.
    """
    d = transition.dim
    n = max(3, int(round(per_axis ** (1 / max(d - 1, 1)))))
    face = np.linspace(-support_radius, support_radius, n)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([face] * (d - 1)), indexing="ij")], axis=-1)
    boundary = []
    for axis in range(d):
        for side in (-support_radius, support_radius):
            boundary.append(np.insert(grid, axis, side, axis=1))
    y = np.concatenate(boundary)
    inverse = transition.inverse()
    x = inverse.value(y[inverse.derivatives_defined(y)])
    x = x[np.all(np.isfinite(x), axis=1)]
    extent = float(np.max(np.abs(nodes))) if len(nodes) else 0.0
    x = x[max_norm(x) <= extent]
    distances = np.concatenate([transition.singular_distance(x), transition.singular_distance(nodes)])
    return float(distances.min()) if len(distances) else math.inf


def _mollify_chart(
    manifold: AtlasManifold, pou: PartitionOfUnity, chart: Chart, delta: float, step: float
) -> MollifiedConnection:
    d = manifold.dim
    half = chart.support_radius
    cells = max(int(round(half / step)), 1)
    step = half / cells
    kernel = mollifier_kernel(delta, step, d)
    pad = kernel.shape[0] // 2 + 1
    axis = step * np.arange(-(cells + pad), cells + pad + 1)
    shape = (len(axis),) * d
    x = np.stack([grid.ravel() for grid in np.meshgrid(*([axis] * d), indexing="ij")], axis=-1)
    weights = pou.evaluate(chart.index, x, order=1, strict=False)

    margin = half - step
    fields = {}
    for i in range(len(manifold)):
        support = weights.values[:, i] > config.COVERAGE_FLOOR
        if i == chart.index or not support.any():
            continue
        transition = manifold.transition(chart.index, i)
        defined = transition.derivatives_defined(x)
        margin = min(margin, support_margin(transition, manifold.charts[i].support_radius, x[support]))
        cutoff = np.zeros(len(x))
        y = transition.value(x[defined])
        cutoff[defined] = bump(
            y, CUTOFF_EXTENT * manifold.charts[i].radius, order=1, core=CUTOFF_CORE
        )[0]
        jac = np.zeros((len(x), d, d))
        hess = np.zeros((len(x), d, d, d))
        jac[defined] = cutoff[defined, None, None] * transition.jacobian(x[defined])
        hess[defined] = cutoff[defined, None, None, None] * transition.hessian(x[defined])
        fields[i] = (jac, hess)
    if delta >= margin:
        raise MarginError(
            f"Mollifier radius {delta:g} is not below the margin {margin:.3g} of chart {chart.index}."
        )

    inner = np.all(np.abs(x) <= half * (1 + 1e-12), axis=1)
    psi = _convolve(weights.values, kernel, shape)[inner]
    grad = _convolve(weights.gradients, kernel, shape)[inner]
    total = psi.sum(axis=1)
    psi = psi / total[:, None]
    grad = (grad - psi[:, :, None] * grad.sum(axis=1)[:, None, :]) / total[:, None, None]
    negligible = psi <= config.COVERAGE_FLOOR
    psi[negligible] = 0.0
    grad[negligible] = 0.0

    n = int(inner.sum())
    gamma = np.zeros((n, d, d, d))
    dgamma = np.zeros((n, d, d, d, d))
    for i, (jac, hess) in fields.items():
        rows = np.flatnonzero(psi[:, i] > 0)
        if not len(rows):
            continue
        jac_m = _convolve(jac, kernel, shape)[inner][rows]
        hess_m = _convolve(hess, kernel, shape)[inner][rows]
        inverse_jac = np.linalg.inv(jac_m)
        gamma_i = np.einsum("nkl,nlmv->nkmv", inverse_jac, hess_m)
        # ∂_μ X = -X (∂_μ J) X with ∂_μ J_{ab} = H_{abμ}
        d_inverse_jac = -np.einsum("nka,nabu,nbl->nklu", inverse_jac, hess_m, inverse_jac)
        gamma[rows] += psi[rows, i, None, None, None] * gamma_i
        dgamma[rows] += np.einsum("nu,nkvw->nkvwu", grad[rows, i], gamma_i)
        dgamma[rows] += psi[rows, i, None, None, None, None] * np.einsum("nklu,nlvw->nkvwu", d_inverse_jac, hess_m)
    curvature = curvature_from_derivative(gamma, dgamma)

    box = (2 * cells + 1,) * d
    center = np.zeros(d)
    logger.info(
        "connection.mollified", chart=chart.index, delta=delta, step=step, margin=margin, points=n
    )
    return MollifiedConnection(
        chart=chart.index,
        delta=delta,
        step=step,
        christoffel=SampledFunction(center, half, step, gamma.reshape(box + (d,) * 3)),
        curvature=SampledFunction(center, half, step, curvature.reshape(box + (d,) * 4)),
        kernel_mass=float(kernel.sum()),
        margin=margin,
    )


def mollified_pe_connection(
    manifold: AtlasManifold,
    pou: PartitionOfUnity,
    delta: float,
    step: Optional[float] = None,
    charts: Optional[Sequence[int]] = None,
) -> List[MollifiedConnection]:
    """Mollify the piecewise Euclidean connection with a kernel of radius `delta`.

    Inverse chart Jacobians and Hessians (cut off away from the target chart box) and the partition weights are
    convolved with the kernel on a lattice of step `step` (default ``delta / 4``) padded around each support box.
    The smoothed weights are renormalized to sum to one and the curvature is formed from the smoothed data by the
    second-derivative-only formula.

    Parameters
    ----------
    manifold : AtlasManifold
        Atlas.
    pou : PartitionOfUnity
        Partition of unity of `manifold`.
    delta : float
        Kernel radius.
    step : float, optional
        Lattice step; rounded so that lattice nodes fall on the support box boundary.
    charts : sequence of int, optional
        Charts to process (default all).

    Returns
    -------
    list of MollifiedConnection
        One entry per processed chart.

    Raises
    ------
    ParameterRangeError
        If `delta` or `step` is not positive.
    MarginError
        If `delta` is not below the margin of some chart.
    """
    if delta <= 0 or (step is not None and step <= 0):
        raise ParameterRangeError("Mollifier radius and lattice step must be positive.")
    step = delta / 4 if step is None else step
    indices = range(len(manifold)) if charts is None else charts
    return [_mollify_chart(manifold, pou, manifold.charts[i], delta, step) for i in indices]
