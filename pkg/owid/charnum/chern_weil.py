"""Invariant polynomials of curvature, characteristic numbers and volume bounds.

Densities are the coefficients ``c`` of top forms ``c dx^1∧…∧dx^d`` in chart coordinates. A chart contributes
``o ∫ ψ c dx`` to a characteristic number, with ``o`` its orientation sign.
"""
import math
import re
import warnings
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import structlog
from scipy.special import gamma as gamma_function

from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.nets import build_separated_net
from owid.charnum.atlas.partition import PartitionOfUnity
from owid.charnum.common import (
    CountingBoundViolation,
    DegreeMismatchWarning,
    MetricConnectionRequiredError,
    OddDimensionError,
    ParameterRangeError,
    SingularMetricError,
    UnknownPolynomialError,
)
from owid.charnum.connections import CurvatureField, levi_civita_curvature, pe_curvature
from owid.charnum.forms import (
    EvenForm,
    FormMatrix,
    elementary_symmetric_forms,
    pfaffian_of_forms,
    trace_power,
)
from owid.charnum.quadrature import integrate_chart, richardson_error

logger = structlog.get_logger()

CONNECTIONS = {"lc": "levi_civita", "pe": "piecewise_euclidean"}


@dataclass(frozen=True)
class InvariantPolynomial:
    """GL-invariant polynomial in the curvature 2-form matrix.

    Attributes
    ----------
    kind : str
        One of ``euler``, ``pontryagin``, ``chern``, ``trace_power``.
    index : int, optional
        ``j`` of ``p_j`` or ``c_j``.
    exponents : tuple of int
        ``(k_1, …)`` of ``Π tr(Ω^{k_i})`` for trace powers.
    """

    kind: str
    index: Optional[int] = None
    exponents: Tuple[int, ...] = ()

    @property
    def name(self) -> str:
        if self.kind == "euler":
            return "euler"
        if self.kind == "trace_power":
            return "tr-power:" + ",".join(str(k) for k in self.exponents)
        return f"{self.kind[0]}{self.index}"

    @property
    def requires_metric(self) -> bool:
        return self.kind == "euler"

    @property
    def normalization(self) -> str:
        return {
            "euler": "Pf(Ω/2π) in an oriented orthonormal frame",
            "pontryagin": "e_2j(Ω/2π)",
            "chern": "Re(i^j e_j(Ω/2π))",
            "trace_power": "Π tr((Ω/2π)^k)",
        }[self.kind]

    def degree(self, dim: int) -> int:
        """Number of curvature factors (half the form degree)."""
        if self.kind == "euler":
            return dim // 2
        if self.kind == "pontryagin":
            return 2 * int(self.index or 0)
        if self.kind == "chern":
            return int(self.index or 0)
        return sum(self.exponents)

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "kind": self.kind, "normalization": self.normalization}


def parse_polynomial(text: str) -> InvariantPolynomial:
    """Parse ``euler``, ``p<j>``, ``c<j>`` or ``tr-power:<k1,k2,…>``.

    Raises
    ------
    UnknownPolynomialError
        If `text` names no supported polynomial.
    """
    value = text.strip().lower()
    if value == "euler":
        return InvariantPolynomial("euler")
    match = re.fullmatch(r"([pc])(\d+)", value)
    if match:
        index = int(match.group(2))
        if index < 1:
            raise UnknownPolynomialError(f"Characteristic classes start at index 1, got {text!r}.")
        return InvariantPolynomial("pontryagin" if match.group(1) == "p" else "chern", index)
    match = re.fullmatch(r"tr-power:(\d+(?:,\d+)*)", value.replace(" ", ""))
    if match:
        exponents = tuple(int(k) for k in match.group(1).split(","))
        if min(exponents) < 1:
            raise UnknownPolynomialError(f"Trace powers start at 1, got {text!r}.")
        return InvariantPolynomial("trace_power", exponents=exponents)
    raise UnknownPolynomialError(f"Unknown invariant polynomial {text!r}.")


def curvature_to_form_matrix(
    curvature: Union[CurvatureField, np.ndarray], x: Optional[np.ndarray] = None
) -> FormMatrix:
    """``Ω^k_l = ½ R^k_{lμν} dx^μ∧dx^ν`` from a curvature array or a field evaluated at `x`."""
    if isinstance(curvature, CurvatureField):
        if x is None:
            raise ParameterRangeError("Evaluation points are required for a curvature field.")
        curvature = curvature(x)
    return FormMatrix.from_curvature(curvature)


def _top(form: EvenForm, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(form.top_coefficient(), dtype=float), (n,)).copy()


def _normalized(omega: FormMatrix) -> FormMatrix:
    return omega.scaled(1 / (2 * math.pi))


def pontryagin_density(j: int, omega: FormMatrix) -> np.ndarray:
    """Top coefficient of ``p_j = e_{2j}(Ω/2π)``; `omega` needs ``4j = dim``."""
    return _top(elementary_symmetric_forms(_normalized(omega), 2 * j)[2 * j], _points_of(omega))


def chern_density(j: int, omega: FormMatrix) -> np.ndarray:
    """Top coefficient of the real part of ``c_j = i^j e_j(Ω/2π)``; zero for odd `j`."""
    n = _points_of(omega)
    if j % 2:
        return np.zeros(n)
    sign = -1.0 if j % 4 == 2 else 1.0
    return sign * _top(elementary_symmetric_forms(_normalized(omega), j)[j], n)


def trace_power_density(exponents: Tuple[int, ...], omega: FormMatrix) -> np.ndarray:
    scaled = _normalized(omega)
    form = EvenForm.constant(omega.dim)
    for k in exponents:
        form = form.wedge(trace_power(scaled, k))
    return _top(form, _points_of(omega))


def _points_of(omega: FormMatrix) -> int:
    if omega.batch:
        return int(np.prod(omega.batch))
    for row in omega.entries:
        for entry in row:
            for value in entry.coeffs.values():
                return int(np.size(value))
    return 1


def euler_density(chart: Chart, curvature: CurvatureField, x: np.ndarray) -> np.ndarray:
    """Euler form coefficient ``Pf(Ω/2π)`` of a Levi-Civita curvature at points `x` of `chart`.

    The curvature is lowered with ``g`` and expressed in the orthonormal frame given by the symmetric square root
    ``g^{-1/2}``; the top coefficient in that frame is scaled by ``√det g`` and the orientation sign of the chart.

    Raises
    ------
    MetricConnectionRequiredError
        If `curvature` does not come from the Levi-Civita connection.
    SingularMetricError
        If the metric is not positive definite at some point.
    """
    if curvature.connection != "levi_civita":
        raise MetricConnectionRequiredError(
            f"The Euler form needs the Levi-Civita connection, got the {curvature.connection} one."
        )
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = chart.metric(x)
    eigenvalues, vectors = np.linalg.eigh(g)
    if np.any(eigenvalues <= 0):
        raise SingularMetricError(f"Metric of chart {chart.index} is not positive definite.")
    inverse_root = np.einsum("nab,nb,ncb->nac", vectors, eigenvalues**-0.5, vectors)
    lowered = np.einsum("nka,nalmv->nklmv", g, curvature(x))
    frame = np.einsum(
        "nia,njb,nkc,nle,nijkl->nabce", inverse_root, inverse_root, inverse_root, inverse_root, lowered, optimize=True
    )
    pf = pfaffian_of_forms(_normalized(FormMatrix.from_curvature(frame)))
    return chart.orientation * _top(pf, len(x)) * np.sqrt(np.prod(eigenvalues, axis=1))


DENSITIES: Dict[str, Callable[[InvariantPolynomial, FormMatrix], np.ndarray]] = {
    "pontryagin": lambda polynomial, omega: pontryagin_density(int(polynomial.index or 0), omega),
    "chern": lambda polynomial, omega: chern_density(int(polynomial.index or 0), omega),
    "trace_power": lambda polynomial, omega: trace_power_density(polynomial.exponents, omega),
}


def polynomial_density(
    polynomial: InvariantPolynomial, chart: Chart, curvature: CurvatureField, x: np.ndarray
) -> np.ndarray:
    """Top coefficient of `polynomial` evaluated on `curvature` at points `x`.

    Polynomials whose form degree differs from the dimension evaluate to zero with a `DegreeMismatchWarning`.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if 2 * polynomial.degree(chart.dim) != chart.dim:
        warnings.warn(
            f"{polynomial.name} has form degree {2 * polynomial.degree(chart.dim)}, not {chart.dim}.",
            DegreeMismatchWarning,
        )
        return np.zeros(len(x))
    if polynomial.kind == "euler":
        return euler_density(chart, curvature, x)
    density = DENSITIES[polynomial.kind](polynomial, curvature_to_form_matrix(curvature, x))
    return np.broadcast_to(density, (len(x),)).copy()


@dataclass(frozen=True)
class CharacteristicNumberResult:
    manifold: str
    polynomial: str
    connection: str
    value: float
    volume: float
    h: float
    error_estimate: float

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.volume

    def to_dict(self) -> Dict[str, object]:
        return {
            "manifold": self.manifold,
            "polynomial": self.polynomial,
            "connection": self.connection,
            "value": self.value,
            "volume": self.volume,
            "ratio": self.ratio,
            "h": self.h,
            "error_estimate": self.error_estimate,
        }


def _curvature_of(manifold: AtlasManifold, pou: PartitionOfUnity, chart: int, connection: str) -> CurvatureField:
    if connection == "levi_civita":
        return levi_civita_curvature(manifold.charts[chart])
    return pe_curvature(manifold, pou, chart)


def _integrate(
    manifold: AtlasManifold,
    pou: PartitionOfUnity,
    h: float,
    polynomial: Optional[InvariantPolynomial],
    connection: str,
) -> Tuple[float, float]:
    """``(Σ_i o_i ∫ ψ_i c_i dx, Σ_i ∫ ψ_i √det g_i dx)`` at step `h`."""
    values, volumes = [], []
    for chart in manifold.charts:
        matched = polynomial is not None and 2 * polynomial.degree(manifold.dim) == manifold.dim
        curvature = _curvature_of(manifold, pou, chart.index, connection) if matched else None

        def integrand(x: np.ndarray, chart: Chart = chart, curvature: Optional[CurvatureField] = curvature):
            psi = pou.own_weight(chart.index, x)
            out = np.zeros((len(x), 2))
            rows = np.flatnonzero(psi > 0)
            if not len(rows):
                return out
            xs = x[rows]
            out[rows, 1] = psi[rows] * np.sqrt(np.linalg.det(chart.metric(xs)))
            if curvature is not None and polynomial is not None:
                density = polynomial_density(polynomial, chart, curvature, xs)
                out[rows, 0] = chart.orientation * psi[rows] * density
            return out

        value, vol = integrate_chart(chart, integrand, h)
        values.append(value)
        volumes.append(vol)
    return math.fsum(values), math.fsum(volumes)


def integrate_characteristic_number(
    manifold: AtlasManifold,
    pou: PartitionOfUnity,
    polynomial: InvariantPolynomial,
    connection: str = "lc",
    h: float = 1 / 64,
    estimate_error: bool = True,
) -> CharacteristicNumberResult:
    """``Π[M] = Σ_i o_i ∫ ψ_i Π(Ω_i) dx`` by midpoint quadrature on every chart support box.

    Parameters
    ----------
    manifold : AtlasManifold
        Closed even-dimensional manifold.
    pou : PartitionOfUnity
        Partition of unity of `manifold`.
    polynomial : InvariantPolynomial
        Polynomial to integrate.
    connection : str
        ``lc`` (Levi-Civita) or ``pe`` (piecewise Euclidean).
    h : float
        Relative quadrature step.
    estimate_error : bool
        Also integrate at ``2h`` and report the Richardson error estimate.

    Returns
    -------
    CharacteristicNumberResult
        Value, volume (from the same pass) and error estimate.

    Raises
    ------
    MetricConnectionRequiredError
        For the Euler class with the piecewise Euclidean connection.
    CoverageError
        If the charts do not cover some quadrature node.
    """
    if connection not in CONNECTIONS:
        raise ParameterRangeError(f"Unknown connection {connection!r}; use one of {sorted(CONNECTIONS)}.")
    connection_name = CONNECTIONS[connection]
    if polynomial.requires_metric and connection_name != "levi_civita":
        raise MetricConnectionRequiredError()
    if manifold.dim % 2:
        raise OddDimensionError(f"Manifold {manifold.name} has odd dimension {manifold.dim}.")
    if 2 * polynomial.degree(manifold.dim) != manifold.dim:
        warnings.warn(
            f"{polynomial.name} does not integrate to a number on a {manifold.dim}-manifold.", DegreeMismatchWarning
        )
    value, vol = _integrate(manifold, pou, h, polynomial, connection_name)
    error = math.nan
    if estimate_error:
        coarse, _ = _integrate(manifold, pou, 2 * h, polynomial, connection_name)
        error = richardson_error(value, coarse)
    result = CharacteristicNumberResult(manifold.name, polynomial.name, connection_name, value, vol, h, error)
    logger.info("charnum.integrated", **result.to_dict())
    return result


def volume(manifold: AtlasManifold, pou: PartitionOfUnity, h: float = 1 / 64) -> float:
    """``Σ_i ∫ ψ_i √det g_i dx``."""
    return _integrate(manifold, pou, h, None, "levi_civita")[1]


def euclidean_ball_volume(d: int, radius: float) -> float:
    return float(math.pi ** (d / 2) / gamma_function(d / 2 + 1)) * radius**d


def volume_lower_bound(d: int, r: float, q: float, rho: float) -> float:
    """Lower bound ``ω_d (e^{-Q} ρ)^d e^{-dQ/2}`` for the volume of a metric ball of radius `rho`.

    Raises
    ------
    ParameterRangeError
        Unless ``0 < rho <= e^{-Q} r``.
    """
    if not 0 < rho <= math.exp(-q) * r * (1 + 1e-12):
        raise ParameterRangeError(f"Ball radius {rho} outside of (0, e^-Q r] = (0, {math.exp(-q) * r:.6g}].")
    return euclidean_ball_volume(d, math.exp(-q) * rho) * math.exp(-d * q / 2)


def counting_bound(d: int, vol: float, q: float, r: float) -> Tuple[int, float, float]:
    """``(⌊vol / v⌋, v, ρ)`` with ``v = volume_lower_bound(d, r, q, ρ)`` at ``ρ = e^{-2Q-2} r / 2``."""
    rho = math.exp(-2 * q - 2) * r / 2
    ball = volume_lower_bound(d, r, q, rho)
    return int(math.floor(vol / ball)), ball, rho


@dataclass(frozen=True)
class ChartCountBound:
    bound: int
    actual: int
    volume: float
    ball_volume: float
    rho: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "bound": self.bound,
            "actual": self.actual,
            "volume": self.volume,
            "ball_volume": self.ball_volume,
            "rho": self.rho,
        }


def chart_count_bound(
    manifold: AtlasManifold,
    q: float,
    r: float,
    pou: Optional[PartitionOfUnity] = None,
    h: float = 1 / 64,
) -> ChartCountBound:
    """Compare the size of a separated net of `manifold` with ``⌊vol(M) / v⌋``.

    ``v`` is `volume_lower_bound` at ``ρ = e^{-2Q-2} r / 2``, at most half the net separation.

    Raises
    ------
    CountingBoundViolation
        If the net has more points than the bound allows.
    """
    pou = PartitionOfUnity(manifold) if pou is None else pou
    vol = volume(manifold, pou, h)
    bound, ball, rho = counting_bound(manifold.dim, vol, q, r)
    net = build_separated_net(manifold, q, r)
    result = ChartCountBound(bound, len(net), vol, ball, rho)
    logger.info("charnum.chart_count", manifold=manifold.name, **result.to_dict())
    if result.actual > result.bound:
        raise CountingBoundViolation(f"Net of {result.actual} points exceeds the counting bound {result.bound}.")
    return result
