"""Verification suites run by ``charnum verify``.

Every suite takes a list of manifolds and returns a `VerificationReport` with one `CheckResult` per checked
property. A check passes when its largest deviation does not exceed its tolerance.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import structlog

from owid.charnum import config
from owid.charnum.atlas.builtins import builtin_manifold
from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.atlas.partition import PartitionOfUnity
from owid.charnum.chern_weil import (
    InvariantPolynomial,
    chart_count_bound,
    integrate_characteristic_number,
    parse_polynomial,
)
from owid.charnum.common import CountingBoundViolation, UnknownSuiteError
from owid.charnum.connections import (
    double_derivative_identity,
    levi_civita_curvature,
    mollified_pe_connection,
    pe_curvature,
    prime_bracket_identity,
    tensor_transform_curvature,
)
from owid.charnum.forms import max_norm
from owid.charnum.holder import metric_bound, verify_distance_comparison

logger = structlog.get_logger()

DEFAULT_MANIFOLDS = ("s2", "t2_flat", "s4", "t4_flat", "cp2")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    manifold: str
    check: str
    max_deviation: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class VerificationReport:
    suite: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def add(self, manifold: str, check: str, deviation: float, tolerance: float, strict: bool = False) -> CheckResult:
        """Record a check; NaN deviations fail. With `strict` the deviation must stay below the tolerance."""
        deviation = float(deviation)
        passed = deviation < tolerance if strict else deviation <= tolerance
        result = CheckResult(self.suite, manifold, check, deviation, tolerance, bool(passed))
        self.checks.append(result)
        if not result.passed:
            logger.warning("verify.check_failed", **result.to_dict())
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def _pair_samples(manifold: AtlasManifold, source: int, target: int, samples: int, seed: Optional[int]) -> np.ndarray:
    """Overlap points of the source support box whose image lies in the target support box."""
    transition = manifold.transitions[(source, target)]
    x = manifold.overlap_samples(transition, samples, seed)
    if len(x):
        x = x[max_norm(transition.value(x)) < manifold.charts[target].support_radius]
    return x


def coordinate_independence(
    manifolds: Sequence[AtlasManifold], samples: int = 200, tolerance: float = 1e-5, seed: Optional[int] = None
) -> VerificationReport:
    """Curvature transformed from the target chart as a (3,1)-tensor against the curvature of the source chart.

    Both the piecewise Euclidean and the Levi-Civita curvature are checked on every overlapping chart pair.
    """
    report = VerificationReport("coordinate-independence")
    for manifold in manifolds:
        pou = PartitionOfUnity(manifold)
        fields = {
            "pe": {chart.index: pe_curvature(manifold, pou, chart.index) for chart in manifold.charts},
            "lc": {chart.index: levi_civita_curvature(chart) for chart in manifold.charts},
        }
        for connection, curvatures in fields.items():
            deviation, pairs = 0.0, 0
            for (source, target), transition in sorted(manifold.transitions.items()):
                x = _pair_samples(manifold, source, target, samples, seed)
                if not len(x):
                    continue
                transformed = tensor_transform_curvature(curvatures[target], transition)(x)
                deviation = max(deviation, float(np.max(np.abs(transformed - curvatures[source](x)))))
                pairs += 1
            report.add(manifold.name, f"{connection} curvature tensor on {pairs} chart pairs", deviation, tolerance)
    return report


def independence_polynomial(dim: int) -> InvariantPolynomial:
    """Top-degree polynomial without metric: ``p_{d/4}`` when ``4 | d``, else ``tr(Ω)^{d/2}``."""
    if dim % 4 == 0:
        return parse_polynomial(f"p{dim // 4}")
    return parse_polynomial("tr-power:" + ",".join(["1"] * (dim // 2)))


def connection_independence(
    manifolds: Sequence[AtlasManifold],
    h: Optional[float] = None,
    rtol: float = 1e-2,
    atol: float = 1e-6,
) -> VerificationReport:
    """Characteristic number from the piecewise Euclidean connection against the Levi-Civita one.

    The tolerance is the largest of `rtol` times the Levi-Civita value, three times the summed Richardson error
    estimates and `atol`. The default step is 1/64 on surfaces and 1/16 otherwise.
    """
    report = VerificationReport("connection-independence")
    for manifold in manifolds:
        pou = PartitionOfUnity(manifold)
        polynomial = independence_polynomial(manifold.dim)
        step = h or (1 / 64 if manifold.dim == 2 else 1 / 16)
        lc = integrate_characteristic_number(manifold, pou, polynomial, "lc", step)
        pe = integrate_characteristic_number(manifold, pou, polynomial, "pe", step)
        tolerance = max(rtol * abs(lc.value), 3 * (lc.error_estimate + pe.error_estimate), atol)
        report.add(manifold.name, f"{polynomial.name} pe against lc at h={step:g}", abs(pe.value - lc.value), tolerance)
    return report


def mollification_convergence(
    manifolds: Sequence[AtlasManifold],
    deltas: Sequence[float] = (0.1, 0.05, 0.025),
    step: Optional[float] = None,
    chart: int = 0,
    flat_tolerance: float = 1e-10,
) -> VerificationReport:
    """C⁰ distance between mollified and unmollified piecewise Euclidean curvature over decreasing radii.

    Mollification needs a full lattice of the chart, so only surfaces are checked. On flat atlases the mollified
    curvature must stay zero; otherwise the distances must decrease with the radius.
    """
    report = VerificationReport("mollification-convergence")
    for manifold in manifolds:
        if manifold.dim > 2:
            logger.info("verify.skipped", suite=report.suite, manifold=manifold.name, dim=manifold.dim)
            continue
        pou = PartitionOfUnity(manifold)
        exact = pe_curvature(manifold, pou, chart)
        lattice_step = step or min(deltas) / 4
        distances, scale = [], 0.0
        for delta in deltas:
            (result,) = mollified_pe_connection(manifold, pou, delta, lattice_step, charts=[chart])
            values = result.curvature.values.reshape((-1,) + (manifold.dim,) * 4)
            reference = exact(result.points)
            scale = max(scale, float(np.max(np.abs(reference))))
            distances.append(float(np.max(np.abs(values - reference))))
            report.add(manifold.name, f"kernel mass at delta={delta:g}", abs(result.kernel_mass - 1), 1e-12)
        logger.info("verify.mollification", manifold=manifold.name, deltas=list(deltas), distances=distances)
        if scale <= flat_tolerance:
            report.add(manifold.name, "mollified curvature of a flat atlas", max(distances), flat_tolerance)
        else:
            increase = max(b - a for a, b in zip(distances, distances[1:]))
            report.add(manifold.name, "C0 distance strictly decreases with delta", increase, 0.0, strict=True)
    return report


def partition(
    manifolds: Sequence[AtlasManifold], samples: int = 10_000, tolerance: float = 1e-10, seed: Optional[int] = None
) -> VerificationReport:
    """Partition weights sum to one, lie in ``[0, 1]`` and vanish outside their support boxes."""
    report = VerificationReport("partition")
    rng = np.random.default_rng(config.SEED if seed is None else seed)
    for manifold in manifolds:
        pou = PartitionOfUnity(manifold)
        per_chart = max(100, samples // len(manifold))
        total, bounds, support = 0.0, 0.0, 0.0
        for chart in manifold.charts:
            x = rng.uniform(-chart.support_radius, chart.support_radius, size=(per_chart, manifold.dim))
            values = pou.evaluate(chart.index, x, order=1).values
            total = max(total, float(np.max(np.abs(values.sum(axis=1) - 1))))
            bounds = max(bounds, float(-np.min(values)), float(np.max(values) - 1))
            z = rng.uniform(-chart.radius, chart.radius, size=(per_chart, manifold.dim))
            z = z[max_norm(z) >= chart.support_radius]
            if len(z):
                own = pou.evaluate(chart.index, z, order=1, strict=False).values[:, chart.index]
                support = max(support, float(np.max(np.abs(own))))
        report.add(manifold.name, "weights sum to one", total, tolerance)
        report.add(manifold.name, "weights within [0, 1]", max(bounds, 0.0), tolerance)
        report.add(manifold.name, "weights vanish outside the support box", support, 0.0)
    return report


def _support_metric_bound(manifold: AtlasManifold) -> float:
    return max(metric_bound(chart.metric(chart.lattice(chart.support_radius / 8))) for chart in manifold.charts)


def distance_comparison(
    manifolds: Sequence[AtlasManifold],
    step: Optional[float] = None,
    seed: Optional[int] = None,
    count_max_dim: int = 2,
) -> VerificationReport:
    """Distance comparison on every chart, and the chart counting bound on low-dimensional manifolds.

    The counting bound uses the metric bound measured on the support boxes and the smallest support radius.
    """
    report = VerificationReport("distance-comparison")
    for manifold in manifolds:
        for chart in manifold.charts:
            chart_step = step or chart.radius / (10 if manifold.dim == 2 else 4)
            result = verify_distance_comparison(chart, step=chart_step, seed=seed)
            report.add(
                manifold.name,
                f"chart {chart.index} distance comparison (Q={result.q:.3g})",
                max(result.max_upper_violation, result.max_lower_violation),
                result.tolerance,
            )
        if manifold.dim > count_max_dim:
            continue
        q = _support_metric_bound(manifold)
        r = min(chart.support_radius for chart in manifold.charts)
        try:
            count = chart_count_bound(manifold, q, r)
            report.add(manifold.name, f"net of {count.actual} points within counting bound", 0.0, 0.0)
        except CountingBoundViolation as error:
            report.add(manifold.name, f"counting bound: {error}", math.inf, 0.0)
    return report


def appendix_identities(
    manifolds: Sequence[AtlasManifold], samples: int = 200, tolerance: float = 1e-9, seed: Optional[int] = None
) -> VerificationReport:
    """Bracket identity on random arrays and the inverse-Jacobian derivative identity on every transition."""
    report = VerificationReport("appendix-identities")
    rng = np.random.default_rng(config.SEED if seed is None else seed)
    for manifold in manifolds:
        f, g = rng.normal(size=(2, samples, manifold.dim, manifold.dim))
        report.add(manifold.name, "primed bracket identity", prime_bracket_identity(f, g), 1e-12)
        deviation = 0.0
        for (source, target), transition in sorted(manifold.transitions.items()):
            x = manifold.overlap_samples(transition, samples, seed)
            if len(x):
                inverse = manifold.transitions[(target, source)]
                deviation = max(deviation, double_derivative_identity(transition, inverse, x))
        report.add(manifold.name, "derivative of the inverse Jacobian", deviation, tolerance)
    return report


SUITES: Dict[str, Callable[..., VerificationReport]] = {
    "coordinate-independence": coordinate_independence,
    "connection-independence": connection_independence,
    "mollification-convergence": mollification_convergence,
    "partition": partition,
    "distance-comparison": distance_comparison,
    "appendix-identities": appendix_identities,
}


def run_suite(name: str, manifolds: Optional[Sequence[AtlasManifold]] = None, **options: Any) -> VerificationReport:
    """Run the suite `name` on `manifolds` (default: every fixed builtin manifold).

    Raises
    ------
    UnknownSuiteError
        If no suite is called `name`.
    """
    if name not in SUITES:
        raise UnknownSuiteError(f"Unknown verification suite {name!r}. Available: {', '.join(SUITES)}.")
    if manifolds is None:
        manifolds = [builtin_manifold(text) for text in DEFAULT_MANIFOLDS]
    report = SUITES[name](manifolds, **options)
    logger.info("verify.completed", suite=name, checks=len(report.checks), passed=report.passed)
    return report
