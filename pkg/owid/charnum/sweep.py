"""Characteristic numbers over one-parameter families of metrics.

Each row records the number, the volume and their ratio together with the chart norm estimate ``Q`` and the
counting bound it implies. Rows whose metric is invalid are kept with the name of the error.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
import structlog

from owid.charnum.atlas.builtins import FAMILIES, builtin_manifold
from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.atlas.partition import PartitionOfUnity
from owid.charnum.chern_weil import (
    CONNECTIONS,
    InvariantPolynomial,
    counting_bound,
    integrate_characteristic_number,
)
from owid.charnum.common import AtlasError, ParameterRangeError, UnknownManifoldError
from owid.charnum.holder import chart_norm_report

logger = structlog.get_logger()

# Charts with a larger harmonic residual are left out of Q when only harmonic charts are requested.
HARMONIC_TOLERANCE = 1e-2


@dataclass(frozen=True)
class SweepRow:
    family: str
    eps: float
    value: float
    volume: float
    ratio: float
    charts: int
    count_bound: float
    q_estimate: float
    error_estimate: float
    error: str = ""

    @classmethod
    def failed(cls, family: str, eps: float, error: str) -> "SweepRow":
        nan = math.nan
        return cls(family, eps, nan, nan, nan, 0, nan, nan, nan, error)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def q_estimate(manifold: AtlasManifold, harmonic_only: bool = False) -> float:
    """Largest ``Q_total`` of the chart norm reports; NaN if no chart qualifies."""
    reports = [chart_norm_report(chart, index=chart.index) for chart in manifold.charts]
    if harmonic_only:
        reports = [report for report in reports if report.harmonic_residual <= HARMONIC_TOLERANCE]
    return max((report.q_total for report in reports), default=math.nan)


def _count_bound(manifold: AtlasManifold, vol: float, q: float) -> float:
    if not math.isfinite(q):
        return math.nan
    r = min(chart.radius for chart in manifold.charts)
    try:
        return float(counting_bound(manifold.dim, vol, q, r)[0])
    except (OverflowError, ZeroDivisionError):
        return math.inf


def sweep(
    family: str,
    eps_values: Sequence[float],
    polynomial: InvariantPolynomial,
    connection: str = "lc",
    h: float = 1 / 64,
    harmonic_only: bool = False,
) -> List[SweepRow]:
    """One row per value of `eps`, in the given order.

    Raises
    ------
    UnknownManifoldError
        If `family` is not a builtin family.
    """
    if family not in FAMILIES:
        raise UnknownManifoldError(f"Unknown manifold family '{family}'. Available: {', '.join(FAMILIES)}.")
    if connection not in CONNECTIONS:
        raise ParameterRangeError(f"Unknown connection {connection!r}; use one of {sorted(CONNECTIONS)}.")
    rows = []
    for eps in eps_values:
        try:
            manifold = builtin_manifold(f"{family}({float(eps)!r})")
            result = integrate_characteristic_number(manifold, PartitionOfUnity(manifold), polynomial, connection, h)
            q = q_estimate(manifold, harmonic_only)
            row = SweepRow(
                family=family,
                eps=eps,
                value=result.value,
                volume=result.volume,
                ratio=result.ratio,
                charts=len(manifold),
                count_bound=_count_bound(manifold, result.volume, q),
                q_estimate=q,
                error_estimate=result.error_estimate,
            )
        except (AtlasError, ParameterRangeError) as error:
            logger.warning("sweep.row_failed", family=family, eps=eps, error=type(error).__name__, message=str(error))
            row = SweepRow.failed(family, eps, type(error).__name__)
        logger.info("sweep.row", **row.to_dict())
        rows.append(row)
    return rows


def rows_to_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    columns = list(SweepRow.__dataclass_fields__)
    return pd.DataFrame([row.to_dict() for row in rows], columns=columns)


def summary(family: str, rows: Sequence[SweepRow], metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Summary document: family, row count, largest ratio and the assumption labels."""
    ratios = [row.ratio for row in rows if not row.error]
    labels: Dict[str, Any] = {"iota": None, "kappa_lower": None, "kappa_upper": None}
    labels.update(metadata or {})
    return {"family": family, "rows": len(rows), "max_ratio": max(ratios) if ratios else math.nan, **labels}
