"""C^{2,α} norms of transition maps, measured on their overlaps."""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import structlog
from scipy import ndimage

from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.atlas.transitions import TransitionMap
from owid.charnum.common import ParameterRangeError
from owid.charnum.holder import SampledFunction, holder_seminorm, sup_norm

logger = structlog.get_logger()


@dataclass
class TransitionRegularityReport:
    """Hölder norm of one transition, ``Σ_{k≤2} (sup|∇^k T| + [∇^k T]_α)``.

    Seminorms are taken within connected pieces of the overlap only, since periodic overlaps fall apart into
    several branches. `sup_norms` and `seminorms` hold the per-order maxima over pieces.
    """

    source: int
    target: int
    kind: str
    alpha: float
    step: float
    samples: int
    pieces: int
    sup_norms: List[float] = field(default_factory=list)
    seminorms: List[float] = field(default_factory=list)
    norm: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _sampled(values: np.ndarray, mask: np.ndarray, shape, radius: float, step: float) -> SampledFunction:
    values = np.where(mask.reshape(-1, *([1] * (values.ndim - 1))), values, 0.0)
    values = values.reshape(shape + values.shape[1:])
    return SampledFunction(np.zeros(len(shape)), radius, step, values, mask.reshape(shape))


def transition_norm(
    manifold: AtlasManifold, transition: TransitionMap, alpha: float = 0.5, step: Optional[float] = None
) -> TransitionRegularityReport:
    """Norm of `transition` over the lattice of its source chart's weight support.

    Values, Jacobians and Hessians are the closed-form ones of the transition, so no lattice derivatives enter.
    """
    if not 0 <= alpha <= 1:
        raise ParameterRangeError(f"Hölder exponent {alpha} outside [0, 1].")
    chart = manifold.charts[transition.source]
    radius = chart.support_radius
    step = radius / 10 if step is None else step
    n = int(round(2 * radius / step)) + 1
    step = 2 * radius / (n - 1)
    shape = (n,) * manifold.dim
    x = chart.lattice(step)
    mask = transition.overlap(x)
    report = TransitionRegularityReport(
        transition.source, transition.target, transition.kind, alpha, step, int(mask.sum()), 0
    )
    if not mask.any():
        logger.warning("transition.empty_overlap", source=transition.source, target=transition.target)
        return report
    fields = [np.zeros((len(x), manifold.dim)), np.zeros((len(x),) + (manifold.dim,) * 2)]
    fields.append(np.zeros((len(x),) + (manifold.dim,) * 3))
    inside = x[mask]
    fields[0][mask] = transition.value(inside)
    fields[1][mask] = transition.jacobian(inside)
    fields[2][mask] = transition.hessian(inside)

    structure = ndimage.generate_binary_structure(len(shape), len(shape))
    labels, pieces = ndimage.label(mask.reshape(shape), structure=structure)
    report.pieces = int(pieces)
    sups, seminorms = [0.0] * 3, [0.0] * 3
    for piece in range(1, pieces + 1):
        piece_mask = (labels == piece).ravel()
        for order, values in enumerate(fields):
            sampled = _sampled(values, piece_mask, shape, radius, step)
            sups[order] = max(sups[order], sup_norm(sampled))
            seminorms[order] = max(seminorms[order], holder_seminorm(sampled, alpha))
    report.sup_norms, report.seminorms = sups, seminorms
    report.norm = float(sum(sups) + sum(seminorms))
    return report


def transition_regularity_report(
    manifold: AtlasManifold, alpha: float = 0.5, step: Optional[float] = None
) -> List[TransitionRegularityReport]:
    """C^{2,α} norms of every transition of the atlas, in ``(source, target)`` order."""
    reports = [
        transition_norm(manifold, transition, alpha, step)
        for _, transition in sorted(manifold.transitions.items())
    ]
    logger.info(
        "transition.regularity",
        manifold=manifold.name,
        transitions=len(reports),
        max_norm=max((r.norm for r in reports if math.isfinite(r.norm)), default=math.nan),
    )
    return reports
