"""Tensor-product midpoint quadrature over chart support boxes.

The support box ``[-r/2, r/2]^d`` of a chart is split into ``round(1/h)`` cells per axis. Nodes are generated in
row-major chunks of ``config.CHUNK_SIZE``, chunks are evaluated on a thread pool of ``config.THREADS`` workers and
partial sums are combined with exact rounding in chunk order, so results do not depend on the thread count.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

import numpy as np

from owid.charnum import config
from owid.charnum.atlas.charts import Chart
from owid.charnum.common import ParameterRangeError

Integrand = Callable[[np.ndarray], np.ndarray]


def cells_per_axis(h: float) -> int:
    """Number of cells per axis for the relative step `h`."""
    if not h > 0:
        raise ParameterRangeError(f"Quadrature step must be positive, got {h}.")
    cells = int(round(1 / h))
    if cells < 1:
        raise ParameterRangeError(f"Quadrature step {h} is larger than the support box.")
    return cells


def midpoint_nodes(chart: Chart, cells: int, start: int, stop: int) -> np.ndarray:
    """Midpoints of cells ``start, …, stop - 1`` (row-major) of the support box of `chart`."""
    width = 2 * chart.support_radius / cells
    index = np.stack(np.unravel_index(np.arange(start, stop), (cells,) * chart.dim), axis=-1)
    return -chart.support_radius + (index + 0.5) * width


def _column_sums(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return np.array([math.fsum(column) for column in values.T])


def integrate_chart(chart: Chart, integrand: Integrand, h: float) -> np.ndarray:
    """Midpoint rule for ``∫ integrand dx`` over the support box of `chart`.

    Parameters
    ----------
    chart : Chart
        Chart whose support box is integrated over.
    integrand : callable
        Maps nodes of shape ``(m, d)`` to values of shape ``(m,)`` or ``(m, k)``.
    h : float
        Relative step; the box is split into ``round(1/h)`` cells per axis.

    Returns
    -------
    np.ndarray
        One integral per integrand column.
    """
    cells = cells_per_axis(h)
    total = cells**chart.dim
    weight = (2 * chart.support_radius / cells) ** chart.dim
    starts = range(0, total, config.CHUNK_SIZE)

    def partial(start: int) -> np.ndarray:
        stop = min(start + config.CHUNK_SIZE, total)
        return _column_sums(integrand(midpoint_nodes(chart, cells, start, stop)))

    with ThreadPoolExecutor(max_workers=config.THREADS) as pool:
        partials: List[np.ndarray] = list(pool.map(partial, starts))
    columns = np.stack(partials, axis=0)
    return np.array([math.fsum(column) for column in columns.T]) * weight


def richardson_error(fine: float, coarse: float) -> float:
    """Error estimate ``|I_h - I_{2h}| / 3`` of a second order rule."""
    return abs(fine - coarse) / 3
