"""CHGRID01 metric grid files.

Layout: 8-byte magic ``CHGRID01``, little-endian ``uint32`` dimension ``d``, little-endian ``uint32`` points per axis
``n``, then ``n^d · d · d`` little-endian float64 metric entries, row-major over the node lattice (lattice axes
first, then the two metric indices).
"""
from pathlib import Path
from typing import Union

import numpy as np
import structlog

from owid.charnum.common import GridFormatError

logger = structlog.get_logger()

MAGIC = b"CHGRID01"
HEADER_SIZE = len(MAGIC) + 8


def save_grid(metric: np.ndarray, grid_file: Union[str, Path]) -> None:
    """Write metric samples of shape ``(n,)*d + (d, d)`` to a CHGRID01 file."""
    metric = np.asarray(metric, dtype="<f8")
    if metric.ndim < 3:
        raise GridFormatError(f"Metric samples of shape {metric.shape} have no lattice axes.")
    d, n = metric.shape[-1], metric.shape[0]
    if metric.ndim != d + 2 or metric.shape != (n,) * d + (d, d):
        raise GridFormatError(f"Metric samples of shape {metric.shape} are not a (n,)*d + (d, d) lattice.")
    grid_file = Path(grid_file)
    grid_file.parent.mkdir(parents=True, exist_ok=True)
    with open(grid_file, "wb") as _grid_file:
        _grid_file.write(MAGIC)
        _grid_file.write(np.array([d, n], dtype="<u4").tobytes())
        _grid_file.write(np.ascontiguousarray(metric).tobytes())


def load_grid(grid_file: Union[str, Path]) -> np.ndarray:
    """Read a CHGRID01 file.

    Parameters
    ----------
    grid_file : str or Path
        Path to the grid file.

    Returns
    -------
    np.ndarray
        Metric samples of shape ``(n,)*d + (d, d)``.

    Raises
    ------
    GridFormatError
        If the magic, the header or the payload length is wrong.
    """
    with open(grid_file, "rb") as _grid_file:
        content = _grid_file.read()
    if len(content) < HEADER_SIZE or content[: len(MAGIC)] != MAGIC:
        raise GridFormatError(f"{grid_file} does not start with a CHGRID01 header.")
    d, n = (int(v) for v in np.frombuffer(content, dtype="<u4", count=2, offset=len(MAGIC)))
    if d < 1 or n < 2:
        raise GridFormatError(f"{grid_file} declares dimension {d} with {n} points per axis.")
    expected = n**d * d * d
    if len(content) - HEADER_SIZE != 8 * expected:
        raise GridFormatError(f"{grid_file} holds {len(content) - HEADER_SIZE} payload bytes, expected {8 * expected}.")
    payload = np.frombuffer(content, dtype="<f8", offset=HEADER_SIZE)
    if not np.isfinite(payload).all():
        raise GridFormatError(f"{grid_file} contains non-finite metric entries.")
    logger.info("grid.loaded", file=str(grid_file), dim=d, points_per_axis=n)
    return payload.astype(float).reshape((n,) * d + (d, d))
