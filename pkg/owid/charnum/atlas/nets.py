"""Sampled manifolds and separated nets.

A manifold is sampled by the lattice nodes of every chart's weight support. Each manifold point is kept once, in the
chart whose bump is largest there, and the kept nodes are joined by a sparse graph whose edge lengths approximate
Riemannian distances. Separated nets are then picked greedily on that graph.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import structlog
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra

from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.atlas.partition import PartitionOfUnity
from owid.charnum.common import ParameterRangeError
from owid.charnum.holder import neighbour_offsets

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class ManifoldSample:
    charts: np.ndarray
    coords: np.ndarray
    graph: csr_matrix
    step: float

    def __len__(self) -> int:
        return len(self.charts)


@dataclass(frozen=True, eq=False)
class SeparatedNet:
    """Greedy net: pairwise graph distances at least `separation`, every sample closer than `separation`."""

    nodes: List[int]
    charts: np.ndarray
    coords: np.ndarray
    separation: float
    min_pairwise: float
    max_cover: float
    sample_size: int = field(default=0)

    def __len__(self) -> int:
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {
            "count": len(self),
            "separation": self.separation,
            "min_pairwise": self.min_pairwise,
            "max_cover": self.max_cover,
            "sample_size": self.sample_size,
        }


def _edge_lengths(metric, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    v = stop - start
    g = metric(0.5 * (start + stop))
    lengths = np.sqrt(np.einsum("nk,nkl,nl->n", v, g, v))
    # Coincident nodes of two charts stay joined.
    return np.maximum(lengths, np.finfo(float).tiny)


def sample_manifold(
    manifold: AtlasManifold, step: Optional[float] = None, pou: Optional[PartitionOfUnity] = None
) -> ManifoldSample:
    """Lattice sample of the manifold with a distance graph.

    Parameters
    ----------
    manifold : AtlasManifold
        Manifold to sample.
    step : float, optional
        Lattice step in chart coordinates, defaults to a twentieth of the smallest chart radius.
    pou : PartitionOfUnity, optional
        Partition deciding which chart owns a point.
    """
    pou = pou or PartitionOfUnity(manifold)
    step = step or min(chart.radius for chart in manifold.charts) / 20
    d = manifold.dim
    lattices, owner_ids, sizes = [], [], []
    charts, coords = [], []
    offset = 0
    for chart in manifold.charts:
        n = int(round(chart.radius / step)) + 1
        x = chart.lattice(chart.radius / (n - 1))
        raw, _, _ = pou.raw(chart.index, x, order=1)
        owned = (np.argmax(raw, axis=1) == chart.index) & (raw[:, chart.index] > 0)
        ids = np.full(len(x), -1)
        ids[owned] = offset + np.arange(int(owned.sum()))
        offset += int(owned.sum())
        lattices.append(x)
        owner_ids.append(ids.reshape((n,) * d))
        sizes.append(n)
        charts.append(np.full(int(owned.sum()), chart.index))
        coords.append(x[owned])

    all_coords = np.concatenate(coords)
    rows, cols, lengths = [], [], []
    for chart, x, ids, n in zip(manifold.charts, lattices, owner_ids, sizes):
        for shift in neighbour_offsets(d):
            source = ids[tuple(slice(max(0, -o), n - max(0, o)) for o in shift)].ravel()
            target = ids[tuple(slice(max(0, o), n - max(0, -o)) for o in shift)].ravel()
            keep = (source >= 0) & (target >= 0)
            rows.append(source[keep])
            cols.append(target[keep])
            lengths.append(_edge_lengths(chart.metric, all_coords[source[keep]], all_coords[target[keep]]))
        for other in manifold.neighbours(chart.index):
            transition = manifold.transition(chart.index, other)
            mine = ids.ravel() >= 0
            mask = mine & transition.overlap(x)
            if not mask.any():
                continue
            y = transition.value(x[mask])
            target_chart = manifold.charts[other]
            m = sizes[other]
            other_step = target_chart.radius / (m - 1)
            base = np.rint((y + target_chart.support_radius) / other_step).astype(int)
            for shift in np.vstack([np.zeros((1, d), dtype=int), neighbour_offsets(d)]):
                index = base + shift
                valid = np.all((index >= 0) & (index < m), axis=1)
                if not valid.any():
                    continue
                node = np.full(len(y), -1)
                node[valid] = owner_ids[other][tuple(index[valid].T)]
                hit = node >= 0
                if not hit.any():
                    continue
                node_coords = -target_chart.support_radius + other_step * index[hit]
                rows.append(ids.ravel()[mask][hit])
                cols.append(node[hit])
                lengths.append(_edge_lengths(target_chart.metric, y[hit], node_coords))

    total = offset
    graph = coo_matrix(
        (np.concatenate(lengths), (np.concatenate(rows), np.concatenate(cols))), shape=(total, total)
    ).tocsr()
    sample = ManifoldSample(np.concatenate(charts), all_coords, graph, step)
    logger.info("manifold.sampled", manifold=manifold.name, nodes=total, edges=graph.nnz, step=step)
    return sample


def net_separation(q: float, r: float) -> float:
    """Separation ``2 e^{-Q-2} r`` of the nets used by the chart counting bound."""
    return 2 * math.exp(-q - 2) * r


def build_separated_net(
    manifold: AtlasManifold,
    q: float,
    r: float,
    step: Optional[float] = None,
    sample: Optional[ManifoldSample] = None,
) -> SeparatedNet:
    """Greedy farthest-point net with separation ``2 e^{-Q-2} r``.

    Every sample node ends up closer than the separation to the net, so the net also covers at scale
    ``e^{-Q-1} r``.
    """
    if r <= 0:
        raise ParameterRangeError(f"Net radius must be positive, got {r}.")
    separation = net_separation(q, r)
    if sample is None:
        default = min(min(chart.radius for chart in manifold.charts) / 20, separation / 4)
        sample = sample_manifold(manifold, step or default)
    start = int(np.argmin(np.where(sample.charts == 0, np.max(np.abs(sample.coords), axis=1), np.inf)))
    nodes = [start]
    rows = [dijkstra(sample.graph, directed=False, indices=start)]
    distance = rows[0].copy()
    while True:
        far = int(np.argmax(distance))
        if distance[far] < separation:
            break
        nodes.append(far)
        rows.append(dijkstra(sample.graph, directed=False, indices=far))
        distance = np.minimum(distance, rows[-1])
    pairwise = np.array([row[nodes] for row in rows])
    np.fill_diagonal(pairwise, np.inf)
    net = SeparatedNet(
        nodes=nodes,
        charts=sample.charts[nodes],
        coords=sample.coords[nodes],
        separation=separation,
        min_pairwise=float(np.min(pairwise)) if len(nodes) > 1 else math.inf,
        max_cover=float(np.max(distance)),
        sample_size=len(sample),
    )
    logger.info("net.built", manifold=manifold.name, count=len(net), separation=separation)
    return net
