"""Smooth partition of unity subordinate to the half-size chart boxes.

Chart ``i`` carries the bump ``b_i(y) = Π_k β(|y_k| / (r_i/2))`` in its own coordinates, where ``β`` is a smooth step
equal to 1 below ``e^{-1}`` and 0 above 1. Weights are normalized sums ``ψ_i = b_i / Σ_k b_k``; gradients and Hessians
follow by the chain and quotient rules, in the coordinates of whichever chart they are evaluated in.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from owid.charnum import config
from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.common import CoverageError

# Bumps are identically 1 on the box of relative size CORE.
CORE = float(np.exp(-1))


def _flat_exp(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``F(s) = exp(-1/s)`` for ``s > 0`` (0 otherwise) with its first two derivatives."""
    positive = s > 0
    safe = np.where(positive, s, 1.0)
    f = np.where(positive, np.exp(-1 / safe), 0.0)
    df = f / safe**2
    ddf = f * (1 - 2 * safe) / safe**4
    return f, df, ddf


def smooth_step(t: np.ndarray, core: float = CORE) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``β(t) = F(1 - t) / (F(1 - t) + F(t - core))`` and its derivatives in ``t``."""
    t = np.asarray(t, dtype=float)
    p, dp, ddp = _flat_exp(1 - t)
    q, dq, ddq = _flat_exp(t - core)
    dp, ddp = -dp, ddp
    denom = p + q
    num1 = dp * q - p * dq
    beta = p / denom
    dbeta = num1 / denom**2
    ddbeta = (ddp * q - p * ddq) / denom**2 - 2 * num1 * (dp + dq) / denom**3
    return beta, dbeta, ddbeta


def bump(y: np.ndarray, half_radius: float, order: int = 2, core: float = CORE):
    """Product bump on ``[-half_radius, half_radius]^d`` with gradient and (optionally) Hessian.

    Returns
    -------
    tuple
        ``(b, grad, hess)`` of shapes ``(m,)``, ``(m, d)`` and ``(m, d, d)``; ``hess`` is None for ``order < 2``.
    """
    y = np.asarray(y, dtype=float)
    m, d = y.shape
    sign = np.sign(y)
    beta, dbeta, ddbeta = smooth_step(np.abs(y) / half_radius, core)
    dbeta = dbeta * sign / half_radius
    ddbeta = ddbeta / half_radius**2
    value = np.prod(beta, axis=1)
    grad = np.empty((m, d))
    for k in range(d):
        others = np.prod(np.delete(beta, k, axis=1), axis=1)
        grad[:, k] = dbeta[:, k] * others
    if order < 2:
        return value, grad, None
    hess = np.empty((m, d, d))
    for k in range(d):
        for l in range(k, d):
            if k == l:
                others = np.prod(np.delete(beta, k, axis=1), axis=1)
                hess[:, k, k] = ddbeta[:, k] * others
            else:
                others = np.prod(np.delete(beta, [k, l], axis=1), axis=1)
                hess[:, k, l] = hess[:, l, k] = dbeta[:, k] * dbeta[:, l] * others
    return value, grad, hess


@dataclass(frozen=True)
class Weights:
    """Partition weights of every chart at points of one chart, in that chart's coordinates.

    Attributes
    ----------
    values : np.ndarray
        ``ψ_i``, shape ``(m, N)``.
    gradients : np.ndarray
        ``∂_μ ψ_i``, shape ``(m, N, d)``.
    hessians : np.ndarray or None
        ``∂_μ ∂_ν ψ_i``, shape ``(m, N, d, d)``.
    raw_sum : np.ndarray
        ``Σ_i b_i``, shape ``(m,)``.
    """

    values: np.ndarray
    gradients: np.ndarray
    hessians: Optional[np.ndarray]
    raw_sum: np.ndarray


class PartitionOfUnity:
    """Partition of unity ``{ψ_i}`` of an atlas, ``supp ψ_i ⊂ [-r_i/2, r_i/2]^d`` in chart ``i``."""

    def __init__(self, manifold: AtlasManifold, core: float = CORE):
        self.manifold = manifold
        self.core = core

    def raw(self, chart: int, x: np.ndarray, order: int = 2):
        """Bumps ``b_i`` of all charts at points `x` of chart `chart`, with derivatives in those coordinates."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m, d = x.shape
        n_charts = len(self.manifold)
        values = np.zeros((m, n_charts))
        grads = np.zeros((m, n_charts, d))
        hessians = np.zeros((m, n_charts, d, d)) if order >= 2 else None
        for i, other in enumerate(self.manifold.charts):
            if i == chart:
                b, db, ddb = bump(x, other.support_radius, order, self.core)
                values[:, i], grads[:, i] = b, db
                if order >= 2:
                    hessians[:, i] = ddb
                continue
            transition = self.manifold.transition(chart, i)
            if transition is None:
                continue
            mask = transition.overlap(x)
            if not mask.any():
                continue
            xs = x[mask]
            y = transition.value(xs)
            inside = np.max(np.abs(y), axis=1) < other.support_radius
            if not inside.any():
                continue
            rows = np.flatnonzero(mask)[inside]
            xs, y = xs[inside], y[inside]
            b, db, ddb = bump(y, other.support_radius, order, self.core)
            jac = transition.jacobian(xs)
            values[rows, i] = b
            grads[rows, i] = np.einsum("nlk,nl->nk", jac, db)
            if order >= 2:
                hess = transition.hessian(xs)
                hessians[rows, i] = np.einsum("nlk,nlm,nmu->nku", jac, ddb, jac) + np.einsum(
                    "nl,nlku->nku", db, hess
                )
        return values, grads, hessians

    def evaluate(self, chart: int, x: np.ndarray, order: int = 2, strict: bool = True) -> Weights:
        """Normalized weights ``ψ_i`` at points `x` of chart `chart`.

        With ``strict=False`` uncovered points get zero weights instead of raising.

        Raises
        ------
        CoverageError
            If ``Σ_i b_i`` falls below ``config.COVERAGE_FLOOR`` at some point.
        """
        raw, raw_grad, raw_hess = self.raw(chart, x, order)
        total = raw.sum(axis=1)
        uncovered = total < config.COVERAGE_FLOOR
        if strict and uncovered.any():
            worst = int(np.argmin(total))
            raise CoverageError(
                f"Charts do not cover point {np.atleast_2d(x)[worst].tolist()} of chart {chart} "
                f"(weight sum {total[worst]:.3g})."
            )
        if uncovered.any():
            raw, raw_grad = np.where(uncovered[:, None], 0.0, raw), np.where(uncovered[:, None, None], 0.0, raw_grad)
            if order >= 2:
                raw_hess = np.where(uncovered[:, None, None, None], 0.0, raw_hess)
            total = np.where(uncovered, 1.0, total)
        total_grad = raw_grad.sum(axis=1)
        psi = raw / total[:, None]
        grad = (raw_grad - psi[:, :, None] * total_grad[:, None, :]) / total[:, None, None]
        hess = None
        if order >= 2:
            total_hess = raw_hess.sum(axis=1)
            hess = (
                raw_hess
                - psi[:, :, None, None] * total_hess[:, None]
                - np.einsum("nik,nl->nikl", grad, total_grad)
                - np.einsum("nk,nil->nikl", total_grad, grad)
            ) / total[:, None, None, None]
        return Weights(psi, grad, hess, raw.sum(axis=1))

    def own_weight(self, chart: int, x: np.ndarray) -> np.ndarray:
        return self.evaluate(chart, x, order=1).values[:, chart]


def build_partition_of_unity(manifold: AtlasManifold, core: float = CORE) -> PartitionOfUnity:
    """Partition of unity of `manifold`, checked to cover the support box of every chart."""
    pou = PartitionOfUnity(manifold, core)
    for chart in manifold.charts:
        pou.evaluate(chart.index, chart.lattice(chart.support_radius / 8), order=1)
    return pou
