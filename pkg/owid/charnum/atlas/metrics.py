"""Metric models: coordinate expressions ``g_{kl}(x)`` with first and second derivatives.

Arrays are batched over a leading point axis. Derivative axes come last:
``jacobian(x)[n, a, b, c] = ∂_c g_ab`` and ``hessian(x)[n, a, b, c, e] = ∂_e ∂_c g_ab``.
"""
from abc import ABC, abstractmethod
from typing import Callable, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from owid.charnum import config
from owid.charnum.common import GridFormatError

Potential = Tuple[np.ndarray, np.ndarray, np.ndarray]


class MetricModel(ABC):
    """Metric tensor on a chart domain.

    Subclasses implement `value`; models with closed-form derivatives override `jacobian` and `hessian` and set
    ``closed_form = True``. Otherwise derivatives are central differences with step `fd_step`.
    """

    closed_form = False

    def __init__(self, dim: int, fd_step: float = config.FD_STEP):
        self.dim = dim
        self.fd_step = fd_step

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        ...

    def _central_difference(self, func: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
        h = self.fd_step
        columns = []
        for c in range(self.dim):
            shift = np.zeros(self.dim)
            shift[c] = h
            columns.append((func(x + shift) - func(x - shift)) / (2 * h))
        return np.stack(columns, axis=-1)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self._central_difference(self.value, x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self._central_difference(self.jacobian, x)


class FlatMetric(MetricModel):
    closed_form = True

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(self.dim), (len(x), self.dim, self.dim)).copy()

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((len(x),) + (self.dim,) * 3)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((len(x),) + (self.dim,) * 4)


class ConformalMetric(MetricModel):
    """``g = φ(x) δ`` for a positive potential ``φ`` given with its gradient and Hessian."""

    closed_form = True

    def __init__(self, dim: int, potential: Callable[[np.ndarray], Potential]):
        super().__init__(dim)
        self.potential = potential

    def value(self, x: np.ndarray) -> np.ndarray:
        phi, _, _ = self.potential(x)
        return phi[:, None, None] * np.eye(self.dim)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        _, dphi, _ = self.potential(x)
        return np.einsum("ab,nc->nabc", np.eye(self.dim), dphi)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        _, _, ddphi = self.potential(x)
        return np.einsum("ab,nce->nabce", np.eye(self.dim), ddphi)


def round_sphere_potential(x: np.ndarray) -> Potential:
    """Pullback of the unit round metric by inverse stereographic projection: ``φ = 4 / (1 + |x|²)²``."""
    d = x.shape[1]
    s = 1 + np.sum(x**2, axis=1)
    phi = 4 / s**2
    dphi = -16 * x / s[:, None] ** 3
    ddphi = -16 * np.eye(d) / s[:, None, None] ** 3 + 96 * np.einsum("nk,nl->nkl", x, x) / s[:, None, None] ** 4
    return phi, dphi, ddphi


# Amplitude of the sphere deformation; 1 + eps * F > 0 on the sphere for |eps| < 1 / max F.
SPHERE_DEFORMATION_SCALE = 2 * np.exp(-2)


def perturbed_sphere_potential(eps: float) -> Callable[[np.ndarray], Potential]:
    """Round potential times ``1 + eps F(q)`` with ``q = 2 x_1 / (1 + |x|²)`` the first ambient coordinate.

    ``q`` takes the same value in both stereographic charts, so the deformed metric is a global metric on the sphere.
    """

    def potential(x: np.ndarray) -> Potential:
        d = x.shape[1]
        u, du, ddu = round_sphere_potential(x)
        s = 1 + np.sum(x**2, axis=1)
        e0 = np.zeros(d)
        e0[0] = 1.0
        q = 2 * x[:, 0] / s
        dq = 2 * e0 / s[:, None] - 4 * x[:, [0]] * x / s[:, None] ** 2
        ddq = (
            -4 * (np.einsum("k,nl->nkl", e0, x) + np.einsum("nk,l->nkl", x, e0)) / s[:, None, None] ** 2
            - 4 * x[:, 0, None, None] * np.eye(d) / s[:, None, None] ** 2
            + 16 * x[:, 0, None, None] * np.einsum("nk,nl->nkl", x, x) / s[:, None, None] ** 3
        )
        f = SPHERE_DEFORMATION_SCALE * np.sinh(2 * q)
        df = 2 * SPHERE_DEFORMATION_SCALE * np.cosh(2 * q)
        ddf = 4 * f
        w = 1 + eps * f
        dw = eps * df[:, None] * dq
        ddw = eps * (ddf[:, None, None] * np.einsum("nk,nl->nkl", dq, dq) + df[:, None, None] * ddq)
        phi = u * w
        dphi = du * w[:, None] + u[:, None] * dw
        ddphi = (
            ddu * w[:, None, None]
            + np.einsum("nk,nl->nkl", du, dw)
            + np.einsum("nk,nl->nkl", dw, du)
            + u[:, None, None] * ddw
        )
        return phi, dphi, ddphi

    return potential


def perturbed_torus_potential(eps: float, center: np.ndarray) -> Callable[[np.ndarray], Potential]:
    """``φ = 1 + eps sin(2π p_1) sin(2π p_2)`` at the torus point ``p = center + x``."""
    k = 2 * np.pi

    def potential(x: np.ndarray) -> Potential:
        p = center + x
        s1, s2 = np.sin(k * p[:, 0]), np.sin(k * p[:, 1])
        c1, c2 = np.cos(k * p[:, 0]), np.cos(k * p[:, 1])
        phi = 1 + eps * s1 * s2
        dphi = eps * k * np.stack([c1 * s2, s1 * c2], axis=-1)
        ddphi = eps * k**2 * np.stack([np.stack([-s1 * s2, c1 * c2], -1), np.stack([c1 * c2, -s1 * s2], -1)], -2)
        return phi, dphi, ddphi

    return potential


def complex_structure(dim: int) -> np.ndarray:
    """Multiplication by ``i`` on ``R^dim = C^{dim/2}`` with coordinates ``(x_1, y_1, x_2, y_2, …)``."""
    j = np.zeros((dim, dim))
    for a in range(0, dim, 2):
        j[a, a + 1] = -1.0
        j[a + 1, a] = 1.0
    return j


class FubiniStudyMetric(MetricModel):
    """Fubini-Study metric in an affine chart of ``CP^n``.

    ``g = [(1 + |x|²) δ - x xᵀ - w wᵀ] / (1 + |x|²)²`` with ``w = J x``, holomorphic sectional curvature 4.
    """

    closed_form = True

    def __init__(self, complex_dim: int):
        super().__init__(2 * complex_dim)
        self.complex_dim = complex_dim
        self.j = complex_structure(self.dim)

    def _parts(self, x: np.ndarray):
        eye = np.eye(self.dim)
        s = 1 + np.sum(x**2, axis=1)
        w = x @ self.j.T
        a = s[:, None, None] * eye - np.einsum("na,nb->nab", x, x) - np.einsum("na,nb->nab", w, w)
        return eye, s, w, a

    def value(self, x: np.ndarray) -> np.ndarray:
        _, s, _, a = self._parts(x)
        return a / s[:, None, None] ** 2

    def _first(self, x: np.ndarray):
        eye, s, w, a = self._parts(x)
        da = (
            2 * np.einsum("nc,ab->nabc", x, eye)
            - np.einsum("ac,nb->nabc", eye, x)
            - np.einsum("na,bc->nabc", x, eye)
            - np.einsum("ac,nb->nabc", self.j, w)
            - np.einsum("na,bc->nabc", w, self.j)
        )
        dd = -4 * x / s[:, None] ** 3
        return eye, s, a, da, dd

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        _, s, a, da, dd = self._first(x)
        return da / s[:, None, None, None] ** 2 + np.einsum("nab,nc->nabc", a, dd)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        eye, s, a, da, dd = self._first(x)
        dda = (
            2 * np.einsum("ce,ab->abce", eye, eye)
            - np.einsum("ac,be->abce", eye, eye)
            - np.einsum("ae,bc->abce", eye, eye)
            - np.einsum("ac,be->abce", self.j, self.j)
            - np.einsum("ae,bc->abce", self.j, self.j)
        )
        ddd = -4 * eye / s[:, None, None] ** 3 + 24 * np.einsum("nc,ne->nce", x, x) / s[:, None, None] ** 4
        return (
            dda[None] / s[:, None, None, None, None] ** 2
            + np.einsum("nabc,ne->nabce", da, dd)
            + np.einsum("nabe,nc->nabce", da, dd)
            + np.einsum("nab,nce->nabce", a, ddd)
        )


class ScaledMetric(MetricModel):
    """``c² g`` for a base model ``g``."""

    def __init__(self, base: MetricModel, factor: float):
        super().__init__(base.dim, base.fd_step)
        self.base = base
        self.factor = factor
        self.closed_form = base.closed_form

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.factor**2 * self.base.value(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.factor**2 * self.base.jacobian(x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self.factor**2 * self.base.hessian(x)


class GridMetric(MetricModel):
    """Metric sampled on the node lattice of ``[-r, r]^d``, linearly interpolated.

    Derivatives are central differences at the lattice step.
    """

    def __init__(self, samples: np.ndarray, radius: float):
        samples = np.asarray(samples, dtype=float)
        d = samples.shape[-1]
        n = samples.shape[0]
        if samples.shape != (n,) * d + (d, d) or n < 3:
            raise GridFormatError(f"Metric samples of shape {samples.shape} do not form a lattice of d x d matrices.")
        step = 2 * radius / (n - 1)
        super().__init__(d, fd_step=step)
        self.radius = radius
        self.samples = 0.5 * (samples + np.swapaxes(samples, -1, -2))
        axes = [np.linspace(-radius, radius, n)] * d
        self._interpolator = RegularGridInterpolator(axes, self.samples, bounds_error=False, fill_value=None)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._interpolator(x)
