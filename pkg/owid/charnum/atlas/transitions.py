"""Transition maps between chart coordinates.

A transition ``T`` from chart ``source`` to chart ``target`` maps source coordinates ``x`` to target coordinates
``y = T(x)``. Arrays are batched over a leading point axis:
``jacobian(x)[n, i, k] = ∂y_i/∂x_k`` and ``hessian(x)[n, i, k, l] = ∂²y_i/∂x_k∂x_l``.
"""
from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from owid.charnum.common import DimensionError
from owid.charnum.forms import max_norm

# Periodic translations exclude the band next to the identification line.
WRAP_BAND = 0.01


class TransitionMap(ABC):
    kind = "abstract"

    def __init__(
        self, source: int, target: int, dim: int, target_radius: float, source_radius: Optional[float] = None
    ):
        self.source = source
        self.target = target
        self.dim = dim
        self.target_radius = target_radius
        self.source_radius = target_radius if source_radius is None else source_radius

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.source} -> {self.target})"

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def jacobian(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def inverse(self) -> "TransitionMap":
        ...

    def defined(self, x: np.ndarray) -> np.ndarray:
        """Points where the coordinate formula of the transition holds."""
        return self.derivatives_defined(x)

    def derivatives_defined(self, x: np.ndarray) -> np.ndarray:
        """Points where `jacobian` and `hessian` are finite."""
        return np.ones(len(x), dtype=bool)

    def singular_distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance from `x` to the points where the derivatives blow up."""
        return np.full(len(x), np.inf)

    def overlap(self, x: np.ndarray) -> np.ndarray:
        """Points of the source chart that lie in the target chart domain."""
        x = np.asarray(x, dtype=float)
        mask = self.defined(x)
        if mask.any():
            inside = max_norm(self.value(x[mask])) < self.target_radius
            mask[np.flatnonzero(mask)[~inside]] = False
        return mask

    def to_dict(self) -> dict:
        return {"from": self.source, "to": self.target, "kind": self.kind}


class IdentityTransition(TransitionMap):
    kind = "identity"

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(self.dim), (len(x), self.dim, self.dim)).copy()

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((len(x),) + (self.dim,) * 3)

    def inverse(self) -> "IdentityTransition":
        return IdentityTransition(self.target, self.source, self.dim, self.source_radius, self.target_radius)


class TranslationTransition(TransitionMap):
    """``y = x + offset``, wrapped into ``[-P/2, P/2)`` per coordinate when a period ``P`` is given."""

    kind = "translation"

    def __init__(
        self,
        source: int,
        target: int,
        offset: np.ndarray,
        target_radius: float,
        period: Optional[float] = None,
        source_radius: Optional[float] = None,
    ):
        offset = np.asarray(offset, dtype=float)
        super().__init__(source, target, len(offset), target_radius, source_radius)
        self.offset = offset
        self.period = period

    def value(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x, dtype=float) + self.offset
        if self.period is not None:
            half = self.period / 2
            y = np.mod(y + half, self.period) - half
        return y

    def defined(self, x: np.ndarray) -> np.ndarray:
        if self.period is None:
            return np.ones(len(x), dtype=bool)
        return max_norm(self.value(x)) < (0.5 - WRAP_BAND) * self.period

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(self.dim), (len(x), self.dim, self.dim)).copy()

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((len(x),) + (self.dim,) * 3)

    def inverse(self) -> "TranslationTransition":
        return TranslationTransition(
            self.target, self.source, -self.offset, self.source_radius, self.period, self.target_radius
        )

    def to_dict(self) -> dict:
        result = {**super().to_dict(), "offset": self.offset.tolist()}
        if self.period is not None:
            result["period"] = self.period
        return result


class InversionTransition(TransitionMap):
    """Inversion in the unit sphere, ``y = x / |x|²``. Orientation reversing; its own inverse."""

    kind = "inversion"

    def derivatives_defined(self, x: np.ndarray) -> np.ndarray:
        return np.sum(np.asarray(x, dtype=float) ** 2, axis=1) > 0

    def singular_distance(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(x, dtype=float), axis=1)

    def _safe(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        s = np.sum(x**2, axis=1)
        s = np.where(s > 0, s, np.nan)
        return x, s

    def value(self, x: np.ndarray) -> np.ndarray:
        x, s = self._safe(x)
        return x / s[:, None]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x, s = self._safe(x)
        eye = np.eye(self.dim)
        return eye / s[:, None, None] - 2 * np.einsum("nk,nl->nkl", x, x) / s[:, None, None] ** 2

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x, s = self._safe(x)
        eye = np.eye(self.dim)
        s2 = s[:, None, None, None] ** 2
        return (
            -2 * np.einsum("kl,nm->nklm", eye, x) / s2
            - 2 * (np.einsum("km,nl->nklm", eye, x) + np.einsum("nk,lm->nklm", x, eye)) / s2
            + 8 * np.einsum("nk,nl,nm->nklm", x, x, x) / (s2 * s[:, None, None, None])
        )

    def inverse(self) -> "InversionTransition":
        return InversionTransition(self.target, self.source, self.dim, self.source_radius, self.target_radius)


class AffineTransition(TransitionMap):
    """``y = A x + b``."""

    kind = "affine"

    def __init__(
        self,
        source: int,
        target: int,
        matrix: np.ndarray,
        offset: np.ndarray,
        target_radius: float,
        source_radius: Optional[float] = None,
    ):
        matrix = np.asarray(matrix, dtype=float)
        offset = np.asarray(offset, dtype=float)
        if matrix.shape != (len(offset), len(offset)):
            raise DimensionError(f"Affine map with matrix {matrix.shape} and offset {offset.shape}.")
        super().__init__(source, target, len(offset), target_radius, source_radius)
        self.matrix = matrix
        self.offset = offset

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.matrix.T + self.offset

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.matrix, (len(x), self.dim, self.dim)).copy()

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((len(x),) + (self.dim,) * 3)

    def inverse(self) -> "AffineTransition":
        inv = np.linalg.inv(self.matrix)
        return AffineTransition(
            self.target, self.source, inv, -inv @ self.offset, self.source_radius, self.target_radius
        )

    def to_dict(self) -> dict:
        return {**super().to_dict(), "matrix": self.matrix.tolist(), "offset": self.offset.tolist()}


def _others(index: int, complex_dim: int) -> List[int]:
    return [j for j in range(complex_dim + 1) if j != index]


class ProjectiveTransition(TransitionMap):
    """Change of affine chart on ``CP^n``.

    Chart ``i`` has complex coordinates ``Z_j / Z_i`` for ``j != i`` in increasing order; real coordinates interleave
    real and imaginary parts. Real derivatives come from the complex derivatives of the holomorphic map.
    """

    kind = "projective"

    def __init__(
        self, source: int, target: int, complex_dim: int, target_radius: float, source_radius: Optional[float] = None
    ):
        super().__init__(source, target, 2 * complex_dim, target_radius, source_radius)
        if source == target or not (0 <= source <= complex_dim and 0 <= target <= complex_dim):
            raise DimensionError(f"No projective transition {source} -> {target} on CP^{complex_dim}.")
        self.complex_dim = complex_dim
        slots = {j: pos for pos, j in enumerate(_others(source, complex_dim))}
        # Every target coordinate is numerator / z[denominator]; a numerator of None stands for 1.
        self.denominator = slots[target]
        self.numerators = [None if j == source else slots[j] for j in _others(target, complex_dim)]
        self._unit = np.tile([1.0, 1j], complex_dim)
        self._slot = np.repeat(np.arange(complex_dim), 2)

    def _complex(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[:, 0::2] + 1j * x[:, 1::2]

    def derivatives_defined(self, x: np.ndarray) -> np.ndarray:
        return np.abs(self._complex(x)[:, self.denominator]) > 0

    def singular_distance(self, x: np.ndarray) -> np.ndarray:
        return np.abs(self._complex(x)[:, self.denominator])

    def _denominator(self, x: np.ndarray) -> np.ndarray:
        z = self._complex(x)
        den = z[:, self.denominator]
        return z, np.where(den != 0, den, np.nan)

    def _derivatives(self, x: np.ndarray):
        z, den = self._denominator(x)
        n, m = self.complex_dim, self.denominator
        f = np.empty((len(z), n), dtype=complex)
        first = np.zeros((len(z), n, n), dtype=complex)
        second = np.zeros((len(z), n, n, n), dtype=complex)
        for out, num in enumerate(self.numerators):
            if num is None:
                f[:, out] = 1 / den
                first[:, out, m] = -1 / den**2
                second[:, out, m, m] = 2 / den**3
            else:
                f[:, out] = z[:, num] / den
                first[:, out, num] = 1 / den
                first[:, out, m] = -z[:, num] / den**2
                second[:, out, num, m] = -1 / den**2
                second[:, out, m, num] = -1 / den**2
                second[:, out, m, m] = 2 * z[:, num] / den**3
        return f, first, second

    @staticmethod
    def _realify(values: np.ndarray) -> np.ndarray:
        shape = values.shape
        out = np.empty((shape[0], 2 * shape[1]) + shape[2:])
        out[:, 0::2] = values.real
        out[:, 1::2] = values.imag
        return out

    def value(self, x: np.ndarray) -> np.ndarray:
        f, _, _ = self._derivatives(x)
        return self._realify(f)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        _, first, _ = self._derivatives(x)
        return self._realify(first[:, :, self._slot] * self._unit)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        _, _, second = self._derivatives(x)
        units = np.outer(self._unit, self._unit)
        return self._realify(second[:, :, self._slot][:, :, :, self._slot] * units)

    def inverse(self) -> "ProjectiveTransition":
        return ProjectiveTransition(
            self.target, self.source, self.complex_dim, self.source_radius, self.target_radius
        )

    def to_dict(self) -> dict:
        return {**super().to_dict(), "complex_dim": self.complex_dim}
