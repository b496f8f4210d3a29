"""Multi-index arrays, even-degree differential forms and Pfaffians.

Coordinate arrays are plain numpy arrays whose leading axis indexes evaluation points. The axis roles
are fixed once for the whole package:

* metric ``g[n, k, l]``;
* metric jacobian ``dg[n, k, l, m] = ∂_m g_{kl}`` (derivative axis last);
* Christoffel symbols ``gamma[n, k, mu, nu] = Γ^k_{μν}``;
* curvature ``R[n, k, lam, mu, nu] = R^k_{λμν}``.

Form coefficients may be floats or arrays (one value per evaluation point), so the same algebra
evaluates a density at a single point or on a whole batch of quadrature nodes.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from owid.charnum.common import AsymmetryError, DimensionError, OddDimensionError

Coefficient = Union[float, np.ndarray]
IndexTuple = Tuple[int, ...]

METRIC_AXES = ("point", "lower", "lower")
CHRISTOFFEL_AXES = ("point", "upper", "lower", "lower")
CURVATURE_AXES = ("point", "upper", "lower", "lower", "lower")

# Antisymmetry tolerance, relative to the largest absolute entry.
ANTISYMMETRY_RTOL = 1e-8


def antisymmetrize_pair(h: np.ndarray, axis_mu: int, axis_nu: int) -> np.ndarray:
    """Return ``h_{[μν]} = h_{..μ..ν..} - h_{..ν..μ..}``.

    Parameters
    ----------
    h : np.ndarray
        Array to antisymmetrize.
    axis_mu : int
        First axis of the pair.
    axis_nu : int
        Second axis of the pair.

    Returns
    -------
    np.ndarray
        Antisymmetric part (without the factor 1/2), same shape as `h`.

    Raises
    ------
    DimensionError
        If both axes coincide or have different extents.
    """
    h = np.asarray(h)
    mu = axis_mu % h.ndim
    nu = axis_nu % h.ndim
    if mu == nu:
        raise DimensionError(f"Cannot antisymmetrize axis {axis_mu} with itself.")
    if h.shape[mu] != h.shape[nu]:
        raise DimensionError(
            f"Axes {axis_mu} and {axis_nu} have different extents ({h.shape[mu]} vs {h.shape[nu]})."
        )
    result: np.ndarray = h - np.swapaxes(h, mu, nu)
    return result


def permutation_sign(indices: Sequence[int]) -> int:
    """Sign of the permutation sorting `indices`; 0 if an index repeats."""
    indices = list(indices)
    if len(set(indices)) < len(indices):
        return 0
    inversions = sum(
        1
        for i in range(len(indices))
        for j in range(i + 1, len(indices))
        if indices[i] > indices[j]
    )
    return -1 if inversions % 2 else 1


def max_norm(x: Union[Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
    """Max-norm ``|x| = max_i |x_i|`` over the last axis."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise DimensionError("Max-norm of an empty vector.")
    return np.max(np.abs(x), axis=-1)


@dataclass(frozen=True, eq=False)
class EvenForm:
    """Even-degree form ``Σ c_I dx^{i_1}∧…∧dx^{i_p}`` on R^dim, keyed by increasing index tuples."""

    dim: int
    degree: int
    coeffs: Dict[IndexTuple, Coefficient] = field(default_factory=dict)

    # Keep numpy from broadcasting over forms in ``array * form``.
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        if self.degree % 2 or not 0 <= self.degree <= self.dim:
            raise DimensionError(
                f"Degree {self.degree} is not an even degree of a form on R^{self.dim}."
            )
        clean: Dict[IndexTuple, Coefficient] = {}
        for key, value in self.coeffs.items():
            key = tuple(int(k) for k in key)
            if len(key) != self.degree or any(a >= b for a, b in zip(key, key[1:])):
                raise DimensionError(f"Index tuple {key} is not strictly increasing of length {self.degree}.")
            if key and (key[0] < 0 or key[-1] >= self.dim):
                raise DimensionError(f"Index tuple {key} out of range for R^{self.dim}.")
            if np.any(value):
                clean[key] = value
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, dim: int, degree: int) -> "EvenForm":
        return cls(dim, degree, {})

    @classmethod
    def constant(cls, dim: int, value: Coefficient = 1.0) -> "EvenForm":
        return cls(dim, 0, {(): value})

    @classmethod
    def basis(cls, dim: int, indices: Sequence[int], coefficient: Coefficient = 1.0) -> "EvenForm":
        """Form ``coefficient · dx^{i_1}∧…∧dx^{i_p}`` for indices in any order."""
        sign = permutation_sign(indices)
        coeffs = {tuple(sorted(indices)): sign * coefficient} if sign else {}
        return cls(dim, len(indices), coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def top_coefficient(self) -> Coefficient:
        """Coefficient of ``dx^1∧…∧dx^dim`` (0 for lower degrees)."""
        return self.coeffs.get(tuple(range(self.dim)), 0.0)

    def _check_compatible(self, other: "EvenForm") -> None:
        if self.dim != other.dim or self.degree != other.degree:
            raise DimensionError(
                f"Cannot add a degree {other.degree} form on R^{other.dim} "
                f"to a degree {self.degree} form on R^{self.dim}."
            )

    def __add__(self, other: "EvenForm") -> "EvenForm":
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        for key, value in other.coeffs.items():
            coeffs[key] = coeffs[key] + value if key in coeffs else value
        return EvenForm(self.dim, self.degree, coeffs)

    def __neg__(self) -> "EvenForm":
        return self * -1.0

    def __sub__(self, other: "EvenForm") -> "EvenForm":
        return self + (-other)

    def __mul__(self, factor: Coefficient) -> "EvenForm":
        return EvenForm(self.dim, self.degree, {key: value * factor for key, value in self.coeffs.items()})

    __rmul__ = __mul__

    def wedge(self, other: "EvenForm") -> "EvenForm":
        return wedge(self, other)


def wedge(a: EvenForm, b: EvenForm) -> EvenForm:
    """Exterior product of two even-degree forms.

    Parameters
    ----------
    a : EvenForm
        Left factor.
    b : EvenForm
        Right factor.

    Returns
    -------
    EvenForm
        Form of degree ``a.degree + b.degree``; signs come from sorting the concatenated indices.

    Raises
    ------
    DimensionError
        If the ambient dimensions differ or the degrees add up beyond the dimension.
    """
    if a.dim != b.dim:
        raise DimensionError(f"Cannot wedge forms on R^{a.dim} and R^{b.dim}.")
    degree = a.degree + b.degree
    if degree > a.dim:
        raise DimensionError(f"Wedge of degree {degree} exceeds dimension {a.dim}.")
    coeffs: Dict[IndexTuple, Coefficient] = {}
    for key_a, value_a in a.coeffs.items():
        for key_b, value_b in b.coeffs.items():
            merged = key_a + key_b
            sign = permutation_sign(merged)
            if sign == 0:
                continue
            key = tuple(sorted(merged))
            term = sign * value_a * value_b
            coeffs[key] = coeffs[key] + term if key in coeffs else term
    return EvenForm(a.dim, degree, coeffs)


@dataclass(frozen=True, eq=False)
class FormMatrix:
    """Square matrix of even forms of a common degree.

    `batch` is the shape of the evaluation points the coefficients run over; it survives entries that vanish.
    """

    entries: Tuple[Tuple[EvenForm, ...], ...]
    batch: Tuple[int, ...] = ()

    __array_ufunc__ = None

    def __post_init__(self) -> None:
        entries = tuple(tuple(row) for row in self.entries)
        size = len(entries)
        if size == 0 or any(len(row) != size for row in entries):
            raise DimensionError("Form matrix must be square and nonempty.")
        first = entries[0][0]
        for row in entries:
            for entry in row:
                if entry.degree != first.degree or entry.dim != first.dim:
                    raise DimensionError("Form matrix entries must share degree and dimension.")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "batch", tuple(int(n) for n in self.batch))

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def degree(self) -> int:
        return self.entries[0][0].degree

    @property
    def dim(self) -> int:
        return self.entries[0][0].dim

    def __getitem__(self, index: Tuple[int, int]) -> EvenForm:
        row, col = index
        return self.entries[row][col]

    @classmethod
    def from_curvature(cls, curvature: np.ndarray) -> "FormMatrix":
        """Build ``Ω^k_l = ½ R^k_{lμν} dx^μ∧dx^ν`` from an array with trailing axes ``(k, l, μ, ν)``."""
        curvature = np.asarray(curvature)
        d = curvature.shape[-1]
        if curvature.shape[-4:] != (d, d, d, d):
            raise DimensionError(f"Curvature array has shape {curvature.shape}, expected (..., d, d, d, d).")
        rows: List[Tuple[EvenForm, ...]] = []
        for k in range(d):
            row = []
            for l in range(d):
                coeffs = {
                    (mu, nu): 0.5 * (curvature[..., k, l, mu, nu] - curvature[..., k, l, nu, mu])
                    for mu in range(d)
                    for nu in range(mu + 1, d)
                }
                row.append(EvenForm(d, 2, coeffs))
            rows.append(tuple(row))
        return cls(tuple(rows), tuple(curvature.shape[:-4]))

    def to_curvature(self) -> np.ndarray:
        """Inverse of `from_curvature` on the ``[μν]``-antisymmetric part."""
        if self.degree != 2:
            raise DimensionError("Only matrices of 2-forms unfold to curvature arrays.")
        d, size = self.dim, self.size
        shapes = [np.shape(v) for row in self.entries for entry in row for v in entry.coeffs.values()]
        batch = np.broadcast_shapes(self.batch, *shapes)
        out = np.zeros(batch + (size, size, d, d))
        for k in range(size):
            for l in range(size):
                for (mu, nu), value in self.entries[k][l].coeffs.items():
                    out[..., k, l, mu, nu] = value
                    out[..., k, l, nu, mu] = -np.asarray(value)
        return out

    def scaled(self, factor: Coefficient) -> "FormMatrix":
        return FormMatrix(tuple(tuple(entry * factor for entry in row) for row in self.entries), self.batch)

    def wedge(self, other: "FormMatrix") -> "FormMatrix":
        """Matrix product with entries multiplied by the wedge product."""
        if other.size != self.size:
            raise DimensionError("Form matrices of different sizes.")
        n = self.size
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = EvenForm.zero(self.dim, self.degree + other.degree)
                for k in range(n):
                    acc = acc + wedge(self.entries[i][k], other.entries[k][j])
                row.append(acc)
            rows.append(tuple(row))
        return FormMatrix(tuple(rows), np.broadcast_shapes(self.batch, other.batch))

    def trace(self) -> EvenForm:
        acc = EvenForm.zero(self.dim, self.degree)
        for i in range(self.size):
            acc = acc + self.entries[i][i]
        return acc

    def conjugated(self, a: np.ndarray) -> "FormMatrix":
        """Return ``A Ω A^{-1}`` for a constant invertible matrix ``A``."""
        a = np.asarray(a, dtype=float)
        a_inv = np.linalg.inv(a)
        n = self.size
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = EvenForm.zero(self.dim, self.degree)
                for k in range(n):
                    for l in range(n):
                        factor = a[i, k] * a_inv[l, j]
                        if factor != 0.0:
                            acc = acc + self.entries[k][l] * factor
                row.append(acc)
            rows.append(tuple(row))
        return FormMatrix(tuple(rows), self.batch)


def _check_antisymmetric(a: np.ndarray) -> None:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a + np.swapaxes(a, -1, -2)))) if a.size else 0.0
    if asym > ANTISYMMETRY_RTOL * scale:
        raise AsymmetryError(f"Matrix deviates from antisymmetry by {asym:.3g} (scale {scale:.3g}).")


def _pfaffian(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    if n == 0:
        return np.ones(a.shape[:-2])
    if n == 2:
        return a[..., 0, 1]
    total = np.zeros(a.shape[:-2])
    for j in range(1, n):
        keep = [k for k in range(1, n) if k != j]
        minor = a[..., keep, :][..., :, keep]
        sign = 1.0 if j % 2 == 1 else -1.0
        total = total + sign * a[..., 0, j] * _pfaffian(minor)
    return total


def pfaffian(a: np.ndarray) -> Union[float, np.ndarray]:
    """Pfaffian of an antisymmetric matrix (or a stack of them) by first-row expansion.

    Parameters
    ----------
    a : np.ndarray
        Array of shape (..., n, n), antisymmetric in its last two axes, n even.

    Returns
    -------
    float or np.ndarray
        Pfaffian, one value per leading index.

    Raises
    ------
    OddDimensionError
        If n is odd.
    AsymmetryError
        If the matrix is not antisymmetric within ``1e-8`` times its largest entry.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"Expected square matrices, got shape {a.shape}.")
    if a.shape[-1] % 2:
        raise OddDimensionError(f"Pfaffian of odd size {a.shape[-1]}.")
    _check_antisymmetric(a)
    result = _pfaffian(a)
    return float(result) if a.ndim == 2 else result


def _pfaffian_of_forms(omega: FormMatrix, indices: Tuple[int, ...]) -> EvenForm:
    if not indices:
        return EvenForm.constant(omega.dim)
    first, rest = indices[0], indices[1:]
    total = EvenForm.zero(omega.dim, len(indices))
    for pos, j in enumerate(rest):
        minor = rest[:pos] + rest[pos + 1 :]
        term = wedge(omega[first, j], _pfaffian_of_forms(omega, minor))
        total = total + term if pos % 2 == 0 else total - term
    return total


def pfaffian_of_forms(omega: FormMatrix) -> EvenForm:
    """Pfaffian of a matrix of 2-forms, products replaced by wedge products.

    The result has degree ``omega.size``; it is a top form when the size equals the dimension.
    """
    if omega.size % 2:
        raise OddDimensionError(f"Pfaffian of odd size {omega.size}.")
    if omega.degree != 2:
        raise DimensionError(f"Pfaffian needs 2-form entries, got degree {omega.degree}.")
    if omega.size > omega.dim:
        raise DimensionError(f"Pfaffian of size {omega.size} exceeds dimension {omega.dim}.")
    return _pfaffian_of_forms(omega, tuple(range(omega.size)))


def trace_power(omega: FormMatrix, k: int) -> EvenForm:
    """``tr(Ω^k)`` with wedge products."""
    if k < 1:
        raise DimensionError("Trace powers start at 1.")
    if k == 1:
        return omega.trace()
    power = omega
    for _ in range(k - 2):
        power = power.wedge(omega)
    # Only the diagonal of the last product is needed.
    acc = EvenForm.zero(omega.dim, omega.degree * k)
    for i in range(omega.size):
        for j in range(omega.size):
            acc = acc + wedge(power[i, j], omega[j, i])
    return acc


def elementary_symmetric_forms(omega: FormMatrix, up_to: int) -> List[EvenForm]:
    """Elementary symmetric polynomials ``e_0, …, e_up_to`` of a 2-form matrix.

    Newton's identities ``k e_k = Σ_{i=1..k} (-1)^{i-1} e_{k-i} ∧ tr(Ω^i)`` hold because even forms
    commute.
    """
    if omega.degree != 2:
        raise DimensionError("Elementary symmetric forms need 2-form entries.")
    if 2 * up_to > omega.dim:
        raise DimensionError(f"e_{up_to} has degree {2 * up_to} > {omega.dim}.")
    traces = [trace_power(omega, i) for i in range(1, up_to + 1)]
    elementary = [EvenForm.constant(omega.dim)]
    for k in range(1, up_to + 1):
        acc = EvenForm.zero(omega.dim, 2 * k)
        for i in range(1, k + 1):
            term = wedge(elementary[k - i], traces[i - 1])
            acc = acc + term if i % 2 == 1 else acc - term
        elementary.append(acc * (1.0 / k))
    return elementary
