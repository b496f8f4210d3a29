"""Test functions in owid.charnum.forms module.

"""
import itertools
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx, raises

from owid.charnum import forms
from owid.charnum.common import AsymmetryError, DimensionError, OddDimensionError


def _random_antisymmetric(rng, size, batch=()):
    a = rng.normal(size=batch + (size, size))
    return a - np.swapaxes(a, -1, -2)


class TestAntisymmetrizePair:
    def test_two_by_two(self):
        h = np.array([[0.0, 3.0], [1.0, 0.0]])
        result = forms.antisymmetrize_pair(h, 0, 1)
        assert result[0, 1] == 2.0
        assert result[1, 0] == -2.0

    def test_symmetric_gives_zero(self):
        h = np.array([[1.0, 2.0], [2.0, 5.0]])
        assert (forms.antisymmetrize_pair(h, 0, 1) == 0).all()

    def test_antisymmetric_gives_double(self):
        h = _random_antisymmetric(np.random.default_rng(0), 3)
        assert (forms.antisymmetrize_pair(h, -1, -2) == 2 * h).all()

    def test_applied_twice_doubles(self):
        h = np.random.default_rng(1).normal(size=(2, 3, 3, 3))
        once = forms.antisymmetrize_pair(h, 2, 3)
        assert np.allclose(forms.antisymmetrize_pair(once, 2, 3), 2 * once)

    def test_same_axis(self):
        with raises(DimensionError):
            forms.antisymmetrize_pair(np.zeros((2, 2)), 1, -1)

    def test_extent_mismatch(self):
        with raises(DimensionError):
            forms.antisymmetrize_pair(np.zeros((2, 3)), 0, 1)


class TestMaxNorm:
    def test_values(self):
        assert forms.max_norm([3, -4]) == 4
        assert forms.max_norm([0, 0, 0]) == 0
        assert forms.max_norm([1, 1]) == 1
        assert np.linalg.norm([1, 1]) == approx(np.sqrt(2))

    def test_batched(self):
        assert list(forms.max_norm(np.array([[1, -2], [0.5, 0.1]]))) == [2, 0.5]

    def test_empty(self):
        with raises(DimensionError):
            forms.max_norm([])


class TestEvenForm:
    def test_zero_coefficients_dropped(self):
        form = forms.EvenForm(4, 2, {(0, 1): 0.0, (2, 3): 1.5})
        assert list(form.coeffs) == [(2, 3)]
        assert forms.EvenForm.zero(4, 2).is_zero

    def test_odd_degree(self):
        with raises(DimensionError):
            forms.EvenForm(4, 1, {})

    def test_degree_above_dimension(self):
        with raises(DimensionError):
            forms.EvenForm(2, 4, {})

    def test_unsorted_key(self):
        with raises(DimensionError):
            forms.EvenForm(4, 2, {(1, 0): 1.0})

    def test_basis_sorts_with_sign(self):
        form = forms.EvenForm.basis(4, (1, 0), 2.0)
        assert form.coeffs == {(0, 1): -2.0}

    def test_arithmetic(self):
        a = forms.EvenForm(4, 2, {(0, 1): 1.0, (1, 2): 2.0})
        b = forms.EvenForm(4, 2, {(0, 1): -1.0})
        assert (a + b).coeffs == {(1, 2): 2.0}
        assert (a - a).is_zero
        assert (3 * a).coeffs == {(0, 1): 3.0, (1, 2): 6.0}

    def test_array_coefficients(self):
        values = np.array([1.0, 2.0, 3.0])
        form = np.array([2.0, 2.0, 2.0]) * forms.EvenForm(2, 2, {(0, 1): values})
        assert isinstance(form, forms.EvenForm)
        assert list(form.top_coefficient()) == [2.0, 4.0, 6.0]

    def test_add_incompatible(self):
        with raises(DimensionError):
            forms.EvenForm.zero(4, 2) + forms.EvenForm.zero(4, 4)


class TestWedge:
    def test_identity_permutation(self):
        result = forms.wedge(forms.EvenForm.basis(4, (0, 1)), forms.EvenForm.basis(4, (2, 3)))
        assert result.coeffs == {(0, 1, 2, 3): 1.0}

    def test_repeated_index(self):
        result = forms.wedge(forms.EvenForm.basis(4, (0, 1)), forms.EvenForm.basis(4, (0, 2)))
        assert result.is_zero
        assert result.degree == 4

    def test_odd_permutation(self):
        result = forms.wedge(forms.EvenForm.basis(4, (0, 2)), forms.EvenForm.basis(4, (1, 3)))
        assert result.coeffs == {(0, 1, 2, 3): -1.0}

    def test_dimension_mismatch(self):
        with raises(DimensionError):
            forms.wedge(forms.EvenForm.basis(4, (0, 1)), forms.EvenForm.basis(6, (2, 3)))

    def test_degree_overflow(self):
        with raises(DimensionError):
            forms.wedge(forms.EvenForm.basis(2, (0, 1)), forms.EvenForm.basis(2, (0, 1)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=18, max_size=18))
    def test_commutative_and_associative(self, values):
        keys = list(itertools.combinations(range(6), 2))
        a = forms.EvenForm(6, 2, dict(zip(keys, values[0:6])))
        b = forms.EvenForm(6, 2, dict(zip(keys, values[6:12])))
        c = forms.EvenForm(6, 2, dict(zip(keys, values[12:18])))
        ab, ba = forms.wedge(a, b), forms.wedge(b, a)
        for key in set(ab.coeffs) | set(ba.coeffs):
            assert ab.coeffs.get(key, 0.0) == approx(ba.coeffs.get(key, 0.0), abs=1e-9)
        left = forms.wedge(ab, c).top_coefficient()
        right = forms.wedge(a, forms.wedge(b, c)).top_coefficient()
        assert left == approx(right, abs=1e-7)


class TestPfaffian:
    def test_two_by_two(self):
        assert forms.pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]])) == 2.5

    def test_block_diagonal(self):
        a = np.zeros((4, 4))
        a[0, 1], a[1, 0] = 3.0, -3.0
        a[2, 3], a[3, 2] = -2.0, 2.0
        assert forms.pfaffian(a) == approx(-6.0)

    def test_square_is_determinant(self):
        rng = np.random.default_rng(42)
        for size in (2, 4, 6, 8):
            a = _random_antisymmetric(rng, size, batch=(50,))
            pf = forms.pfaffian(a)
            assert np.allclose(pf**2, np.linalg.det(a), rtol=1e-9, atol=1e-9)

    def test_odd_size(self):
        with raises(OddDimensionError):
            forms.pfaffian(np.zeros((3, 3)))

    def test_not_antisymmetric(self):
        with raises(AsymmetryError):
            forms.pfaffian(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_tolerates_roundoff(self):
        a = np.array([[0.0, 1.0], [-1.0 + 1e-12, 0.0]])
        assert forms.pfaffian(a) == 1.0


def _brute_force_top_pfaffian(r):
    """Top coefficient of Pf(Ω) for Ω^k_l = ½ r[k, l, μ, ν] dx^μ∧dx^ν, by summing over permutations."""
    d = r.shape[0]
    half = d // 2
    total = 0.0
    for sigma in itertools.permutations(range(d)):
        for tau in itertools.permutations(range(d)):
            term = forms.permutation_sign(sigma) * forms.permutation_sign(tau)
            for i in range(half):
                term *= r[sigma[2 * i], sigma[2 * i + 1], tau[2 * i], tau[2 * i + 1]]
            total += term
    return total / (2**half * math.factorial(half) * 2**half)


class TestPfaffianOfForms:
    def test_two_dimensional(self):
        omega = forms.EvenForm(2, 2, {(0, 1): 0.7})
        matrix = forms.FormMatrix(((forms.EvenForm.zero(2, 2), omega), (-omega, forms.EvenForm.zero(2, 2))))
        assert forms.pfaffian_of_forms(matrix).coeffs == {(0, 1): 0.7}

    def test_zero_matrix(self):
        matrix = forms.FormMatrix.from_curvature(np.zeros((4, 4, 4, 4)))
        assert forms.pfaffian_of_forms(matrix).is_zero

    def test_matches_brute_force_expansion(self):
        rng = np.random.default_rng(7)
        r = rng.normal(size=(4, 4, 4, 4))
        r = r - np.swapaxes(r, 0, 1)
        r = r - np.swapaxes(r, 2, 3)
        matrix = forms.FormMatrix.from_curvature(r)
        assert forms.pfaffian_of_forms(matrix).top_coefficient() == approx(_brute_force_top_pfaffian(r))

    def test_odd_size(self):
        with raises(OddDimensionError):
            forms.pfaffian_of_forms(forms.FormMatrix.from_curvature(np.zeros((3, 3, 3, 3))))


class TestFormMatrix:
    def test_round_trip_antisymmetric_part(self):
        r = np.random.default_rng(3).normal(size=(5, 2, 2, 2, 2))
        matrix = forms.FormMatrix.from_curvature(r)
        expected = 0.5 * forms.antisymmetrize_pair(r, -1, -2)
        assert np.allclose(matrix.to_curvature(), expected)

    def test_single_slot_two_dimensional(self):
        r = np.zeros((2, 2, 2, 2))
        r[0, 1, 0, 1], r[0, 1, 1, 0] = 1.25, -1.25
        matrix = forms.FormMatrix.from_curvature(r)
        assert matrix[0, 1].coeffs == {(0, 1): 1.25}

    def test_batch_of_vanishing_entries(self):
        matrix = forms.FormMatrix.from_curvature(np.zeros((5, 4, 4, 4, 4)))
        assert matrix.batch == (5,)
        assert matrix.scaled(2.0).batch == (5,)
        assert matrix.wedge(matrix).batch == (5,)
        assert matrix.to_curvature().shape == (5, 4, 4, 4, 4)

    def test_not_square(self):
        with raises(DimensionError):
            forms.FormMatrix(((forms.EvenForm.zero(2, 2),), ()))

    def test_mixed_degree(self):
        with raises(DimensionError):
            forms.FormMatrix(
                (
                    (forms.EvenForm.zero(2, 2), forms.EvenForm.zero(2, 0)),
                    (forms.EvenForm.zero(2, 2), forms.EvenForm.zero(2, 2)),
                )
            )

    def test_trace_invariant_under_conjugation(self):
        rng = np.random.default_rng(5)
        r = rng.normal(size=(4, 4, 4, 4))
        matrix = forms.FormMatrix.from_curvature(r)
        a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        for k in (1, 2):
            before = forms.trace_power(matrix, k)
            after = forms.trace_power(matrix.conjugated(a), k)
            for key in before.coeffs:
                assert after.coeffs[key] == approx(before.coeffs[key], rel=1e-10, abs=1e-10)


class TestElementarySymmetricForms:
    def test_second_elementary_matches_minors(self):
        rng = np.random.default_rng(11)
        r = rng.normal(size=(4, 4, 4, 4))
        matrix = forms.FormMatrix.from_curvature(r)
        e = forms.elementary_symmetric_forms(matrix, 2)
        expected = forms.EvenForm.zero(4, 4)
        for i, j in itertools.combinations(range(4), 2):
            expected = expected + forms.wedge(matrix[i, i], matrix[j, j]) - forms.wedge(matrix[i, j], matrix[j, i])
        assert e[2].top_coefficient() == approx(expected.top_coefficient())
        assert e[0].coeffs == {(): 1.0}

    def test_degree_too_high(self):
        with raises(DimensionError):
            forms.elementary_symmetric_forms(forms.FormMatrix.from_curvature(np.zeros((2, 2, 2, 2))), 2)
