"""Test functions in owid.charnum.atlas.transitions module.

"""
import numpy as np
from pytest import approx, raises

from owid.charnum.atlas import transitions
from owid.charnum.atlas.metrics import FubiniStudyMetric
from owid.charnum.common import DimensionError


def _fd(func, x, h=1e-6):
    columns = []
    for k in range(x.shape[1]):
        shift = np.zeros(x.shape[1])
        shift[k] = h
        columns.append((func(x + shift) - func(x - shift)) / (2 * h))
    return np.stack(columns, axis=-1)


def _points(dim, count=25, low=0.4, high=2.0, seed=3):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-high, high, size=(4 * count, dim))
    return x[np.min(np.abs(x), axis=1) > low][:count]


def _check_derivatives(transition, x):
    assert np.allclose(transition.jacobian(x), _fd(transition.value, x), atol=1e-6)
    assert np.allclose(transition.hessian(x), _fd(transition.jacobian, x), atol=1e-5)


def _check_inverse(transition, x):
    back = transition.inverse()
    assert (back.source, back.target) == (transition.target, transition.source)
    y = transition.value(x)
    assert np.allclose(back.value(y), x, atol=1e-10)
    assert np.allclose(np.einsum("nij,njk->nik", back.jacobian(y), transition.jacobian(x)), np.eye(x.shape[1]))


class TestIdentityTransition:
    def test_everything_trivial(self):
        identity = transitions.IdentityTransition(0, 1, 2, 1.0)
        x = _points(2)
        assert (identity.value(x) == x).all()
        assert (identity.jacobian(x) == np.eye(2)).all()
        assert (identity.hessian(x) == 0).all()
        assert identity.to_dict() == {"from": 0, "to": 1, "kind": "identity"}


class TestTranslationTransition:
    def test_periodic_wrap(self):
        shift = transitions.TranslationTransition(0, 1, [0.5, 0.0], 1.0, period=1.0)
        y = shift.value(np.array([[0.25, 0.25], [-0.25, 0.0]]))
        assert y == approx(np.array([[-0.25, 0.25], [0.25, 0.0]]))

    def test_wrap_band_is_excluded(self):
        shift = transitions.TranslationTransition(0, 1, [0.5, 0.0], 1.0, period=1.0)
        defined = shift.defined(np.array([[0.0, 0.0], [0.1, 0.0], [-0.3, 0.2]]))
        assert defined.tolist() == [False, True, True]

    def test_inverse(self):
        shift = transitions.TranslationTransition(2, 1, [0.5, -0.5], 1.0, period=1.0)
        x = np.array([[0.1, 0.2], [-0.3, 0.4]])
        _check_inverse(shift, x)
        assert shift.inverse().to_dict() == {
            "from": 1,
            "to": 2,
            "kind": "translation",
            "offset": [-0.5, 0.5],
            "period": 1.0,
        }

    def test_without_period_is_affine(self):
        shift = transitions.TranslationTransition(0, 1, [3.0, 4.0], 10.0)
        assert shift.value(np.zeros((1, 2)))[0] == approx([3.0, 4.0])
        assert shift.overlap(np.array([[0.0, 0.0], [7.0, 0.0]])).tolist() == [True, False]


class TestInversionTransition:
    def test_value(self):
        inversion = transitions.InversionTransition(0, 1, 2, 3.0)
        assert inversion.value(np.array([[2.0, 0.0], [1.0, 1.0]])) == approx(np.array([[0.5, 0.0], [0.5, 0.5]]))

    def test_derivatives(self):
        _check_derivatives(transitions.InversionTransition(0, 1, 2, 3.0), _points(2))
        _check_derivatives(transitions.InversionTransition(0, 1, 4, 3.0), _points(4))

    def test_own_inverse(self):
        _check_inverse(transitions.InversionTransition(0, 1, 4, 3.0), _points(4))

    def test_orientation_reversing(self):
        jac = transitions.InversionTransition(0, 1, 2, 3.0).jacobian(_points(2))
        assert (np.linalg.det(jac) < 0).all()

    def test_origin_is_outside_the_overlap(self):
        inversion = transitions.InversionTransition(0, 1, 2, 3.0)
        x = np.array([[0.0, 0.0], [0.1, 0.0], [1.0, 0.0]])
        assert inversion.derivatives_defined(x).tolist() == [False, True, True]
        assert inversion.overlap(x).tolist() == [False, False, True]
        assert np.isnan(inversion.value(x[:1])).all()


class TestAffineTransition:
    def test_inverse(self):
        affine = transitions.AffineTransition(0, 1, [[2.0, 1.0], [0.0, 1.0]], [1.0, -1.0], 5.0)
        _check_inverse(affine, _points(2))
        assert (affine.hessian(_points(2)) == 0).all()

    def test_shapes(self):
        with raises(DimensionError):
            transitions.AffineTransition(0, 1, np.eye(3), [0.0, 0.0], 1.0)


class TestProjectiveTransition:
    def test_standard_chart_change(self):
        # (z1, z2) -> (1 / z1, z2 / z1) with z1 = 1 + i, z2 = 1/2.
        change = transitions.ProjectiveTransition(0, 1, 2, 3.0)
        y = change.value(np.array([[1.0, 1.0, 0.5, 0.0]]))
        assert y[0] == approx([0.5, -0.5, 0.25, -0.25])

    def test_derivatives(self):
        for source, target in [(0, 1), (1, 2), (2, 0)]:
            _check_derivatives(transitions.ProjectiveTransition(source, target, 2, 3.0), _points(4))

    def test_round_trip(self):
        for source, target in [(0, 1), (0, 2), (1, 2)]:
            _check_inverse(transitions.ProjectiveTransition(source, target, 2, 3.0), _points(4))

    def test_holomorphic_maps_preserve_orientation(self):
        jac = transitions.ProjectiveTransition(1, 0, 2, 3.0).jacobian(_points(4))
        assert (np.linalg.det(jac) > 0).all()

    def test_fubini_study_is_preserved(self):
        change = transitions.ProjectiveTransition(0, 2, 2, 3.0)
        metric = FubiniStudyMetric(2)
        x = _points(4)
        jac = change.jacobian(x)
        pulled = np.einsum("nik,nij,njl->nkl", jac, metric.value(change.value(x)), jac)
        assert np.allclose(pulled, metric.value(x), atol=1e-10)

    def test_no_transition_to_itself(self):
        with raises(DimensionError):
            transitions.ProjectiveTransition(1, 1, 2, 3.0)
