"""Test functions in owid.charnum.atlas.metrics module.

"""
import numpy as np
from pytest import approx, raises

from owid.charnum.atlas import metrics
from owid.charnum.atlas.transitions import InversionTransition
from owid.charnum.common import GridFormatError


def _points(dim, count=20, scale=1.5, seed=1):
    return np.random.default_rng(seed).uniform(-scale, scale, size=(count, dim))


def _check_closed_form_derivatives(model, x):
    assert np.allclose(model.jacobian(x), metrics.MetricModel.jacobian(model, x), atol=1e-6)
    assert np.allclose(model.hessian(x), metrics.MetricModel.hessian(model, x), atol=1e-5)


class TestFlatMetric:
    def test_identity_without_derivatives(self):
        model = metrics.FlatMetric(4)
        x = _points(4)
        assert (model.value(x) == np.eye(4)).all()
        assert (model.jacobian(x) == 0).all()
        assert model.hessian(x).shape == (20, 4, 4, 4, 4)


class TestConformalMetric:
    def test_round_sphere_value(self):
        model = metrics.ConformalMetric(2, metrics.round_sphere_potential)
        g = model.value(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert g[0] == approx(4 * np.eye(2))
        assert g[1] == approx(np.eye(2))

    def test_round_sphere_derivatives(self):
        _check_closed_form_derivatives(metrics.ConformalMetric(4, metrics.round_sphere_potential), _points(4))

    def test_perturbed_sphere_derivatives(self):
        model = metrics.ConformalMetric(2, metrics.perturbed_sphere_potential(0.3))
        _check_closed_form_derivatives(model, _points(2))

    def test_perturbed_sphere_is_a_global_metric(self):
        model = metrics.ConformalMetric(2, metrics.perturbed_sphere_potential(0.3))
        inversion = InversionTransition(0, 1, 2, 3.0)
        x = _points(2, scale=2.0)
        x = x[np.linalg.norm(x, axis=1) > 0.3]
        jac = inversion.jacobian(x)
        pulled = np.einsum("nik,nij,njl->nkl", jac, model.value(inversion.value(x)), jac)
        assert np.allclose(pulled, model.value(x), atol=1e-10)

    def test_perturbed_torus_derivatives(self):
        model = metrics.ConformalMetric(2, metrics.perturbed_torus_potential(0.1, np.array([0.5, 0.0])))
        _check_closed_form_derivatives(model, _points(2, scale=1.0))


class TestFubiniStudyMetric:
    def test_identity_at_origin(self):
        model = metrics.FubiniStudyMetric(2)
        assert model.value(np.zeros((1, 4)))[0] == approx(np.eye(4))

    def test_hermitian(self):
        model = metrics.FubiniStudyMetric(2)
        j = metrics.complex_structure(4)
        g = model.value(_points(4))
        assert np.allclose(np.einsum("ka,nkl,lb->nab", j, g, j), g, atol=1e-12)

    def test_derivatives(self):
        _check_closed_form_derivatives(metrics.FubiniStudyMetric(2), _points(4))

    def test_one_dimensional_is_round_sphere_of_radius_one_half(self):
        x = _points(2)
        round_sphere = metrics.ConformalMetric(2, metrics.round_sphere_potential).value(x)
        assert np.allclose(metrics.FubiniStudyMetric(1).value(x), round_sphere / 4, atol=1e-12)


class TestScaledMetric:
    def test_scaling(self):
        base = metrics.ConformalMetric(2, metrics.round_sphere_potential)
        scaled = metrics.ScaledMetric(base, 2.0)
        x = _points(2)
        assert np.allclose(scaled.value(x), 4 * base.value(x))
        assert np.allclose(scaled.hessian(x), 4 * base.hessian(x))
        assert scaled.closed_form


class TestGridMetric:
    def _linear_samples(self, n=9, radius=1.0):
        axis = np.linspace(-radius, radius, n)
        xx, _ = np.meshgrid(axis, axis, indexing="ij")
        return (1 + 0.1 * xx)[..., None, None] * np.eye(2)

    def test_linear_interpolation_is_exact_for_linear_metrics(self):
        model = metrics.GridMetric(self._linear_samples(), 1.0)
        assert model.value(np.array([[0.3, -0.2]]))[0] == approx(1.03 * np.eye(2))
        assert model.fd_step == approx(0.25)

    def test_finite_difference_derivatives(self):
        model = metrics.GridMetric(self._linear_samples(), 1.0)
        jac = model.jacobian(np.array([[0.1, 0.4]]))[0]
        assert jac[:, :, 0] == approx(0.1 * np.eye(2))
        assert jac[:, :, 1] == approx(np.zeros((2, 2)), abs=1e-12)

    def test_samples_are_symmetrized(self):
        samples = self._linear_samples()
        samples[..., 0, 1] = 0.2
        model = metrics.GridMetric(samples, 1.0)
        assert model.value(np.zeros((1, 2)))[0, 1, 0] == approx(0.1)

    def test_not_a_lattice(self):
        with raises(GridFormatError):
            metrics.GridMetric(np.zeros((3, 4, 2, 2)), 1.0)
        with raises(GridFormatError):
            metrics.GridMetric(np.zeros((2, 2, 2, 2)), 1.0)
