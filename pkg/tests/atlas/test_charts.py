"""Test functions in owid.charnum.atlas.charts module.

"""
import numpy as np
from pytest import approx, raises

from owid.charnum.atlas.builtins import builtin_manifold, sphere
from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.metrics import ConformalMetric, FlatMetric, MetricModel, round_sphere_potential
from owid.charnum.atlas.transitions import IdentityTransition, InversionTransition
from owid.charnum.common import (
    AtlasError,
    DimensionError,
    NotPositiveDefiniteError,
    OddDimensionError,
    OrientationError,
    SingularMetricError,
)


class _ConstantMetric(MetricModel):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        super().__init__(len(matrix))
        self.matrix = matrix

    def value(self, x):
        return np.broadcast_to(self.matrix, (len(x),) + self.matrix.shape).copy()


def _two_flat_charts(**kwargs):
    charts = (Chart(0, 2.0, FlatMetric(2)), Chart(1, 2.0, FlatMetric(2)))
    return AtlasManifold("flat_pair", charts, {(0, 1): IdentityTransition(0, 1, 2, 2.0)}, **kwargs)


class TestChart:
    def test_validation(self):
        with raises(AtlasError):
            Chart(0, 0.0, FlatMetric(2))
        with raises(AtlasError):
            Chart(0, 1.0, FlatMetric(2), orientation=0)

    def test_lattice_covers_support_box(self):
        chart = Chart(0, 2.0, FlatMetric(2))
        x = chart.lattice(0.5)
        assert x.shape == (25, 2)
        assert x.min() == -1.0 and x.max() == 1.0
        assert chart.lattice(0.5, radius=2.0).shape == (81, 2)

    def test_check_metric(self):
        x = np.zeros((3, 2))
        Chart(0, 1.0, FlatMetric(2)).check_metric(x)
        with raises(NotPositiveDefiniteError):
            Chart(0, 1.0, _ConstantMetric([[1.0, 0.0], [0.0, -1.0]])).check_metric(x)
        with raises(AtlasError):
            Chart(0, 1.0, _ConstantMetric([[1.0, 0.5], [0.0, 1.0]])).check_metric(x)
        with raises(SingularMetricError):
            Chart(0, 1.0, _ConstantMetric([[1.0, 0.0], [0.0, np.nan]])).check_metric(x)

    def test_rescaled(self):
        chart = Chart(0, 3.0, ConformalMetric(2, round_sphere_potential))
        scaled = chart.rescaled(2.0)
        x = np.array([[0.5, -0.5]])
        assert scaled.metric(x) == approx(4 * chart.metric(x))
        assert scaled.radius == chart.radius


class TestAtlasManifold:
    def test_missing_inverse_is_added(self):
        manifold = _two_flat_charts()
        assert manifold.transition(1, 0).kind == "identity"
        assert manifold.neighbours(0) == [1]
        assert manifold.transition(0, 0) is None
        assert len(manifold) == 2

    def test_odd_dimension(self):
        with raises(OddDimensionError):
            AtlasManifold("line", (Chart(0, 1.0, FlatMetric(3)),))

    def test_mixed_dimensions(self):
        with raises(DimensionError):
            AtlasManifold("mixed", (Chart(0, 1.0, FlatMetric(2)), Chart(1, 1.0, FlatMetric(4))))

    def test_chart_indices_follow_positions(self):
        with raises(AtlasError):
            AtlasManifold("shuffled", (Chart(1, 1.0, FlatMetric(2)), Chart(0, 1.0, FlatMetric(2))))

    def test_transition_key_must_match(self):
        charts = (Chart(0, 1.0, FlatMetric(2)), Chart(1, 1.0, FlatMetric(2)))
        with raises(AtlasError):
            AtlasManifold("bad", charts, {(1, 0): IdentityTransition(0, 1, 2, 1.0)})

    def test_orientation(self):
        sphere(2).check_orientation()
        charts = (
            Chart(0, 3.0, ConformalMetric(2, round_sphere_potential)),
            Chart(1, 3.0, ConformalMetric(2, round_sphere_potential)),
        )
        unoriented = AtlasManifold("s2", charts, {(0, 1): InversionTransition(0, 1, 2, 3.0)})
        with raises(OrientationError):
            unoriented.check_orientation()

    def test_round_trip(self):
        for name in ["s2", "t2_flat", "cp2", "s4"]:
            assert builtin_manifold(name).check_round_trip() <= 1e-8

    def test_metric_is_a_tensor_across_overlaps(self):
        for name in ["s2", "s4", "t2_flat", "cp2", "s2_perturbed(0.2)", "t2_perturbed(0.3)"]:
            manifold = builtin_manifold(name)
            rng = np.random.default_rng(0)
            for (source, target), transition in manifold.transitions.items():
                chart = manifold.charts[source]
                x = rng.uniform(-chart.support_radius, chart.support_radius, size=(200, manifold.dim))
                x = x[transition.overlap(x)]
                jac = transition.jacobian(x)
                pulled = np.einsum("nik,nij,njl->nkl", jac, manifold.charts[target].metric(transition.value(x)), jac)
                assert np.allclose(pulled, chart.metric(x), atol=1e-8), (name, source, target)

    def test_rescaled(self):
        manifold = sphere(2).rescaled(2.0)
        assert manifold.name == "s2*2"
        assert manifold.charts[1].metric(np.zeros((1, 2)))[0] == approx(16 * np.eye(2))
        with raises(AtlasError):
            sphere(2).rescaled(0.0)

    def test_check_metrics(self):
        sphere(2).check_metrics(nodes_per_axis=11)
        charts = (Chart(0, 1.0, _ConstantMetric(-np.eye(2))),)
        with raises(NotPositiveDefiniteError):
            AtlasManifold("negative", charts).check_metrics()
