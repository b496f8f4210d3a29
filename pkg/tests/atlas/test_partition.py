"""Test functions in owid.charnum.atlas.partition module.

"""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx, raises

from owid.charnum.atlas import partition
from owid.charnum.atlas.builtins import builtin_manifold
from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.metrics import FlatMetric
from owid.charnum.common import CoverageError


def _fd(func, x, h=1e-6):
    columns = []
    for k in range(x.shape[1]):
        shift = np.zeros(x.shape[1])
        shift[k] = h
        columns.append((func(x + shift) - func(x - shift)) / (2 * h))
    return np.stack(columns, axis=-1)


class TestSmoothStep:
    def test_values(self):
        beta, _, _ = partition.smooth_step(np.array([0.0, partition.CORE, 0.7, 1.0, 1.5]))
        assert beta[:2].tolist() == [1.0, 1.0]
        assert 0 < beta[2] < 1
        assert beta[3:].tolist() == [0.0, 0.0]

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 1.2))
    def test_derivatives(self, t):
        h = 1e-6
        beta, dbeta, ddbeta = partition.smooth_step(np.array([t - h, t, t + h]))
        assert dbeta[1] == approx((beta[2] - beta[0]) / (2 * h), abs=1e-5)
        assert ddbeta[1] == approx((dbeta[2] - dbeta[0]) / (2 * h), abs=1e-4)

    def test_monotone(self):
        beta, dbeta, _ = partition.smooth_step(np.linspace(0, 1, 201))
        assert (np.diff(beta) <= 0).all()
        assert (dbeta <= 0).all()


class TestBump:
    def test_support(self):
        b, _, _ = partition.bump(np.array([[0.0, 0.0], [0.3, -0.3], [1.0, 0.2], [0.2, -1.4]]), 1.0)
        assert b[0] == 1.0 and b[1] == 1.0
        assert b[2] == 0.0 and b[3] == 0.0

    def test_derivatives(self):
        x = np.random.default_rng(2).uniform(-1.1, 1.1, size=(40, 3))
        _, grad, hess = partition.bump(x, 1.0)
        assert np.allclose(grad, _fd(lambda y: partition.bump(y, 1.0)[0], x), atol=1e-6)
        assert np.allclose(hess, _fd(lambda y: partition.bump(y, 1.0)[1], x), atol=1e-5)
        assert partition.bump(x, 1.0, order=1)[2] is None


class TestPartitionOfUnity:
    def test_single_chart(self):
        manifold = AtlasManifold("disc", (Chart(0, 2.0, FlatMetric(2)),))
        x = np.random.default_rng(0).uniform(-0.9, 0.9, size=(100, 2))
        weights = partition.PartitionOfUnity(manifold).evaluate(0, x)
        assert (weights.values == 1.0).all()
        assert (weights.gradients == 0.0).all()
        assert (weights.hessians == 0.0).all()

    def test_uncovered_point(self):
        manifold = AtlasManifold("disc", (Chart(0, 2.0, FlatMetric(2)),))
        with raises(CoverageError):
            partition.PartitionOfUnity(manifold).evaluate(0, np.array([[0.0, 0.0], [1.0, 0.5]]))

    def test_sums_to_one_on_the_sphere(self):
        pou = partition.PartitionOfUnity(builtin_manifold("s2"))
        rng = np.random.default_rng(5)
        for chart in (0, 1):
            x = rng.uniform(-1.5, 1.5, size=(10_000, 2))
            weights = pou.evaluate(chart, x, order=1)
            assert np.max(np.abs(weights.values.sum(axis=1) - 1)) <= 1e-10
            assert (weights.values >= 0).all() and (weights.values <= 1).all()
            assert np.max(np.abs(weights.gradients.sum(axis=1))) <= 1e-10

    def test_support_of_the_other_chart(self):
        pou = partition.PartitionOfUnity(builtin_manifold("s2"))
        x = np.random.default_rng(6).uniform(-1.5, 1.5, size=(2000, 2))
        # Points whose north coordinates lie outside the north support box.
        far = np.max(np.abs(x / np.sum(x**2, axis=1)[:, None]), axis=1) >= 1.5
        weights = pou.evaluate(1, x, order=1)
        assert far.any()
        assert (weights.values[far, 0] == 0).all()

    def test_derivatives_match_finite_differences(self):
        pou = partition.PartitionOfUnity(builtin_manifold("s2"))
        x = np.random.default_rng(7).uniform(-1.4, 1.4, size=(60, 2))
        x = x[np.linalg.norm(x, axis=1) > 0.6]
        weights = pou.evaluate(0, x)
        fd_grad = _fd(lambda y: pou.evaluate(0, y, order=1).values, x)
        fd_hess = _fd(lambda y: pou.evaluate(0, y, order=1).gradients, x)
        assert np.allclose(weights.gradients, fd_grad, atol=1e-6)
        assert np.allclose(weights.hessians, fd_hess, atol=1e-5)

    def test_torus_and_projective_plane(self):
        for name in ["t2_flat", "cp2"]:
            manifold = builtin_manifold(name)
            pou = partition.build_partition_of_unity(manifold)
            chart = manifold.charts[0]
            weights = pou.evaluate(0, chart.lattice(chart.support_radius / 4), order=1)
            assert np.max(np.abs(weights.values.sum(axis=1) - 1)) <= 1e-10

    def test_own_weight(self):
        pou = partition.PartitionOfUnity(builtin_manifold("s2"))
        assert pou.own_weight(0, np.zeros((1, 2)))[0] == 1.0
