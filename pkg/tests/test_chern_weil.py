"""Test functions in owid.charnum.chern_weil module.

"""
import math
from unittest.mock import patch

import numpy as np
import pytest
from pytest import approx, raises, warns

from owid.charnum import chern_weil, verify
from owid.charnum.atlas.builtins import builtin_manifold
from owid.charnum.atlas.charts import Chart
from owid.charnum.atlas.metrics import FlatMetric
from owid.charnum.atlas.partition import PartitionOfUnity
from owid.charnum.common import (
    CountingBoundViolation,
    DegreeMismatchWarning,
    MetricConnectionRequiredError,
    ParameterRangeError,
    UnknownPolynomialError,
)
from owid.charnum.connections import levi_civita_curvature, pe_curvature


def _points(count=12, dim=2, half=1.4, seed=3):
    return np.random.default_rng(seed).uniform(-half, half, size=(count, dim))


class TestParsePolynomial:
    def test_euler(self):
        polynomial = chern_weil.parse_polynomial(" Euler ")
        assert polynomial.kind == "euler"
        assert polynomial.requires_metric
        assert polynomial.degree(4) == 2

    def test_classes(self):
        p1 = chern_weil.parse_polynomial("p1")
        c2 = chern_weil.parse_polynomial("C2")
        assert (p1.kind, p1.index, p1.name) == ("pontryagin", 1, "p1")
        assert (c2.kind, c2.index, c2.name) == ("chern", 2, "c2")
        assert p1.degree(4) == c2.degree(4) == 2
        assert not p1.requires_metric

    def test_trace_power(self):
        polynomial = chern_weil.parse_polynomial("tr-power: 1, 2")
        assert polynomial.exponents == (1, 2)
        assert polynomial.name == "tr-power:1,2"
        assert polynomial.degree(6) == 3

    def test_to_dict(self):
        out = chern_weil.parse_polynomial("p1").to_dict()
        assert out["name"] == "p1"
        assert out["normalization"] == "e_2j(Ω/2π)"

    def test_unknown(self):
        for text in ["p0", "x1", "tr-power:0", "tr-power:", "chern", ""]:
            with raises(UnknownPolynomialError):
                chern_weil.parse_polynomial(text)


class TestDensities:
    def test_form_matrix_needs_points_for_fields(self):
        curvature = levi_civita_curvature(builtin_manifold("s2").charts[0])
        with raises(ParameterRangeError):
            chern_weil.curvature_to_form_matrix(curvature)

    def test_zero_curvature(self):
        omega = chern_weil.curvature_to_form_matrix(np.zeros((5, 4, 4, 4, 4)))
        assert chern_weil.pontryagin_density(1, omega) == approx(np.zeros(5))
        assert chern_weil.chern_density(2, omega) == approx(np.zeros(5))
        assert chern_weil.trace_power_density((1, 1), omega) == approx(np.zeros(5))

    def test_odd_chern_classes_vanish(self):
        chart = builtin_manifold("cp2").charts[0]
        x = _points(dim=4)
        omega = chern_weil.curvature_to_form_matrix(levi_civita_curvature(chart), x)
        assert np.array_equal(chern_weil.chern_density(1, omega), np.zeros(len(x)))
        assert np.array_equal(chern_weil.chern_density(3, omega), np.zeros(len(x)))

    def test_flat_chart(self):
        chart = Chart(0, 2.0, FlatMetric(2))
        x = _points(5, half=0.9)
        curvature = levi_civita_curvature(chart)
        euler = chern_weil.polynomial_density(chern_weil.parse_polynomial("euler"), chart, curvature, x)
        trace = chern_weil.polynomial_density(chern_weil.parse_polynomial("tr-power:1"), chart, curvature, x)
        assert euler.shape == trace.shape == (5,)
        assert euler == approx(np.zeros(5), abs=1e-14)
        assert trace == approx(np.zeros(5), abs=1e-14)

    def test_euler_density_on_round_sphere(self):
        chart = builtin_manifold("s2").charts[0]
        x = _points(20)
        density = chern_weil.euler_density(chart, levi_civita_curvature(chart), x)
        root_det = 4 / (1 + np.sum(x**2, axis=1)) ** 2
        assert density == approx(root_det / (2 * math.pi), rel=1e-8)

    def test_euler_density_follows_orientation(self):
        manifold = builtin_manifold("s2")
        x = _points(6)
        north = chern_weil.euler_density(manifold.charts[0], levi_civita_curvature(manifold.charts[0]), x)
        south = chern_weil.euler_density(manifold.charts[1], levi_civita_curvature(manifold.charts[1]), x)
        assert south == approx(-north, rel=1e-10)

    def test_euler_needs_levi_civita(self):
        manifold = builtin_manifold("s2")
        curvature = pe_curvature(manifold, PartitionOfUnity(manifold), 0)
        with raises(MetricConnectionRequiredError):
            chern_weil.euler_density(manifold.charts[0], curvature, _points(3))

    def test_pontryagin_equals_minus_second_chern(self):
        chart = builtin_manifold("cp2").charts[1]
        omega = chern_weil.curvature_to_form_matrix(levi_civita_curvature(chart), _points(dim=4))
        p1 = chern_weil.pontryagin_density(1, omega)
        assert chern_weil.chern_density(2, omega) == approx(-p1, rel=1e-12)
        assert np.max(np.abs(p1)) > 1e-6

    def test_newton_identity(self):
        chart = builtin_manifold("cp2").charts[0]
        omega = chern_weil.curvature_to_form_matrix(levi_civita_curvature(chart), _points(dim=4, seed=8))
        p1 = chern_weil.pontryagin_density(1, omega)
        squares = chern_weil.trace_power_density((1, 1), omega)
        second = chern_weil.trace_power_density((2,), omega)
        assert p1 == approx(0.5 * (squares - second), rel=1e-10, abs=1e-14)

    def test_conjugation_invariance(self):
        chart = builtin_manifold("cp2").charts[0]
        omega = chern_weil.curvature_to_form_matrix(levi_civita_curvature(chart), _points(8, dim=4, seed=5))
        a = np.eye(4) + 0.3 * np.random.default_rng(9).standard_normal((4, 4))
        conjugated = omega.conjugated(a)
        for density in [
            lambda m: chern_weil.pontryagin_density(1, m),
            lambda m: chern_weil.trace_power_density((2,), m),
            lambda m: chern_weil.trace_power_density((1, 1), m),
        ]:
            assert density(conjugated) == approx(density(omega), rel=1e-10, abs=1e-14)

    def test_degree_mismatch(self):
        chart = builtin_manifold("s2").charts[0]
        with warns(DegreeMismatchWarning):
            out = chern_weil.polynomial_density(
                chern_weil.parse_polynomial("p1"), chart, levi_civita_curvature(chart), _points(4)
            )
        assert np.array_equal(out, np.zeros(4))


class TestIntegrateCharacteristicNumber:
    def test_euler_of_round_sphere(self):
        manifold = builtin_manifold("s2")
        result = chern_weil.integrate_characteristic_number(
            manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), h=1 / 128
        )
        assert result.value == approx(2.0, abs=1e-2)
        assert result.volume == approx(4 * math.pi, abs=1e-2)
        assert result.ratio == approx(2 / (4 * math.pi), rel=1e-2)
        assert result.error_estimate < 1e-2
        assert result.connection == "levi_civita"

    def test_euler_of_flat_torus(self):
        manifold = builtin_manifold("t2_flat")
        result = chern_weil.integrate_characteristic_number(
            manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), h=1 / 32
        )
        assert result.value == approx(0.0, abs=1e-10)
        assert result.volume == approx(1.0, abs=1e-8)

    def test_euler_of_perturbed_torus(self):
        manifold = builtin_manifold("t2_perturbed(0.3)")
        result = chern_weil.integrate_characteristic_number(
            manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), h=1 / 64
        )
        assert result.value == approx(0.0, abs=1e-2)

    def test_translation_atlas_has_flat_pe_connection(self):
        manifold = builtin_manifold("t2_perturbed(0.3)")
        result = chern_weil.integrate_characteristic_number(
            manifold,
            PartitionOfUnity(manifold),
            chern_weil.parse_polynomial("tr-power:1"),
            connection="pe",
            h=1 / 16,
            estimate_error=False,
        )
        assert result.value == approx(0.0, abs=1e-12)
        assert result.connection == "piecewise_euclidean"
        assert math.isnan(result.error_estimate)

    def test_euler_with_pe_connection(self):
        manifold = builtin_manifold("s2")
        with raises(MetricConnectionRequiredError):
            chern_weil.integrate_characteristic_number(
                manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), connection="pe"
            )

    def test_unknown_connection(self):
        manifold = builtin_manifold("s2")
        with raises(ParameterRangeError):
            chern_weil.integrate_characteristic_number(
                manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), connection="spin"
            )

    def test_degree_mismatch(self):
        manifold = builtin_manifold("s2")
        with warns(DegreeMismatchWarning):
            result = chern_weil.integrate_characteristic_number(
                manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("p1"), h=1 / 32
            )
        assert result.value == 0.0
        assert result.volume > 12

    def test_to_dict(self):
        result = chern_weil.CharacteristicNumberResult("s2", "euler", "levi_civita", 2.0, 4.0, 0.5, 0.01)
        assert list(result.to_dict()) == [
            "manifold",
            "polynomial",
            "connection",
            "value",
            "volume",
            "ratio",
            "h",
            "error_estimate",
        ]
        assert result.to_dict()["ratio"] == 0.5


class TestVolume:
    def test_flat_torus(self):
        manifold = builtin_manifold("t2_flat")
        assert chern_weil.volume(manifold, PartitionOfUnity(manifold)) == approx(1.0, abs=1e-8)

    def test_round_sphere(self):
        manifold = builtin_manifold("s2")
        assert chern_weil.volume(manifold, PartitionOfUnity(manifold)) == approx(4 * math.pi, abs=1e-2)

    def test_rescaling(self):
        manifold = builtin_manifold("s2")
        rescaled = manifold.rescaled(2.0)
        base = chern_weil.volume(manifold, PartitionOfUnity(manifold), h=1 / 32)
        assert chern_weil.volume(rescaled, PartitionOfUnity(rescaled), h=1 / 32) == approx(4 * base, rel=1e-12)

    def test_euclidean_ball(self):
        assert chern_weil.euclidean_ball_volume(2, 1.0) == approx(math.pi)
        assert chern_weil.euclidean_ball_volume(3, 2.0) == approx(32 * math.pi / 3)
        assert chern_weil.euclidean_ball_volume(4, 1.0) == approx(math.pi**2 / 2)


class TestVolumeLowerBound:
    def test_values(self):
        assert chern_weil.volume_lower_bound(2, 1.0, 0.0, 0.5) == approx(math.pi / 4)
        assert chern_weil.volume_lower_bound(2, 1.0, 1.0, 0.2) == approx(math.pi * 0.04 * math.exp(-3))

    def test_decreasing_in_q(self):
        values = [chern_weil.volume_lower_bound(4, 1.0, q, 0.1) for q in [0.0, 0.5, 1.0, 2.0]]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_radius_range(self):
        with raises(ParameterRangeError):
            chern_weil.volume_lower_bound(2, 1.0, 0.0, 0.0)
        with raises(ParameterRangeError):
            chern_weil.volume_lower_bound(2, 1.0, 1.0, 0.5)


class TestChartCountBound:
    def test_flat_torus(self):
        result = chern_weil.chart_count_bound(builtin_manifold("t2_flat"), 0.0, 1.0)
        assert result.bound == 69
        assert 1 <= result.actual <= result.bound
        assert result.volume == approx(1.0, abs=1e-8)
        assert result.rho == approx(math.exp(-2) / 2)
        assert set(result.to_dict()) == {"bound", "actual", "volume", "ball_volume", "rho"}

    def test_violation(self):
        with patch.object(chern_weil, "build_separated_net", return_value=[None] * 1000):
            with raises(CountingBoundViolation):
                chern_weil.chart_count_bound(builtin_manifold("t2_flat"), 0.0, 1.0)


@pytest.mark.slow
class TestFullResolution:
    def test_euler_of_round_four_sphere(self):
        manifold = builtin_manifold("s4")
        result = chern_weil.integrate_characteristic_number(
            manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("euler"), h=1 / 48, estimate_error=False
        )
        assert result.value == approx(2.0, abs=5e-2)
        assert result.volume == approx(8 * math.pi**2 / 3, rel=1e-2)

    def test_first_pontryagin_number_of_cp2(self):
        manifold = builtin_manifold("cp2")
        result = chern_weil.integrate_characteristic_number(
            manifold, PartitionOfUnity(manifold), chern_weil.parse_polynomial("p1"), h=1 / 64, estimate_error=False
        )
        assert result.value == approx(3.0, rel=5e-2)

    def test_pontryagin_number_of_cp2_independent_of_connection(self):
        report = verify.connection_independence([builtin_manifold("cp2")], h=1 / 32)
        (check,) = report.checks
        assert check.check.startswith("p1 pe against lc")
        assert check.passed
