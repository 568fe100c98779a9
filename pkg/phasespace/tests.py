import random

import numpy as np
from django.test import SimpleTestCase

from params.exponents import Params, exponent_table, sobolev_exponent
from phasespace.charts import Chart, ChartError, ChartPoint, to_chart, xyz
from phasespace.fields import iso_curve_z, jacobian, p3_plane_flow, vf
from phasespace.points import Kind, PointId, classify_point, critical_points, point_by_id


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


def random_subcritical(rng):
    m = rng.uniform(1.1, 4.0)
    N = rng.randint(3, 9)
    sigma = rng.uniform(0.0, 3.0)
    p_s = sobolev_exponent(m, N, sigma)
    p = rng.uniform(m + 0.05, p_s - 0.05)
    return Params(m=m, N=N, p=p, sigma=sigma)


def assert_spectrum(test, values, expected, tol=1e-10):
    got = sorted(np.asarray(values, dtype=complex), key=lambda z: (round(z.real, 8), z.imag))
    want = sorted(np.asarray(expected, dtype=complex), key=lambda z: (round(z.real, 8), z.imag))
    test.assertEqual(len(got), len(want))
    for a, b in zip(got, want):
        test.assertLess(abs(a - b), tol * max(1.0, abs(b)), msg=f'{got} vs {want}')


class VectorFieldTest(SimpleTestCase):
    def test_reference_value(self):
        out = vf(xyz(1.0, 0.0, 1.0), make_params(sigma=0.0))
        np.testing.assert_allclose(out, [2.0, 0.0, 2.0], atol=1e-15)

    def test_vanishes_at_finite_points(self):
        params = make_params()
        for pid in (PointId.P0, PointId.P1, PointId.P3):
            info = point_by_id(params, pid)
            np.testing.assert_allclose(vf(info.coords, params), 0.0, atol=1e-12)
        np.testing.assert_allclose(vf(xyz(0.0, -1.5, 0.0), make_params()), 0.0, atol=1e-14)

    def test_vanishes_at_p2(self):
        params = make_params(p=4.0, sigma=0.0)
        info = point_by_id(params, PointId.P2)
        self.assertTrue(info.exists)
        np.testing.assert_allclose(vf(info.coords, params), 0.0, atol=1e-12)

    def test_vanishes_at_points_at_infinity(self):
        params = make_params()
        for pid in (PointId.Q1, PointId.Q2, PointId.Q3, PointId.Q5, PointId.QGAMMA0,
                    PointId.Q1PRIME, PointId.Q5PRIME):
            info = point_by_id(params, pid)
            np.testing.assert_allclose(vf(info.coords, params), 0.0, atol=1e-12)

    def test_invariant_planes(self):
        rng = random.Random(3)
        params = make_params()
        for _ in range(200):
            Y = rng.uniform(-5, 5)
            a, b = rng.uniform(0, 10), rng.uniform(0, 10)
            self.assertEqual(vf(xyz(0.0, Y, b), params)[0], 0.0)
            self.assertEqual(vf(xyz(a, Y, 0.0), params)[2], 0.0)

    def test_planes_match_restrictions_of_the_finite_system(self):
        params = make_params()
        full = vf(xyz(0.0, -0.3, 1.2), params)
        plane = vf(ChartPoint(Chart.PLANE_X0, (-0.3, 1.2)), params)
        np.testing.assert_allclose(plane, full[1:], rtol=1e-14)
        full = vf(xyz(2.0, 0.4, 0.0), params)
        plane = vf(ChartPoint(Chart.PLANE_Z0, (2.0, 0.4)), params)
        np.testing.assert_allclose(plane, full[:2], rtol=1e-14)

    def test_equator_has_no_field(self):
        with self.assertRaises(ChartError):
            vf(ChartPoint(Chart.EQUATOR, (0.0, 0.0, 1.0)), make_params())

    def test_yproj_field_is_the_projected_finite_field(self):
        # x = X/Y, z = Z/Y, w = 1/Y with d eta2 = -Y d eta on the Y<0 side
        params = make_params()
        X, Y, Z = 3.0, -2.0, 1.5
        F = vf(xyz(X, Y, Z), params)
        dx = (F[0] * Y - X * F[1]) / Y ** 2
        dz = (F[2] * Y - Z * F[1]) / Y ** 2
        dw = -F[1] / Y ** 2
        expected = np.array([dx, dz, dw]) / (-Y)
        got = vf(to_chart(xyz(X, Y, Z), Chart.YPROJ_PLUS), params)
        np.testing.assert_allclose(got, expected, rtol=1e-12)


class JacobianTest(SimpleTestCase):
    def central_difference(self, point, params, h=1e-6):
        base = point.array
        cols = []
        for i in range(base.size):
            step = np.zeros_like(base)
            step[i] = h * max(1.0, abs(base[i]))
            plus = vf(ChartPoint(point.chart, base + step), params)
            minus = vf(ChartPoint(point.chart, base - step), params)
            cols.append((plus - minus) / (2 * step[i]))
        return np.column_stack(cols)

    def test_matches_finite_differences(self):
        rng = random.Random(5)
        params = make_params()
        for chart in (Chart.XYZ, Chart.XPROJ, Chart.YPROJ_PLUS, Chart.YPROJ_MINUS,
                      Chart.WCHART, Chart.PLANE_X0, Chart.PLANE_Z0):
            n = 2 if chart in (Chart.WCHART, Chart.PLANE_X0, Chart.PLANE_Z0) else 3
            for _ in range(20):
                coords = [rng.uniform(0.1, 3.0) for _ in range(n)]
                point = ChartPoint(chart, coords)
                exact = jacobian(point, params)
                approx = self.central_difference(point, params)
                scale = max(1.0, np.max(np.abs(exact)))
                self.assertLess(np.max(np.abs(exact - approx)) / scale, 1e-6)


class EigenvalueCertificateTest(SimpleTestCase):
    def test_closed_form_spectra_on_random_grid(self):
        rng = random.Random(2024)
        for _ in range(100):
            params = random_subcritical(rng)
            m, N, p, s = params.m, params.N, params.p, params.sigma
            k, L = params.k, params.L
            p_c = exponent_table(params).p_c
            pts = {info.id: info for info in critical_points(params)}

            assert_spectrum(self, pts[PointId.P0].eigenvalues, [2, -(N - 2), s + 2])
            assert_spectrum(self, pts[PointId.P1].eigenvalues,
                            [(m * N - N + 2) / m, N - 2, (N - 2) * (p_c - p) / m])
            assert_spectrum(self, pts[PointId.Q5].eigenvalues, [(m - 1) * k, -k, (p - 1) * k])
            assert_spectrum(self, pts[PointId.Q5PRIME].eigenvalues, [-k, (m + p - 2) * k])
            assert_spectrum(self, pts[PointId.Q1PRIME].eigenvalues, [k, 0.0])
            assert_spectrum(self, pts[PointId.Q1].eigenvalues, [0.0, k, 0.0])

            values = pts[PointId.P3].eigenvalues
            lam3 = L / (m - 1)
            i3 = int(np.argmin(np.abs(values - lam3)))
            self.assertLess(abs(values[i3] - lam3), 1e-10 * max(1.0, lam3))
            rest = np.delete(values, i3)
            A = -((1 - m) ** 2 * N * (s + 2) + 2 * (m ** 2 - 1) * s + 4 * (m * p - 1)) / (L * (m - 1))
            product = 2 * (m * N - N + 2) / (m - 1)
            self.assertLess(abs(rest[0] * rest[1] - product), 1e-9 * max(1.0, product))
            self.assertLess(abs(rest[0] + rest[1] - A), 1e-9 * max(1.0, abs(A)))

    def test_p0_reference_spectrum(self):
        info = point_by_id(make_params(), PointId.P0)
        assert_spectrum(self, info.eigenvalues, [2.0, -3.0, 2.1])

    def test_p3_product_reference(self):
        values = point_by_id(make_params(), PointId.P3).eigenvalues
        lam3 = 2.3
        rest = [v for v in values if abs(v - lam3) > 1e-8]
        self.assertAlmostEqual(abs(rest[0] * rest[1]), 14.0, places=9)

    def test_eigenvectors_are_normalized(self):
        info = point_by_id(make_params(), PointId.P3)
        for value, vec in info.eigenpairs:
            self.assertAlmostEqual(np.linalg.norm(vec), 1.0, places=12)
            lead = vec[int(np.argmax(np.abs(vec)))]
            self.assertGreaterEqual(lead.real, 0.0)
            np.testing.assert_allclose(info.jacobian @ vec, value * vec, atol=1e-10)


class CriticalPointsTest(SimpleTestCase):
    def test_p2_height(self):
        info = point_by_id(make_params(p=4.0, sigma=0.0), PointId.P2)
        self.assertAlmostEqual(info.coords.coords[2], 1.0, places=12)

    def test_p3_abscissa(self):
        info = point_by_id(make_params(), PointId.P3)
        self.assertAlmostEqual(info.coords.coords[0], 29.4 / 2.3, places=12)
        self.assertAlmostEqual(info.coords.coords[1], 2.0, places=12)

    def test_kappa_at_sigma_zero(self):
        info = point_by_id(make_params(sigma=0.0), PointId.QGAMMA0)
        self.assertAlmostEqual(info.kappa, 1.0, places=12)

    def test_p2_existence(self):
        self.assertFalse(point_by_id(make_params(p=3.0, sigma=0.0), PointId.P2).exists)
        self.assertFalse(point_by_id(make_params(N=2, p=3.0, sigma=0.0), PointId.P2).exists)
        self.assertTrue(point_by_id(make_params(p=4.0, sigma=0.0), PointId.P2).exists)

    def test_p1_and_p2_coincide_at_critical_exponent(self):
        params = make_params(sigma=0.0, p=10 / 3)
        p1 = point_by_id(params, PointId.P1)
        p2 = point_by_id(params, PointId.P2)
        np.testing.assert_allclose(p1.coords.coords, p2.coords.coords, atol=1e-12)
        self.assertTrue(p1.notes)

    def test_classification(self):
        params = make_params()
        self.assertEqual(point_by_id(params, PointId.P1).kind, Kind.NODE)
        self.assertEqual(point_by_id(params, PointId.P3).kind, Kind.SADDLE)
        self.assertEqual(point_by_id(params, PointId.P0).kind, Kind.SADDLE)
        self.assertEqual(point_by_id(params, PointId.Q2).kind, Kind.NODE)
        self.assertEqual(point_by_id(params, PointId.Q3).kind, Kind.STABLE_NODE)
        self.assertEqual(point_by_id(params, PointId.Q5).kind, Kind.SADDLE)
        self.assertEqual(point_by_id(params, PointId.Q1).kind, Kind.SADDLE_NODE)
        self.assertEqual(point_by_id(params, PointId.Q4).kind, Kind.CENTER_DEGENERATE)

    def test_p2_between_critical_and_sobolev(self):
        kind = point_by_id(make_params(p=4.0, sigma=0.0), PointId.P2).kind
        self.assertIn(kind, (Kind.NODE, Kind.FOCUS_UNSTABLE))

    def test_p3_has_one_dimensional_unstable_manifold(self):
        values = point_by_id(make_params(), PointId.P3).eigenvalues
        self.assertEqual(int(np.sum(values.real > 0)), 1)

    def test_dimension_two_saddle_node(self):
        params = make_params(N=2, sigma=0.0, p=3.0)
        info = point_by_id(params, PointId.P0)
        self.assertEqual(classify_point(info, params), Kind.SADDLE_NODE)
        self.assertTrue(info.notes)


class ChartConversionTest(SimpleTestCase):
    def test_xproj_reference(self):
        point = to_chart(xyz(4.0, 1.0, 2.0), Chart.XPROJ)
        np.testing.assert_allclose(point.coords, (0.25, 0.25, 0.5))

    def test_round_trips(self):
        rng = random.Random(9)
        for _ in range(100):
            point = xyz(rng.uniform(1e-3, 50), rng.uniform(-5, 5), rng.uniform(0, 50))
            for chart in (Chart.XPROJ, Chart.YPROJ_PLUS, Chart.YPROJ_MINUS):
                back = to_chart(to_chart(point, chart), Chart.XYZ)
                np.testing.assert_allclose(back.coords, point.coords, rtol=1e-12, atol=1e-12)

    def test_wchart_from_xproj(self):
        point = to_chart(ChartPoint(Chart.XPROJ, (0.5, 0.2, 0.4)), Chart.WCHART)
        np.testing.assert_allclose(point.coords, (0.2, 0.2))

    def test_division_by_zero_signaled(self):
        with self.assertRaises(ChartError):
            to_chart(xyz(0.0, 1.0, 1.0), Chart.XPROJ)
        with self.assertRaises(ChartError):
            to_chart(xyz(1.0, 0.0, 1.0), Chart.YPROJ_PLUS)

    def test_sign_constraints(self):
        with self.assertRaises(ChartError):
            xyz(-1e-6, 0.0, 0.0)
        xyz(-1e-13, 0.0, 0.0)

    def test_s_is_carried_as_label(self):
        point = to_chart(xyz(2.0, 1.0, 1.0, s=3.5), Chart.XPROJ)
        self.assertEqual(point.s, 3.5)


class AuxiliaryCurvesTest(SimpleTestCase):
    def test_iso_curve_is_invariant_at_sobolev_exponent(self):
        params = make_params(sigma=0.0, p=14 / 3)
        for Y in np.linspace(-1.4, -0.1, 14):
            Z = iso_curve_z(Y, params)
            F = vf(ChartPoint(Chart.PLANE_X0, (Y, Z)), params)
            normal = np.array([(5 + 0.0) / 3 * (2 * 2 * Y + 3), 1.0])
            self.assertLess(abs(normal @ F), 1e-12)

    def test_p3_plane_flow_vanishes_at_p3(self):
        params = make_params()
        info = point_by_id(params, PointId.P3)
        self.assertAlmostEqual(p3_plane_flow(info.coords, params), 0.0, places=12)
        X3 = info.coords.coords[0]
        self.assertGreater(p3_plane_flow((X3 + 1, 2.0, 0.0), params), 0.0)
