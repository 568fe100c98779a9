import math
from unittest import mock

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from integrate.solver import Controls, EventKind, StopReason, Trajectory, integrate
from params.exponents import Params, constant_profile_value, exponent_table
from phasespace.charts import Chart
from phasespace.fields import system, vf
from phasespace.points import PointId, kappa, p3_coordinates, point_by_id
from manifolds.r0 import R0NotFound, tail_window, trace_r0
from manifolds.seeds import (
    C_of_amplitude,
    ManifoldExpansion,
    SeedOrder,
    amplitude_of_C,
    q1_center_y,
    q5_directions,
    seed_p0,
    seed_p3,
    seed_q1_prime,
    seed_q5,
    seed_q5_prime,
    unstable_expansion,
)


def make_params(m=2.0, N=5, p=2.1, sigma=0.0):
    return Params(m=m, N=N, p=p, sigma=sigma)


def invariance_defect(params, X, Y, e=None):
    """Flow defect of the second-order graph of the P0 unstable manifold at (X, Y)."""
    e = e or unstable_expansion(params)
    s = params.N + params.sigma
    Z = s * (X / params.N - Y) + e.quadratic(X, Y)
    rhs, _ = system(Chart.XYZ, params)
    dX, dY, dZ = rhs(0.0, np.array([X, Y, Z]))
    hX = s / params.N + 2 * e.a * X + e.b * Y
    hY = -s + e.b * X + 2 * e.c * Y
    return dZ - hX * dX - hY * dY


class UnstableExpansionTest(SimpleTestCase):
    def test_plane_identity(self):
        for sigma in (0.0, 0.1, 0.5, 2.0):
            params = make_params(sigma=sigma)
            e = unstable_expansion(params)
            N = params.N
            p_F = exponent_table(params).p_F
            expected = (N + sigma) * (params.p - p_F) / (N * (N + 2) * (sigma + 2))
            self.assertAlmostEqual(e.a + e.b / N + e.c / N ** 2, expected, places=12)

    def test_reference_value(self):
        e = unstable_expansion(make_params(sigma=0.1))
        self.assertAlmostEqual(e.a + e.b / 5 + e.c / 25, -0.0222041, places=6)

    def test_sigma_zero_has_no_pure_x_term(self):
        self.assertEqual(unstable_expansion(make_params()).a, 0.0)

    def test_graph_is_invariant_to_second_order(self):
        params = make_params(sigma=0.7, p=3.0)
        big = invariance_defect(params, 1e-3, 3e-4)
        small = invariance_defect(params, 5e-4, 1.5e-4)
        self.assertGreater(abs(big), 0.0)
        self.assertLess(abs(small / big), 0.16)
        self.assertGreater(abs(small / big), 0.09)

    def test_closed_form_through_A_is_not_invariant(self):
        params = make_params(sigma=0.7, p=3.0)
        N, p, s = params.N, params.p, params.sigma
        A = (-(N * N + 3 * N * s + 4 * N + 2 * s + 4) * (p - exponent_table(params).p_F)
             + (s + 2) * (N + 2) * (N + 2 * s + 2) / N)
        b = -(N + s) * A / (N * (s + 2) * (N + s + 2) * (N + 2 * s + 2))
        closed = ManifoldExpansion(a=s * b / (N * (N + 2)), b=b, c=unstable_expansion(params).c)
        self.assertGreater(abs(unstable_expansion(params).b - b), 0.1)
        big = invariance_defect(params, 1e-3, 3e-4, closed)
        small = invariance_defect(params, 5e-4, 1.5e-4, closed)
        self.assertGreater(abs(small / big), 0.2)


class SeedP0Test(SimpleTestCase):
    def test_reference_seeds(self):
        params = make_params()
        np.testing.assert_allclose(seed_p0(1.0, 1e-4, params).point.coords, (1e-4, 0.0, 1e-4), atol=1e-18)
        self.assertAlmostEqual(seed_p0(2.0, 1e-4, params).point.coords[1], -2e-5, places=15)
        X, Y, Z = seed_p0(0.0, 1e-4, params).point.coords
        self.assertEqual(Z, 0.0)
        self.assertAlmostEqual(Y, 1e-4 / 5, places=16)

    def test_second_order_keeps_z_zero_plane(self):
        seed = seed_p0(0.0, 1e-4, make_params(sigma=0.3), order=SeedOrder.SECOND)
        self.assertEqual(seed.point.coords[2], 0.0)

    def test_second_order_correction_is_quadratic(self):
        params = make_params(sigma=0.3)
        first = seed_p0(1.0, 1e-4, params).point.coords
        second = seed_p0(1.0, 1e-4, params, order=SeedOrder.SECOND).point.coords
        self.assertLess(abs(first[2] - second[2]), 1e-7)
        self.assertEqual(first[:2], second[:2])

    def test_infinite_seed_lies_in_x_zero_plane(self):
        params = make_params(sigma=0.1)
        for order in SeedOrder:
            seed = seed_p0(None, 1e-5, params, order=order, infinite=True)
            X, Y, Z = seed.point.coords
            self.assertEqual(X, 0.0)
            self.assertEqual(Z, 1e-5)
            self.assertLess(Y, 0.0)
            self.assertTrue(seed.infinite)

    def test_deep_z_seed_rescaled(self):
        params = make_params(N=3, p=3.0, sigma=-1.0)
        seed = seed_p0(100.0, 1e-4, params)
        X, _, Z = seed.point.coords
        self.assertAlmostEqual(Z, 1e-2, places=15)
        self.assertAlmostEqual(Z, 100.0 * X ** 0.5, places=12)

    def test_validation(self):
        with self.assertRaises(ValidationError):
            seed_p0(1.0, 0.1, make_params())
        with self.assertRaises(ValidationError):
            seed_p0(-1.0, 1e-4, make_params())


class AmplitudeTest(SimpleTestCase):
    def test_sigma_zero_reference(self):
        params = make_params()
        self.assertAlmostEqual(amplitude_of_C(1.1, params), 1.0, places=12)
        self.assertAlmostEqual(amplitude_of_C(1.0, params), constant_profile_value(params), places=12)

    def test_inverse(self):
        params = make_params(sigma=0.4)
        for C in (1e-3, 0.5, 7.0):
            self.assertAlmostEqual(C_of_amplitude(amplitude_of_C(C, params), params) / C, 1.0, places=12)

    def test_monotone_and_vanishing(self):
        params = make_params(sigma=0.4)
        values = [amplitude_of_C(C, params) for C in (1e-8, 1e-4, 1.0, 10.0)]
        self.assertEqual(values, sorted(values))
        self.assertLess(values[0], 1e-6)

    def test_rejects_negative_sigma(self):
        with self.assertRaises(ValidationError):
            amplitude_of_C(1.0, make_params(N=3, p=3.0, sigma=-1.0))


class OtherSeedsTest(SimpleTestCase):
    def test_p3_seed_leaves_upwards(self):
        params = make_params(sigma=0.1)
        seed = seed_p3(1e-5, params)
        self.assertGreater(seed.point.coords[2], 0.0)
        self.assertGreater(vf(seed.point, params)[2], 0.0)
        distance = np.linalg.norm(seed.point.array - np.array(p3_coordinates(params)))
        self.assertAlmostEqual(distance, 1e-5, places=15)

    def test_q5_direction_matches_eigenvector(self):
        params = make_params(sigma=0.1)
        e1, _ = q5_directions(params)
        numeric = np.real(point_by_id(params, PointId.Q5).eigenvector_for((params.m - 1) * params.k))
        self.assertAlmostEqual(abs(float(np.dot(e1, numeric))), 1.0, places=10)
        m, N, p, sigma = params.m, params.N, params.p, params.sigma
        without_m = np.array([1.0, (sigma + 2 - N * (p - m)) / (p - m), 0.0])
        without_m /= np.linalg.norm(without_m)
        self.assertLess(abs(float(np.dot(without_m, numeric))), 0.999)

    def test_q5_limits(self):
        params = make_params(sigma=0.1)
        top = seed_q5(math.pi / 2, 1e-4, params).point.coords
        self.assertAlmostEqual(top[0], 0.0, places=18)
        self.assertAlmostEqual(top[2], 1e-4, places=18)
        flat = seed_q5(0.0, 1e-4, params).point
        self.assertEqual(flat.coords[2], 0.0)
        self.assertEqual(flat.chart, Chart.XPROJ)
        self.assertGreater(flat.coords[0], 0.0)
        with self.assertRaises(ValidationError):
            seed_q5(2.0, 1e-4, params)

    def test_q5_prime_seed_leaves_q5_prime(self):
        params = make_params(sigma=0.1)
        seed = seed_q5_prime(1e-4, params)
        y, w = seed.point.coords
        self.assertGreater(w, 0.0)
        self.assertLess(y, params.k)
        dy, dw = vf(seed.point, params)
        self.assertGreater(dw, 0.0)
        self.assertLess(dy, 0.0)

    def test_q1_prime_seed_on_center_manifold(self):
        params = make_params(sigma=0.1)
        y, w = seed_q1_prime(1e-3, params).point.coords
        self.assertAlmostEqual(w, params.k * 1e-3 - 3.1e-6, places=15)

    def test_q1_center_manifold(self):
        params = make_params(sigma=0.1)
        self.assertEqual(q1_center_y(0.0, 0.3, params), 0.0)
        x = 1e-9
        self.assertAlmostEqual(q1_center_y(x, 0.0, params) / x, -(2.1 / 0.1), places=3)

    def test_q1_center_manifold_is_invariant_to_second_order(self):
        params = make_params(sigma=0.7, p=3.0)
        rhs, _ = system(Chart.XPROJ, params)
        m, N, p, sigma, k = params.m, params.N, params.p, params.sigma, params.k
        A = (sigma + 2) * (m * (N + sigma) - p * (N - 2)) / (p - m) ** 2
        self.assertAlmostEqual(A, (m + (2 - N) * k) / k ** 2, places=10)

        def defect(x, z):
            dx, dy, dz = rhs(0.0, np.array([x, q1_center_y(x, z, params), z]))
            return dy - (-1 + 2 * A * x + z) / k * dx - x / k * dz

        big = defect(1e-3, 2e-3)
        small = defect(5e-4, 1e-3)
        self.assertGreater(abs(big), 0.0)
        self.assertLess(abs(small / big), 0.16)
        self.assertGreater(abs(small / big), 0.09)


class InvariantOrbitsTest(SimpleTestCase):
    def test_l0_stays_in_plane_and_reaches_p3(self):
        params = make_params(sigma=0.1)
        controls = Controls.from_settings(s_max=60.0)
        traj = integrate(seed_p0(0.0, 1e-5, params), params, controls)
        self.assertTrue(np.all(traj.states[:, 2] == 0.0))
        np.testing.assert_allclose(traj.states[-1], p3_coordinates(params), atol=1e-6)

    def test_l_infinity_reaches_q3(self):
        params = make_params(sigma=0.1)
        traj = integrate(seed_p0(None, 1e-5, params, infinite=True), params)
        Y = traj.states[:, 1]
        self.assertTrue(np.all(traj.states[:, 0] == 0.0))
        self.assertTrue(np.all(np.diff(Y) < 0))
        self.assertTrue(traj.has_event(EventKind.NO_RETURN))
        self.assertEqual(traj.stop, StopReason.Y_FLOOR)


def kappa_orbit(params, x_max, x_depart=None, offset=5.0):
    X = np.geomspace(1.0, x_max, 300)
    gap = offset / X
    if x_depart is not None:
        gap = gap + np.where(X > x_depart, 0.1 * (X / x_depart - 1), 0.0)
    states = np.column_stack([X, np.zeros_like(X), X * (kappa(params) + gap)])
    return Trajectory(Chart.XYZ, np.log(X), states, (), StopReason.RADIUS, params, {})


class TraceR0Test(SimpleTestCase):
    def test_sigma_zero_line(self):
        params = make_params()
        traj = trace_r0(params)
        states = traj.states
        self.assertLess(np.max(np.abs(states[:, 1])), 1e-12)
        self.assertLess(np.max(np.abs(states[:, 0] - states[:, 2]) / states[:, 0]), 1e-10)
        self.assertEqual(traj.meta['C'], 1.0)
        self.assertAlmostEqual(amplitude_of_C(traj.meta['C'], params), 0.9170, places=4)

    def test_rejects_negative_sigma(self):
        with self.assertRaises(ValidationError):
            trace_r0(make_params(N=3, p=3.0, sigma=-1.0))

    def test_no_bracket(self):
        params = make_params(sigma=0.1)
        with self.assertRaises(R0NotFound) as ctx:
            trace_r0(params, c_grid=[1e5, 1e6])
        self.assertEqual(set(ctx.exception.seen.values()), {1})

    def test_tail_window_starts_inside_the_tolerance(self):
        params = make_params(sigma=0.1)
        traj = kappa_orbit(params, 1e8, x_depart=1e7)
        start, end = tail_window(traj, params, 1e3, 1e-3)
        X = traj.states[:, 0]
        self.assertGreater(X[start], 5e3)
        self.assertLess(X[start - 1], 5e3)
        self.assertGreater(X[end], 1e7)
        self.assertLess(X[end - 1], 1e7)
        self.assertIsNone(tail_window(kappa_orbit(params, 1e3), params, 1e3, 1e-3))

    @mock.patch('manifolds.r0.r0_side', side_effect=lambda traj, params, x_track: 1 if traj.meta['C'] > 2 else -1)
    def test_short_tail_is_extended(self, _side):
        params = make_params(sigma=0.1)
        radii = []

        def run(seed, params, controls):
            radii.append(controls.radius_max)
            x_max = 1e8 if controls.radius_max > 1e6 else 1e3
            return kappa_orbit(params, x_max, x_depart=1e7).with_meta(C=seed.meta['C'])

        with mock.patch('manifolds.r0.integrate', side_effect=run), \
                mock.patch('manifolds.r0.seed_p0', side_effect=lambda C, eps, params: mock.Mock(meta={'C': C})):
            traj = trace_r0(params, c_grid=[1.0, 4.0], rel_tol=1e-3, controls=Controls(radius_max=1e6))
        self.assertEqual(radii[-1], 1e8)
        self.assertTrue(traj.meta['tail_ok'])
        self.assertLess(traj.meta['tail_deviation'], 1e-3)
        self.assertLess(traj.states[-1, 0], 1e7)

    @tag('slow')
    def test_small_sigma_tail_reaches_kappa(self):
        params = make_params(sigma=0.1)
        traj = trace_r0(params, tolerance=1e-3)
        self.assertTrue(traj.meta['tail_ok'])
        X, _, Z = traj.states[-1]
        self.assertLess(abs(Z / X - kappa(params)), 1e-3)
