import math
import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from analyze.terminal import q1_approach
from integrate.solver import Controls, StopReason, Trajectory, integrate, integrate_q5
from manifolds.r0 import trace_r0
from manifolds.seeds import amplitude_of_C, seed_p0, seed_p3, seed_q5
from params.exponents import Params, constant_profile_value, derive, q_value, sobolev_exponent
from phasespace.charts import Chart, ChartPoint
from shooter.search import find_connection, find_deadcore, find_negative_sigma

from profiles.asymptotics import Law, WindowTooShort, contact_derivative, expected_law, fit_asymptotics
from profiles.nonexistence import Criterion, nonexistence_predicate
from profiles.pohozaev import coefficients, pohozaev
from profiles.reconstruct import (
    Anchor, Profile, ReconstructionError, connection_profile, continue_q1_tail, q1_slow_orbit, q1_tail_end, reconstruct,
)
from profiles.residuals import GridTooCoarse, iso_curve_defect, ode_residual, stationary_residual


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


def make_profile(xi, f, fprime, params, **kwargs):
    return Profile(np.asarray(xi, dtype=float), np.asarray(f, dtype=float), np.asarray(fprime, dtype=float),
                   params, **kwargs)


def power_profile(params, exponent, prefactor=1.0, lo=1.0, hi=10.0, points=2001):
    xi = np.geomspace(lo, hi, points)
    f = prefactor * xi ** exponent
    return make_profile(xi, f, exponent * f / xi, params)


class ReconstructTest(SimpleTestCase):
    def test_constant_profile_from_r0_line(self):
        params = make_params(sigma=0.0)
        profile = reconstruct(trace_r0(params), params)
        self.assertEqual(profile.meta['anchor'], Anchor.CONSISTENCY)
        expected = constant_profile_value(params)
        self.assertAlmostEqual(expected, (1 / 1.1) ** (1 / 1.1), places=12)
        self.assertAlmostEqual(expected, 0.9170, places=4)
        np.testing.assert_allclose(profile.f, expected, rtol=1e-10)
        np.testing.assert_allclose(profile.fprime, 0.0, atol=1e-12)

    def test_round_trip_along_p0_orbit(self):
        params = make_params()
        traj = integrate(seed_p0(10.0, 1e-5, params), params)
        profile = reconstruct(traj, params)
        self.assertLess(profile.meta['cross_check'], 1e-6)
        self.assertLess(profile.meta['gauge_defect'], 1e-6)
        coords = profile.phase_coordinates()
        states = traj.xyz()
        np.testing.assert_allclose(coords[:, 2], states[:, 2], rtol=1e-6)
        self.assertTrue(np.all(profile.f > 0))
        self.assertTrue(np.all(np.diff(profile.xi) > 0))

    def test_amplitude_anchor(self):
        params = make_params()
        traj = integrate(seed_p0(10.0, 1e-5, params), params)
        profile = reconstruct(traj, params, anchor=Anchor.AMPLITUDE)
        self.assertAlmostEqual(profile.f[0] / amplitude_of_C(10.0, params), 1.0, places=12)
        self.assertEqual(profile.amplitude, amplitude_of_C(10.0, params))

    def test_gauge_rescales_profile(self):
        params = make_params(m=2.0)
        traj = integrate(seed_p0(10.0, 1e-5, params), params)
        one = reconstruct(traj, params, anchor=Anchor.XI_REF, xi_ref=1.0)
        two = reconstruct(traj, params, anchor=Anchor.XI_REF, xi_ref=2.0)
        np.testing.assert_allclose(two.xi / one.xi, 2.0, rtol=1e-12)
        np.testing.assert_allclose(two.f / one.f, 4.0, rtol=1e-12)
        np.testing.assert_allclose(two.phase_coordinates()[:, :2], one.phase_coordinates()[:, :2], rtol=1e-10)

    def test_resampled_grid_is_geometric(self):
        params = make_params()
        traj = integrate(seed_p0(10.0, 1e-5, params), params)
        profile = reconstruct(traj, params, points=500)
        self.assertEqual(len(profile), 500)
        ratios = profile.xi[1:] / profile.xi[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)

    def test_vanishing_x_rejected(self):
        params = make_params()
        states = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
        traj = Trajectory(Chart.XYZ, np.arange(3.0), states, (), StopReason.S_MAX, params)
        with self.assertRaises(ReconstructionError):
            reconstruct(traj, params)

    def test_missing_seed_for_amplitude(self):
        params = make_params()
        states = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 2.0]])
        traj = Trajectory(Chart.XYZ, np.arange(2.0), states, (), StopReason.S_MAX, params)
        with self.assertRaises(ReconstructionError):
            reconstruct(traj, params, anchor=Anchor.AMPLITUDE)

    def test_p3_orbit_near_origin(self):
        params = make_params()
        traj = integrate(seed_p3(1e-6, params), params)
        profile = reconstruct(traj, params)
        fit = fit_asymptotics(profile, Law.ORIGIN_P3)
        self.assertAlmostEqual(fit.exponent_fit, 2.0, delta=1e-2)
        self.assertAlmostEqual(fit.prefactor_fit / fit.expected_prefactor, 1.0, delta=2e-2)

    def test_csv_round_trip(self):
        params = make_params()
        profile = power_profile(params, -21.0, points=11)
        with tempfile.TemporaryDirectory() as tmp:
            path = profile.to_csv(Path(tmp) / 'profile.csv')
            self.assertEqual(path.read_text().splitlines()[-12], 'xi,f,fprime')
            loaded = Profile.from_csv(path)
        np.testing.assert_array_equal(loaded.f, profile.f)
        self.assertEqual(loaded.params, params)

    @tag('slow')
    def test_tail_continuation_reproduces_the_slow_orbit(self):
        params = make_params()
        slow = q1_slow_orbit(params, 1e9, 1e3, 1.0)
        start = ChartPoint(Chart.XYZ, slow.y_events[0][0])
        traj = integrate(start, params, Controls.from_settings(s_max=20.0))
        approach = q1_approach(traj, params)
        self.assertEqual(approach.start, 0)
        self.assertEqual(q1_tail_end(traj, params), approach.s_end)
        glued = continue_q1_tail(traj, params, approach)
        tail = glued.meta['q1_tail']
        self.assertLess(tail['tail_gap'], 1e-6)
        self.assertGreater(tail['match_X'], 1e3)
        self.assertTrue(np.all(np.diff(glued.s) > 0))
        self.assertAlmostEqual(glued.states[-1, 0] / 1e9, 1.0, places=8)
        self.assertAlmostEqual(glued.states[-1, 2], 1.0, places=6)
        np.testing.assert_allclose(glued.resample(glued.s[::97]), glued.states[::97], rtol=1e-7)
        profile = reconstruct(glued, params, points=4000)
        fit = fit_asymptotics(profile, Law.TAIL_Q1)
        self.assertGreater(profile.phase_coordinates()[:, 0].max(), 1e8)
        self.assertLess(fit.exponent_error, 5e-3)

    def test_orbit_without_approach_cannot_be_continued(self):
        params = make_params()
        traj = integrate(seed_p0(10.0, 1e-5, params), params, Controls.from_settings(s_max=2.0))
        with self.assertRaises(ReconstructionError):
            continue_q1_tail(traj, params)

    @tag('slow')
    def test_deadcore_orbit(self):
        params = make_params()
        traj = integrate_q5(seed_q5(0.5, 1e-4, params), params)
        profile = reconstruct(traj, params)
        edge = profile.deadcore_edge
        self.assertGreater(edge, 0.0)
        self.assertTrue(np.all(profile.f[profile.xi <= edge] == 0.0))
        self.assertTrue(np.all(profile.f[profile.xi > edge][:10] > 0.0))
        m = params.m
        flux = np.abs(m * profile.f ** (m - 1) * profile.fprime)
        self.assertLess(abs(contact_derivative(profile)) / flux.max(), 1e-3)


class OdeResidualTest(SimpleTestCase):
    def constant(self, factor=1.0):
        params = make_params(sigma=0.0)
        xi = np.geomspace(0.1, 10.0, 200)
        f = np.full_like(xi, factor * constant_profile_value(params))
        return make_profile(xi, f, np.zeros_like(xi), params)

    def test_constant_profile_is_exact(self):
        self.assertLess(ode_residual(self.constant()), 1e-12)

    def test_perturbed_profile_detected(self):
        self.assertGreater(ode_residual(self.constant(1.01)), 1e-3)

    def test_pointwise_output(self):
        worst, xi, residual = ode_residual(self.constant(), pointwise=True)
        self.assertEqual(len(xi), 196)
        self.assertEqual(worst, residual.max())

    def test_sampling_noise_is_not_amplified(self):
        params = make_params(sigma=0.0)
        xi = np.geomspace(0.1, 10.0, 4000)
        noise = 1e-10 * np.random.default_rng(7).standard_normal(xi.size)
        f = constant_profile_value(params) * (1.0 + noise)
        self.assertLess(ode_residual(make_profile(xi, f, np.zeros_like(xi), params)), 1e-8)

    def test_grid_too_coarse(self):
        params = make_params()
        with self.assertRaises(GridTooCoarse):
            ode_residual(make_profile([1, 2, 3, 4], [1, 1, 1, 1], [0, 0, 0, 0], params))

    def test_reconstructed_orbit_solves_the_equation(self):
        params = make_params()
        traj = integrate(seed_p0(10.0, 1e-5, params), params)
        profile = reconstruct(traj, params, points=4000, s_range=(None, traj.s[0] + 6.0))
        self.assertLess(ode_residual(profile), 1e-6)


class StationaryTest(SimpleTestCase):
    def test_sobolev_family(self):
        params = make_params(sigma=0.0, p=14 / 3)
        self.assertLess(stationary_residual(1.0, params), 1e-8)
        params = make_params(sigma=0.5, p=sobolev_exponent(2.0, 5, 0.5))
        self.assertLess(stationary_residual(3.0, params), 1e-8)

    def test_requires_sobolev_exponent(self):
        with self.assertRaises(ValidationError):
            stationary_residual(1.0, make_params(sigma=0.0, p=14 / 3 - 0.1))
        with self.assertRaises(ValidationError):
            stationary_residual(0.0, make_params(sigma=0.0, p=14 / 3))
        with self.assertRaises(ValidationError):
            stationary_residual(1.0, make_params(N=2, sigma=0.0, p=3.0))

    def test_curve_invariant_only_at_sobolev_exponent(self):
        self.assertLess(iso_curve_defect(make_params(sigma=0.0, p=14 / 3)), 1e-12)
        self.assertGreater(iso_curve_defect(make_params(sigma=0.0, p=14 / 3 - 0.1)), 0.0)


class AsymptoticsTest(SimpleTestCase):
    def test_tail_q1_power_law(self):
        params = make_params()
        profile = power_profile(params, -21.0, prefactor=3.0, hi=1e3)
        fit = fit_asymptotics(profile, Law.TAIL_Q1)
        self.assertAlmostEqual(fit.exponent_fit, -21.0, places=8)
        self.assertAlmostEqual(fit.prefactor_fit, 3.0, places=6)
        self.assertAlmostEqual(fit.expected_exponent, -21.0, places=12)
        self.assertLess(fit.rel_err, 1e-8)
        X = profile.phase_coordinates()[:, 0]
        self.assertEqual(fit.window, (float(profile.xi[X >= 1e5][0]), 1000.0))

    def test_tail_q1_window_falls_back_to_last_decade(self):
        params = make_params()
        fit = fit_asymptotics(power_profile(params, -21.0, lo=0.1, hi=1.5), Law.TAIL_Q1)
        self.assertAlmostEqual(fit.window[0], 0.15, places=12)
        self.assertAlmostEqual(fit.exponent_fit, -21.0, places=8)

    def test_tail_qgamma(self):
        params = make_params(sigma=0.3)
        c = constant_profile_value(params)
        fit = fit_asymptotics(power_profile(params, -0.3 / 1.1, prefactor=c), Law.TAIL_QGAMMA)
        self.assertAlmostEqual(fit.exponent_fit, fit.expected_exponent, places=10)
        self.assertAlmostEqual(fit.prefactor_fit, fit.expected_prefactor, places=10)

    def test_origin_p0(self):
        params = make_params(sigma=0.5)
        coef, _ = expected_law(Law.ORIGIN_P0, params)
        xi = np.geomspace(1e-3, 1e-1, 200)
        f = (1.5 + coef * xi ** 2)
        fit = fit_asymptotics(make_profile(xi, f, 2 * coef * xi, params), Law.ORIGIN_P0)
        self.assertAlmostEqual(fit.exponent_fit / coef, 1.0, places=6)
        self.assertAlmostEqual(fit.prefactor_fit, 1.5, places=10)

    def test_origin_p0_at_zero_sigma_uses_amplitude(self):
        params = make_params(sigma=0.0)
        D = constant_profile_value(params)
        coef, amplitude = expected_law(Law.ORIGIN_P0, params, amplitude=D)
        self.assertAlmostEqual(coef, 0.0, places=12)
        self.assertEqual(amplitude, D)

    def test_origin_p0_negative_sigma(self):
        params = make_params(N=3, p=3.0, sigma=-1.0)
        coef, _ = expected_law(Law.ORIGIN_P0_NEG, params)
        xi = np.geomspace(1e-3, 1e-2, 50)
        f = (2.0 + coef * xi) ** -1.0
        fit = fit_asymptotics(make_profile(xi, f, -coef * f ** 2, params), Law.ORIGIN_P0_NEG)
        self.assertAlmostEqual(fit.exponent_fit / coef, 1.0, places=6)
        self.assertAlmostEqual(fit.prefactor_fit, 2.0, places=10)

    def test_deadcore_law(self):
        params = make_params()
        b = derive(params).beta / 4
        xi = np.concatenate([np.linspace(0.5, 1.0, 9), np.linspace(1.0005, 1.2, 100)])
        f = np.maximum(b * (xi ** 2 - 1.0), 0.0)
        profile = make_profile(xi, f, 2 * b * xi * (xi > 1.0), params, deadcore_edge=1.0)
        fit = fit_asymptotics(profile, Law.DEADCORE_Q5)
        self.assertAlmostEqual(fit.exponent_fit / fit.expected_exponent, 1.0, places=10)
        self.assertEqual(fit.prefactor_fit, 1.0)
        self.assertAlmostEqual(contact_derivative(profile), 2 * f[9] * 2 * b * xi[9], places=12)

    def test_deadcore_law_with_curvature(self):
        params = make_params()
        a = derive(params).beta / 4
        xi = np.concatenate([np.linspace(0.5, 1.0, 9), np.linspace(1.0005, 1.2, 400)])
        u = np.maximum(xi ** 2 - 1.0, 0.0)
        f = a * u * (1.0 + 3.0 * u)
        profile = make_profile(xi, f, 2 * a * xi * (1.0 + 6.0 * u), params, deadcore_edge=1.0)
        fit = fit_asymptotics(profile, Law.DEADCORE_Q5)
        self.assertAlmostEqual(fit.exponent_fit / a, 1.0, places=8)
        self.assertLess(fit.rel_err, 1e-8)

    def test_window_too_short(self):
        params = make_params()
        with self.assertRaises(WindowTooShort):
            fit_asymptotics(power_profile(params, -21.0, points=4), Law.TAIL_Q1)
        with self.assertRaises(WindowTooShort):
            fit_asymptotics(power_profile(params, -21.0), Law.DEADCORE_Q5)


class PohozaevTest(SimpleTestCase):
    def test_q_value(self):
        self.assertAlmostEqual(q_value(make_params()), -13.47, places=10)

    def test_coefficients_positive_below_sobolev(self):
        c1, c2, _ = coefficients(make_params())
        self.assertGreater(c1, 0.0)
        self.assertGreater(c2, 0.0)

    def test_power_law_integrals(self):
        params = make_params()
        profile = power_profile(params, -21.0, points=8001)
        with self.assertLogs('profiles.pohozaev', 'WARNING'):
            report = pohozaev(profile)
        self.assertTrue(report.converged)
        self.assertAlmostEqual(report.integrals['mass'] * 58.0, 1.0, places=6)
        self.assertAlmostEqual(report.integrals['gradient'] * 81.0 / 1764.0, 1.0, places=6)
        self.assertGreaterEqual(report.T2, 0.0)
        self.assertLess(report.quadrature_change, 1e-6)
        self.assertTrue(report.per_unit_solid_angle)

    def test_divergent_case_reported(self):
        params = make_params(sigma=0.0, p=3.5)
        with self.assertLogs('profiles.pohozaev', 'WARNING'):
            report = pohozaev(power_profile(params, params.no_return_level))
        self.assertFalse(report.converged)
        self.assertTrue(math.isinf(report.tail_completion['mass']))
        self.assertTrue(math.isfinite(report.residual))


class NonexistenceTest(SimpleTestCase):
    def test_large_sigma(self):
        verdict = nonexistence_predicate(make_params(sigma=12.0, p=3.0))
        self.assertTrue(verdict.verdict)
        self.assertEqual(verdict.criterion, Criterion.COMBINED)
        for p in np.linspace(2.05, 4.75, 10):
            self.assertTrue(nonexistence_predicate(make_params(sigma=12.0, p=p)).verdict)

    def test_boundary_sigma_star_included(self):
        verdict = nonexistence_predicate(make_params(N=3, sigma=8.0, p=5.0))
        self.assertTrue(verdict.verdict)
        self.assertEqual(verdict.criterion, Criterion.COMBINED)

    def test_small_sigma(self):
        verdict = nonexistence_predicate(make_params())
        self.assertFalse(verdict.verdict)
        self.assertEqual(verdict.criterion, Criterion.NONE)
        self.assertEqual(verdict.as_dict()['criterion'], 'None')

    def test_sub_criteria(self):
        pohozaev_only = nonexistence_predicate(make_params(sigma=3.0, p=2.2))
        self.assertEqual(pohozaev_only.criterion, Criterion.POHOZAEV)
        self.assertEqual(pohozaev_only.certificates, ['PohozaevRange'])
        self.assertFalse(pohozaev_only.verdict)
        barrier_only = nonexistence_predicate(make_params(sigma=3.0, p=5.0))
        self.assertEqual(barrier_only.criterion, Criterion.BARRIER)
        self.assertEqual(barrier_only.certificates, ['BarrierRange'])
        self.assertFalse(barrier_only.verdict)
        self.assertEqual(barrier_only.as_dict()['certificates'], ['BarrierRange'])
        gap = nonexistence_predicate(make_params(sigma=3.0, p=2.5))
        self.assertFalse(gap.verdict)
        self.assertEqual(set(gap.sub_criteria.values()), {False})

    def test_requires_positive_sigma(self):
        with self.assertRaises(ValidationError):
            nonexistence_predicate(make_params(sigma=0.0))


class ConnectionProfileTest(SimpleTestCase):
    @tag('slow')
    def test_single_maximum_profile(self):
        params = make_params()
        result = find_connection(params, k=0, tol=1e-10)
        profile = connection_profile(result, points=8000)
        tail = fit_asymptotics(profile, Law.TAIL_Q1)
        self.assertLess(tail.exponent_error, 0.02)
        self.assertLess(ode_residual(profile), 1e-6)
        report = pohozaev(profile, tail_fit=tail)
        self.assertTrue(report.converged)
        self.assertGreaterEqual(report.T2, 0.0)
        self.assertLess(report.relative, 1e-3)
        self.assertLess(report.quadrature_change, 1e-6)

    @tag('slow')
    def test_negative_sigma_profile(self):
        params = make_params(N=3, p=3.0, sigma=-1.0)
        result = find_negative_sigma(params, tol=1e-10)
        self.assertEqual(result.midpoint.minima, 0)
        tail = fit_asymptotics(connection_profile(result), Law.TAIL_Q1)
        self.assertAlmostEqual(tail.exponent_fit, -1.0, delta=0.02)

    @tag('slow')
    def test_deadcore_profile(self):
        params = make_params()
        result = find_deadcore(params, k=0, controls=Controls.from_settings())
        profile = reconstruct(result.midpoint.trajectory, params)
        self.assertGreater(profile.deadcore_edge, 0.0)
        fit = fit_asymptotics(profile, Law.DEADCORE_Q5)
        self.assertLess(abs(fit.exponent_fit / fit.expected_exponent - 1.0), 0.05)
