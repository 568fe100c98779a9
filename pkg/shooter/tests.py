import math
from dataclasses import replace
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings, tag

from analyze.oscillations import OscillationCount
from analyze.terminal import Fate, TerminalInfo
from integrate.solver import Controls, Event, EventKind, IntegrationError, StopReason, Trajectory
from params.exponents import Params, exponent_table
from phasespace.charts import Chart

from shooter.outcomes import Family, ShotOutcome, minima_before_no_return, q1_signature
from shooter.search import (
    NoBracket,
    TangencyFlag,
    default_grid,
    find_connection,
    find_deadcore,
    find_negative_sigma,
    shoot,
    sweep,
)


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


def fake_outcome(family, value, minima=0, tangent=False, fate=Fate.Q3, y_max=-1.0):
    return ShotOutcome(
        family=Family(family), value=float(value), count=OscillationCount(minima + 1, minima),
        terminal=TerminalInfo(fate), minima=minima, tangent=tangent, y_max=y_max,
    )


def approach_orbit(params, minimum_at=None):
    """Orbit following the approach to Q1 up to X = 2e4, then turning up through Y = 0."""
    X = np.geomspace(10.0, 1e5, 400)
    Y = np.minimum(params.no_return_level + 333.0 / (params.k * X), 0.0)
    Y = Y + 5.0 * np.clip((X - 2e4) / 1e4, 0.0, None) ** 2
    s = np.log(X) / 23.0
    events = [Event(EventKind.Y_ZERO_UP, float(s[-1]) - 0.01, (0.0, 0.0, 1.0), 1.0)]
    if minimum_at is not None:
        events.insert(0, Event(EventKind.Y_ZERO_UP, minimum_at, (0.0, 0.0, 1.0), 1.0))
    states = np.column_stack([X, Y, np.ones_like(X)])
    return Trajectory(Chart.XYZ, s, states, tuple(events), StopReason.RADIUS, params)


def staircase(boundary=2.5, tangent_range=None):
    """Fake shot: one minimum below ``boundary``, none above."""
    def shot(params, family, value, *args, **kwargs):
        tangent = tangent_range is not None and tangent_range[0] < value < tangent_range[1]
        return fake_outcome(family, value, minima=1 if value < boundary else 0, tangent=tangent)
    return shot


class ShootTest(SimpleTestCase):
    def test_large_c_enters_q3_without_minima(self):
        outcome = shoot(make_params(), Family.P0_C, 1e6)
        self.assertTrue(outcome.ok)
        self.assertEqual(outcome.terminal.fate, Fate.Q3)
        self.assertEqual(outcome.minima, 0)
        self.assertEqual(outcome.count.n_min, 0)
        self.assertIsNone(outcome.trajectory)

    def test_keep_trajectory(self):
        outcome = shoot(make_params(), Family.P0_C, 1e6, keep_trajectory=True)
        self.assertGreater(len(outcome.trajectory), 10)
        self.assertEqual(outcome.seed['origin'], 'P0')

    def test_p3_family_replaces_p(self):
        outcome = shoot(make_params(), Family.P3_P, 2.5)
        self.assertEqual(outcome.value, 2.5)
        self.assertEqual(outcome.seed['origin'], 'P3')
        self.assertEqual(outcome.family, Family.P3_P)

    def test_invalid_parameters(self):
        with self.assertRaises(ValidationError):
            shoot(make_params(p=1.5), Family.P0_C, 1.0)
        with self.assertRaises(ValidationError):
            shoot(make_params(), Family.Q5_THETA, 3.0)


class SweepTest(SimpleTestCase):
    def test_serial_sweep_keeps_grid_order(self):
        grid = [1e4, 1e5, 1e6]
        outcomes = sweep(make_params(), Family.P0_C, grid, workers=1)
        self.assertEqual([o.value for o in outcomes], grid)
        for outcome in outcomes:
            self.assertEqual(outcome.as_row(), [outcome.value, outcome.count.n_max, 0, 'Q3CompactSupport'])

    def test_failures_are_recorded(self):
        with mock.patch('shooter.search.shoot', side_effect=IntegrationError('stiff')):
            outcomes = sweep(make_params(), Family.P0_C, [1.0, 2.0], workers=1)
        self.assertEqual([o.error for o in outcomes], ['stiff', 'stiff'])
        self.assertEqual(outcomes[0].as_row(), [1.0, -1, -1, 'Error'])

    def test_grid_must_be_sorted(self):
        with self.assertRaises(ValidationError):
            sweep(make_params(), Family.P0_C, [2.0, 1.0], workers=1)
        with self.assertRaises(ValidationError):
            sweep(make_params(), Family.P0_C, [], workers=1)

    def test_workers_default_to_threads_setting(self):
        blowup = {**settings.BLOWUP, 'THREADS': 1}
        with override_settings(BLOWUP=blowup), mock.patch('shooter.search.shoot', side_effect=staircase()):
            outcomes = sweep(make_params(), Family.P0_C, [1.0, 3.0])
        self.assertEqual([o.minima for o in outcomes], [1, 0])

    @tag('slow')
    def test_process_pool_matches_serial(self):
        grid = [1e4, 1e5, 1e6]
        pooled = sweep(make_params(), Family.P0_C, grid, workers=2)
        serial = sweep(make_params(), Family.P0_C, grid, workers=1)
        self.assertEqual([o.as_row() for o in pooled], [o.as_row() for o in serial])

    @tag('slow')
    def test_non_existence_range(self):
        grid = list(np.geomspace(1e-3, 1e3, 13))
        outcomes = sweep(make_params(sigma=1.0), Family.P0_C, grid)
        self.assertTrue(all(o.terminal.fate == Fate.Q3 for o in outcomes))

    @tag('slow')
    def test_mixed_oscillations_below_threshold(self):
        grid = list(np.geomspace(1e-3, 1e3, 25))
        outcomes = sweep(make_params(sigma=0.5), Family.P0_C, grid)
        minima = {o.minima for o in outcomes if o.ok}
        self.assertIn(0, minima)
        self.assertTrue(any(value >= 1 for value in minima))


class DefaultGridTest(SimpleTestCase):
    def test_orderings(self):
        params = make_params()
        c_grid = default_grid(params, Family.P0_C, points=5)
        self.assertAlmostEqual(c_grid[0], settings.BLOWUP['BRACKET_C_MAX'])
        self.assertAlmostEqual(c_grid[-1], settings.BLOWUP['BRACKET_C_MIN'])
        self.assertEqual(c_grid, sorted(c_grid, reverse=True))
        theta = default_grid(params, Family.Q5_THETA, points=5)
        self.assertLess(theta[0], math.pi / 2)
        self.assertGreater(theta[-1], 0.0)
        p_grid = default_grid(params, Family.P3_P, points=5)
        self.assertLess(p_grid[0], exponent_table(params).p_s)
        self.assertGreater(p_grid[-1], params.m)


class OutcomeHelpersTest(SimpleTestCase):
    def test_signature_of_an_orbit_near_q1(self):
        params = make_params()
        orbit = approach_orbit(params)
        self.assertTrue(q1_signature(orbit, params))
        early = Trajectory(Chart.XYZ, orbit.s[:100], orbit.states[:100], (), StopReason.S_MAX, params)
        self.assertFalse(q1_signature(early, params))

    def test_minima_limited_to_the_approach(self):
        traj = approach_orbit(make_params(), minimum_at=0.1)
        self.assertEqual(minima_before_no_return(traj), (2, False))
        self.assertEqual(minima_before_no_return(traj, s_limit=0.3), (1, False))


class BisectionTest(SimpleTestCase):
    def test_boundary_located(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase()), \
                mock.patch('shooter.search.q1_signature', return_value=True):
            result = find_connection(make_params(), k=0, bracket=(1.0, 10.0), tol=1e-12)
        self.assertAlmostEqual(result.parameter_star / 2.5, 1.0, places=10)
        good, bad = result.bracket
        self.assertLess(good, 2.5)
        self.assertGreaterEqual(bad, 2.5)
        self.assertLessEqual(abs(bad - good), 1e-12 * bad)
        self.assertEqual(result.oscillations, 0)
        self.assertTrue(result.q1_signature)
        self.assertEqual(result.as_dict()['family'], 'P0_C')

    def test_scan_from_large_c(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase()), \
                mock.patch('shooter.search.q1_signature', return_value=True):
            result = find_connection(make_params(), k=0, tol=1e-10)
        self.assertAlmostEqual(result.parameter_star / 2.5, 1.0, places=8)

    def test_missing_approach_to_q1_is_an_error(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase()), \
                mock.patch('shooter.search.q1_signature', return_value=False):
            with self.assertRaises(NoBracket) as ctx:
                find_connection(make_params(), k=0, bracket=(1.0, 10.0), tol=1e-10)
        self.assertIn('no approach to Q1', str(ctx.exception))

    def test_narrow_window_found_by_rescan(self):
        def shot(params, family, value, *args, **kwargs):
            if value < 1.0:
                return fake_outcome(family, value, fate=Fate.P3)
            return fake_outcome(family, value, minima=1 if value < 1.02 else 0)

        with mock.patch('shooter.search.shoot', side_effect=shot), \
                mock.patch('shooter.search.q1_signature', return_value=True):
            result = find_connection(make_params(), k=0, tol=1e-12)
        self.assertAlmostEqual(result.parameter_star, 1.02, places=9)
        self.assertEqual(result.fate_at_bracket_ends[0].fate, Fate.Q3)

    def test_midpoint_minima_stop_at_the_departure_from_q1(self):
        params = make_params()

        def shot(params, family, value, *args, keep_trajectory=False, **kwargs):
            outcome = fake_outcome(family, value, minima=1 if value < 2.5 else 0)
            if keep_trajectory:
                return replace(outcome, minima=1, trajectory=approach_orbit(params))
            return outcome

        with mock.patch('shooter.search.shoot', side_effect=shot):
            result = find_connection(params, k=0, bracket=(1.0, 10.0), tol=1e-12)
        self.assertTrue(result.q1_signature)
        self.assertEqual(result.midpoint.minima, 0)

    def test_reproducible(self):
        runs = []
        for _ in range(2):
            with mock.patch('shooter.search.shoot', side_effect=staircase(boundary=0.7)), \
                    mock.patch('shooter.search.q1_signature', return_value=True):
                runs.append(find_deadcore(make_params(), k=0, bracket=(0.1, 1.5)).parameter_star)
        self.assertEqual(runs[0], runs[1])
        self.assertAlmostEqual(runs[0], 0.7, places=10)

    def test_requested_count_unavailable(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase()):
            with self.assertRaises(NoBracket) as ctx:
                find_connection(make_params(), k=3, bracket=(1.0, 10.0))
        self.assertEqual(set(ctx.exception.seen.values()), {-1})

    def test_constant_indicator_over_grid(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase(boundary=0.0)):
            with self.assertRaises(NoBracket):
                find_connection(make_params(), k=0)

    def test_tangency_invalidates_bracket(self):
        with mock.patch('shooter.search.shoot', side_effect=staircase(tangent_range=(1.5, 3.5))):
            with self.assertRaises(TangencyFlag) as ctx:
                find_connection(make_params(), k=0, bracket=(1.0, 10.0))
        self.assertAlmostEqual(ctx.exception.value, math.sqrt(10.0))

    def test_argument_checks(self):
        with self.assertRaises(ValidationError):
            find_connection(make_params(), k=-1)
        with self.assertRaises(ValidationError):
            find_connection(make_params(N=3, p=3.0, sigma=-1.0))
        with self.assertRaises(ValidationError):
            find_negative_sigma(make_params())
        with self.assertRaises(ValidationError):
            find_negative_sigma(make_params(N=3, p=7.0, sigma=-1.0))

    def test_unresolved_orbits_are_skipped(self):
        unresolved = []

        def shot(params, family, value, *args, **kwargs):
            if value < 0.05:
                return fake_outcome(family, value, fate=Fate.UNRESOLVED, y_max=0.3)
            if 1.0 < value < 3.0:
                unresolved.append(value)
                return fake_outcome(family, value, fate=Fate.UNRESOLVED, y_max=-0.01)
            return fake_outcome(family, value, fate=Fate.Q3, y_max=-0.01)

        with mock.patch('shooter.search.shoot', side_effect=shot), \
                mock.patch('shooter.search.q1_signature', return_value=True):
            result = find_negative_sigma(make_params(N=3, p=3.0, sigma=-1.0), tol=1e-9)
        self.assertAlmostEqual(result.parameter_star / 0.05, 1.0, places=7)
        self.assertNotEqual(result.bracket[0], result.bracket[1])
        self.assertTrue(unresolved)

    def test_negative_sigma_indicator(self):
        def shot(params, family, value, *args, **kwargs):
            if value < 0.05:
                return fake_outcome(family, value, fate=Fate.UNRESOLVED, y_max=0.3)
            return fake_outcome(family, value, fate=Fate.Q3, y_max=-0.01)

        with mock.patch('shooter.search.shoot', side_effect=shot), \
                mock.patch('shooter.search.q1_signature', return_value=True):
            result = find_negative_sigma(make_params(N=3, p=3.0, sigma=-1.0), tol=1e-9)
        self.assertAlmostEqual(result.parameter_star / 0.05, 1.0, places=7)
        self.assertEqual(result.fate_at_bracket_ends[1].fate, Fate.Q3)


class ConnectionSearchTest(SimpleTestCase):
    @tag('slow')
    def test_single_maximum_profile(self):
        params = make_params()
        result = find_connection(params, k=0, tol=1e-10)
        self.assertEqual(result.oscillations, 0)
        self.assertEqual(result.fate_at_bracket_ends[1].fate, Fate.Q3)
        self.assertEqual(result.midpoint.minima, 0)

    @tag('slow')
    def test_two_profiles_in_multiplicity_range(self):
        params = make_params(sigma=0.0, p=2.8)
        first = find_connection(params, k=0, tol=1e-10)
        second = find_connection(params, k=1, tol=1e-10)
        self.assertLess(second.parameter_star, first.parameter_star)

    @tag('slow')
    def test_tightened_tolerances_move_little(self):
        params = make_params()
        base = find_connection(params, k=0, tol=1e-10)
        tight = find_connection(params, k=0, tol=1e-10, controls=Controls.from_settings().tightened())
        self.assertLess(abs(tight.parameter_star - base.parameter_star), 1e-9 * base.parameter_star)
