import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from integrate.solver import Event, EventKind, StopReason, Trajectory, integrate
from manifolds.r0 import trace_r0
from manifolds.seeds import seed_p0
from params.exponents import Params, exponent_table, sobolev_exponent
from phasespace.charts import Chart, xyz
from phasespace.fields import p3_plane_flow
from phasespace.points import p3_coordinates, q1_scale

from analyze.barriers import AccuracyAlarm, barrier_flows, no_return_predicate
from analyze.oscillations import CountMode, compare_counts, count_oscillations
from analyze.report import diagnostics
from analyze.surface import Side, SurfaceMode, SurfaceS, side_of_S
from analyze.terminal import Fate, classify_terminal, q1_approach

SAMPLES = 10_000


def make_params(m=2.0, N=5, p=2.1, sigma=0.0):
    return Params(m=m, N=N, p=p, sigma=sigma)


def make_traj(states, params, s=None, events=(), stop=StopReason.S_MAX, chart=Chart.XYZ):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    s = np.arange(len(states), dtype=float) if s is None else np.asarray(s, dtype=float)
    return Trajectory(chart, s, states, tuple(events), stop, params)


def event(kind, s, rate, coords=(0.0, 0.0, 0.0)):
    return Event(kind, float(s), coords, rate)


class BarrierFlowsTest(SimpleTestCase):
    def test_reference_value(self):
        flows = barrier_flows((5.0, 1.0, 0.0), make_params(p=3.0))
        self.assertAlmostEqual(flows.F1, 7.5, places=12)
        self.assertAlmostEqual(flows.pln, 5.0 * (1.0 - 1.0), places=12)

    def test_h_vanishes_at_sobolev_exponent(self):
        params = make_params(sigma=0.4, p=sobolev_exponent(2.0, 5, 0.4))
        for Y in np.linspace(-1.4, 0.5, 9):
            self.assertAlmostEqual(barrier_flows((1.0, Y, 2.0), params).H, 0.0, places=10)

    def test_low_dimensions_have_no_cylinder(self):
        flows = barrier_flows((1.0, -0.1, 1.0), make_params(N=2))
        self.assertTrue(math.isnan(flows.E))
        self.assertTrue(math.isnan(flows.H))

    def test_p3_plane_flow_is_reported(self):
        params = make_params(sigma=0.3)
        point = (2.0, 1.0, 0.5)
        self.assertEqual(barrier_flows(xyz(*point), params).G, p3_plane_flow(point, params))

    def test_f1_positive_above_fujita(self):
        rng = np.random.default_rng(1)
        for _ in range(SAMPLES):
            m, N, sigma = rng.uniform(1.1, 4.0), int(rng.integers(1, 9)), rng.uniform(0.0, 3.0)
            p_F = m + (sigma + 2) / N
            params = Params(m=m, N=N, p=p_F + rng.uniform(0.01, 3.0), sigma=sigma)
            X = rng.uniform(0.01, 100.0)
            Y = rng.uniform(1e-3, 1.0) * X / N
            self.assertGreater(barrier_flows((X, Y, 0.0), params).F1, 0.0)

    def test_fplane2_negative_below_critical(self):
        rng = np.random.default_rng(2)
        for _ in range(SAMPLES):
            m, N, sigma = rng.uniform(1.1, 4.0), int(rng.integers(1, 9)), rng.uniform(0.0, 3.0)
            params = Params(m=m, N=N, p=m + 1.0, sigma=sigma)
            if N > 2:
                p_c = exponent_table(params).p_c
                params = params.with_p(rng.uniform(m + 0.01, p_c))
            Z = rng.uniform(0.0, 100.0)
            self.assertLess(barrier_flows((1.0, params.no_return_level, Z), params).Fplane2, 0.0)

    def test_e_positive_on_cylinder_between_critical_and_sobolev(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < SAMPLES:
            m, N, sigma = rng.uniform(1.1, 4.0), int(rng.integers(3, 9)), rng.uniform(0.0, 3.0)
            table = exponent_table(Params(m=m, N=N, p=m + 1.0, sigma=sigma))
            params = Params(m=m, N=N, p=rng.uniform(table.p_c, table.p_s), sigma=sigma)
            Y = rng.uniform(-(N - 2) / m, 0.0)
            edges = sorted((params.no_return_level, -(N - 2) / (2 * m)))
            if edges[0] < Y < edges[1] or Y == 0.0:
                continue
            X = rng.uniform(0.0, 100.0)
            self.assertGreater(barrier_flows((X, Y, 0.0), params).E, 0.0)
            checked += 1

    def test_f2_positive_in_strip(self):
        rng = np.random.default_rng(4)
        for _ in range(SAMPLES):
            m, N, sigma = rng.uniform(1.1, 3.0), int(rng.integers(1, 9)), rng.uniform(0.5, 3.0)
            p_low = max(m, (N + sigma) * (m - 1) / (2 * sigma))
            params = Params(m=m, N=N, p=p_low + rng.uniform(0.01, 3.0), sigma=sigma)
            X = rng.uniform(0.01, 100.0)
            Y = params.no_return_level * rng.uniform(0.001, 0.999)
            self.assertGreater(barrier_flows((X, Y, 0.0), params).F2, 0.0)


class NoReturnPredicateTest(SimpleTestCase):
    def setUp(self):
        self.params = make_params()
        self.level = self.params.no_return_level

    def test_no_crossing(self):
        traj = make_traj([(1.0, 0.0, 1.0), (2.0, -1.0, 1.0)], self.params)
        self.assertFalse(no_return_predicate(traj, self.params))

    def test_crossing_stays_below(self):
        level = self.level
        states = [(1.0, level + 1, 1.0), (1.0, level - 1, 1.0), (1.0, level - 5, 0.5)]
        traj = make_traj(states, self.params, events=[event(EventKind.NO_RETURN, 0.5, -1.0)])
        self.assertTrue(no_return_predicate(traj, self.params))

    def test_return_raises_alarm(self):
        level = self.level
        states = [(1.0, level + 1, 1.0), (1.0, level - 1, 1.0), (1.0, level + 0.5, 0.5)]
        traj = make_traj(states, self.params, events=[event(EventKind.NO_RETURN, 0.5, -1.0)])
        with self.assertRaises(AccuracyAlarm):
            no_return_predicate(traj, self.params)

    def test_r0_line_never_crosses(self):
        self.assertFalse(no_return_predicate(trace_r0(self.params), self.params))

    def test_l_infinity_crosses(self):
        params = make_params(sigma=0.1)
        traj = integrate(seed_p0(None, 1e-5, params, infinite=True), params)
        self.assertTrue(no_return_predicate(traj, params))


class ClassifyTerminalTest(SimpleTestCase):
    def test_l_infinity_is_compactly_supported(self):
        params = make_params(sigma=0.1)
        traj = integrate(seed_p0(None, 1e-5, params, infinite=True), params)
        self.assertEqual(classify_terminal(traj, params).fate, Fate.Q3)

    def test_r0_line_enters_q_gamma0(self):
        params = make_params()
        info = classify_terminal(trace_r0(params), params)
        self.assertEqual(info.fate, Fate.QGAMMA0)
        self.assertAlmostEqual(info.evidence['ratio'], 1.0, places=10)

    def test_floor_stop_is_compactly_supported(self):
        params = make_params()
        traj = make_traj([(1.0, 0.0, 1.0), (2.0, -300.0, 0.5)], params, stop=StopReason.Y_FLOOR)
        self.assertEqual(classify_terminal(traj, params).fate, Fate.Q3)

    def test_q1_tail(self):
        params = make_params()
        traj = make_traj([(1.0, 0.1, 1.0), (2e3, -0.01, 1.0)], params)
        info = classify_terminal(traj, params)
        self.assertEqual(info.fate, Fate.Q1)
        self.assertEqual(info.anomaly, '')

    def test_p3(self):
        params = make_params(sigma=0.1)
        traj = make_traj([(0.1, 0.1, 0.0), p3_coordinates(params)], params)
        self.assertEqual(classify_terminal(traj, params).fate, Fate.P3)

    def test_z_dominated_end_is_flagged(self):
        params = make_params()
        traj = make_traj([(1.0, 0.5, 1.0), (1.0, 0.5, 5e3)], params)
        with self.assertLogs('analyze.terminal', level='WARNING'):
            info = classify_terminal(traj, params)
        self.assertEqual(info.fate, Fate.UNRESOLVED)
        self.assertEqual(info.anomaly, 'q4_like')

    def test_as_dict(self):
        params = make_params()
        data = classify_terminal(make_traj([(1.0, 0.0, 1.0), (1.5, 0.2, 1.0)], params), params).as_dict()
        self.assertEqual(data['fate'], 'Unresolved')
        self.assertEqual(data['evidence']['stop'], 's-max')

    @tag('slow')
    def test_non_existence_range_sends_every_orbit_to_q3(self):
        params = make_params(sigma=1.0)
        for C in (1e-2, 0.1, 1.0, 10.0, 100.0):
            traj = integrate(seed_p0(C, 1e-5, params), params)
            self.assertEqual(classify_terminal(traj, params).fate, Fate.Q3, msg=f'C={C}')


class Q1ApproachTest(SimpleTestCase):
    def setUp(self):
        self.params = make_params(sigma=0.1)
        self.X = np.geomspace(10.0, 1e5, 400)
        level = self.params.no_return_level
        self.slow = np.minimum(level + 333.0 / (self.params.k * self.X), 0.0)
        self.bend = 5.0 * np.clip((self.X - 2e4) / 1e4, 0.0, None) ** 2

    def orbit(self, Y):
        states = np.column_stack([self.X, Y, np.ones_like(self.X)])
        return make_traj(states, self.params, s=np.log(self.X) / 23.0, stop=StopReason.RADIUS)

    def test_scale(self):
        self.assertAlmostEqual(q1_scale(self.params), 23.0 / (0.1 / 2.1), places=9)

    def test_approach_starts_inside_the_band_not_at_x_big(self):
        approach = q1_approach(self.orbit(self.slow + self.bend), self.params)
        level = self.params.no_return_level
        # at X = 1e3 the orbit is still far above the level
        self.assertLess(self.slow[np.searchsorted(self.X, 1e3)], level * 0.6)
        self.assertGreater(self.X[approach.start], 666.0)
        self.assertLess(self.X[approach.start - 1], 700.0)
        self.assertEqual(approach.departure, 'upturn')
        self.assertGreater(self.X[approach.end], 2e4)
        self.assertLess(self.X[approach.end], 2.4e4)
        self.assertAlmostEqual(approach.s_end, np.log(self.X[approach.end]) / 23.0, places=12)

    def test_departure_through_the_level(self):
        approach = q1_approach(self.orbit(self.slow - self.bend), self.params)
        self.assertEqual(approach.departure, 'no-return')
        Y = self.slow - self.bend
        self.assertGreater(Y[approach.end], self.params.no_return_level)
        self.assertLessEqual(Y[approach.end + 1], self.params.no_return_level)

    def test_orbit_staying_on_the_approach(self):
        approach = q1_approach(self.orbit(self.slow), self.params)
        self.assertEqual(approach.departure, '')
        self.assertEqual(approach.end, len(self.X) - 1)

    def test_orbit_far_from_the_level(self):
        Y = np.full_like(self.X, -3.0)
        self.assertIsNone(q1_approach(self.orbit(Y), self.params))


class SurfaceTest(SimpleTestCase):
    def setUp(self):
        self.params = make_params(sigma=0.1)
        X = np.linspace(0.1, 10.0, 50)
        self.r0 = make_traj(np.column_stack([X, -0.01 * X, 0.5 * X]), self.params)
        self.surface = SurfaceS.from_r0(self.r0, self.params)

    def test_plane_sides(self):
        plane = SurfaceS.exact(make_params())
        self.assertEqual(side_of_S((1.0, -0.1, 5.0), plane), Side.BELOW)
        self.assertEqual(side_of_S((1.0, 0.1, 5.0), plane), Side.ABOVE)
        self.assertEqual(side_of_S(xyz(3.0, 0.0, 3.0), plane), Side.ON)

    def test_plane_needs_sigma_zero(self):
        with self.assertRaises(ValidationError):
            SurfaceS.exact(self.params)

    def test_r0_at_sigma_zero_gives_plane(self):
        params = make_params()
        self.assertEqual(SurfaceS.from_r0(trace_r0(params), params).mode, SurfaceMode.EXACT)

    def test_points_on_r0_are_on_surface(self):
        self.assertEqual(self.surface.mode, SurfaceMode.NUMERIC)
        for row in self.r0.states[::7]:
            self.assertEqual(side_of_S(tuple(row), self.surface), Side.ON)
        self.assertEqual(side_of_S((5.0, 0.1, 1.0), self.surface), Side.ABOVE)
        self.assertEqual(side_of_S((5.0, -0.2, 1.0), self.surface), Side.BELOW)

    def test_extrapolation_is_flagged(self):
        value, extrapolated = self.surface.psi(20.0)
        self.assertTrue(extrapolated)
        self.assertAlmostEqual(value, -0.2, places=12)
        with self.assertLogs('analyze.surface', level='WARNING'):
            side_of_S((20.0, 0.0, 1.0), self.surface)
        self.assertFalse(self.surface.psi(5.0)[1])

    def test_plateau(self):
        X = np.linspace(0.1, 10.0, 50)
        traj = make_traj(np.column_stack([X, 0.5 * X, X]), self.params)
        surface = SurfaceS.from_r0(traj, self.params)
        self.assertIsNotNone(surface.plateau)
        self.assertEqual(surface.plateau[1], 2.0)
        self.assertEqual(surface.psi(50.0), (2.0, True))
        self.assertEqual(surface.event_value(8.0, 3.0), 1.0)


class OscillationCountTest(SimpleTestCase):
    def test_counts_events_and_skips_tangencies(self):
        params = make_params()
        events = [
            event(EventKind.Y_ZERO_DOWN, 1.0, -0.5),
            event(EventKind.Y_ZERO_UP, 2.0, 0.3),
            event(EventKind.Y_ZERO_DOWN, 3.0, -1e-10),
        ]
        traj = make_traj([(1.0, 0.2, 1.0), (1.0, -0.2, 1.0), (1.0, 0.1, 1.0), (1.0, -0.1, 1.0)],
                         params, events=events)
        count = count_oscillations(traj)
        self.assertEqual((count.n_max, count.n_min), (1, 1))
        self.assertEqual(count.s_list, (1.0, 2.0))
        self.assertEqual(count.tangencies, (3.0,))
        self.assertEqual(count.mode, CountMode.Y_ZERO)
        self.assertTrue(count.flagged)

    def test_r0_line_is_degenerate(self):
        params = make_params()
        count = count_oscillations(trace_r0(params))
        self.assertEqual((count.n_max, count.n_min), (0, 0))
        self.assertTrue(count.degenerate)

    def test_plane_counts_equal_y_zero_counts(self):
        params = make_params()
        events = [event(EventKind.Y_ZERO_DOWN, 1.0, -0.5), event(EventKind.Y_ZERO_UP, 2.0, 0.3)]
        traj = make_traj([(1.0, 0.2, 1.0), (1.0, -0.2, 1.0), (1.0, 0.1, 1.0)], params, events=events)
        by_s = count_oscillations(traj, SurfaceS.exact(params))
        by_y = count_oscillations(traj)
        self.assertEqual(by_s.mode, CountMode.SURFACE_S)
        self.assertEqual((by_s.n_max, by_s.n_min), (by_y.n_max, by_y.n_min))
        self.assertTrue(compare_counts(traj, SurfaceS.exact(params))['agree'])

    def test_sampled_surface_crossings(self):
        params = make_params(sigma=0.1)
        X = np.linspace(0.1, 10.0, 50)
        surface = SurfaceS.from_r0(make_traj(np.column_stack([X, -0.01 * X, X]), params), params)
        s = np.linspace(0.5, 7.0, 400)
        Xs = np.linspace(1.0, 9.0, 400)
        states = np.column_stack([Xs, -0.01 * Xs + 0.1 * np.sin(s), Xs])
        count = count_oscillations(make_traj(states, params, s=s), surface)
        self.assertEqual((count.n_max, count.n_min), (1, 1))
        self.assertAlmostEqual(count.s_list[0], math.pi, places=3)
        self.assertAlmostEqual(count.s_list[1], 2 * math.pi, places=3)

    def test_diagnostics_record(self):
        params = make_params(sigma=0.1)
        traj = integrate(seed_p0(None, 1e-5, params, infinite=True), params)
        report = diagnostics(traj, params)
        self.assertEqual(report['fate'], 'Q3CompactSupport')
        self.assertEqual(report['n_max'], 0)
        self.assertTrue(any(item['kind'] == 'NoReturnCross' for item in report['crossings']))
