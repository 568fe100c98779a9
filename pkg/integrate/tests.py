import math
import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from manifolds.seeds import seed_p0, seed_q5
from params.exponents import Params
from phasespace.charts import Chart, ChartError, ChartPoint

from integrate import io
from integrate.solver import (
    Controls,
    Event,
    EventKind,
    EventMissing,
    IntegrationError,
    StopReason,
    Trajectory,
    integrate,
    integrate_q5,
    observable,
    refine_event,
    states_to_xyz,
)


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


class ControlsTest(SimpleTestCase):
    @override_settings(BLOWUP={
        'REL_TOL': 1e-8, 'ABS_TOL': 1e-10, 'S_MAX': 50.0, 'RADIUS_MAX': 1e4,
        'MAX_STEP': 0.1, 'METHOD': 'RK45',
    })
    def test_defaults_from_settings(self):
        controls = Controls.from_settings(rel_tol=None, s_max=20.0)
        self.assertEqual(controls.rel_tol, 1e-8)
        self.assertEqual(controls.s_max, 20.0)
        self.assertEqual(controls.method, 'RK45')

    def test_positive_limits(self):
        with self.assertRaises(ValidationError) as ctx:
            Controls(rel_tol=0.0, s_max=-1.0)
        self.assertEqual(set(ctx.exception.message_dict), {'rel_tol', 's_max'})

    def test_tightened_and_events(self):
        controls = Controls().tightened()
        self.assertAlmostEqual(controls.rel_tol, 1e-11, places=20)
        self.assertAlmostEqual(controls.abs_tol, 1e-13, places=22)
        extended = controls.with_events('SurfaceSCross', near_points=[(0.0, 0.0, 0.0)])
        self.assertIn(EventKind.SURFACE_S, extended.events)
        self.assertEqual(extended.near_points, ((0.0, 0.0, 0.0),))
        self.assertNotIn(EventKind.SURFACE_S, controls.events)
        self.assertEqual(extended.as_dict()['events'], sorted(str(k) for k in extended.events))


class ChartHelpersTest(SimpleTestCase):
    def test_projection_to_finite_chart(self):
        xyz = states_to_xyz(Chart.XPROJ, [[0.5, -1.0, 2.0]])
        np.testing.assert_allclose(xyz, [[2.0, -2.0, 4.0]])
        plane = states_to_xyz(Chart.PLANE_X0, [[-1.0, 3.0]])
        np.testing.assert_allclose(plane, [[0.0, -1.0, 3.0]])

    def test_w_plane_has_no_finite_image(self):
        with self.assertRaises(ChartError):
            states_to_xyz(Chart.WCHART, [[0.1, 0.2]])

    def test_observables(self):
        params = make_params()
        level = params.no_return_level
        g = observable(EventKind.NO_RETURN, Chart.XPROJ, params)
        self.assertAlmostEqual(g(np.array([0.5, level * 0.5, 1.0])), 0.0, places=12)
        extremum = observable(EventKind.Y_ZERO_DOWN, Chart.WCHART, params)
        y = 0.3
        self.assertAlmostEqual(extremum(np.array([y, params.k * y - y * y])), 0.0, places=14)
        self.assertIsNone(observable(EventKind.NO_RETURN, Chart.WCHART, params))
        self.assertIsNone(observable(EventKind.SURFACE_S, Chart.XYZ, params))


class IntegrateTest(SimpleTestCase):
    def setUp(self):
        self.params = make_params()
        self.traj = integrate(seed_p0(1e6, 1e-5, self.params), self.params)

    def test_large_c_orbit_crosses_no_return_plane(self):
        traj = self.traj
        self.assertTrue(np.all(np.diff(traj.s) > 0))
        crossed = traj.events_of(EventKind.NO_RETURN)
        self.assertEqual(len(crossed), 1)
        self.assertAlmostEqual(crossed[0].coords[1], self.params.no_return_level, places=6)
        self.assertLess(crossed[0].rate, 0.0)
        self.assertEqual(traj.stop, StopReason.Y_FLOOR)
        self.assertEqual(traj.meta['seed']['origin'], 'P0')

    def test_refined_event(self):
        refined = refine_event(self.traj, EventKind.NO_RETURN)
        self.assertAlmostEqual(refined.coords[1], self.params.no_return_level, places=9)
        with self.assertRaises(EventMissing):
            refine_event(self.traj, EventKind.Y_ZERO_UP)

    def test_resample_at_nodes(self):
        nodes = self.traj.s[::50]
        np.testing.assert_allclose(self.traj.resample(nodes), self.traj.states[::50], rtol=1e-8, atol=1e-12)

    def test_csv_keeps_states_and_meta(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.traj.to_csv(Path(tmp) / 'orbit.csv', {'run': 7})
            loaded = Trajectory.from_csv(path, self.params)
        self.assertEqual(loaded.chart, Chart.XYZ)
        self.assertEqual(loaded.stop, StopReason.Y_FLOOR)
        np.testing.assert_array_equal(loaded.states, self.traj.states)
        self.assertEqual(loaded.meta['run'], 7)
        self.assertEqual(loaded.meta['params'], self.params.as_dict())

    def test_sign_violation(self):
        params = make_params()
        start = ChartPoint(Chart.XYZ, (-1e-3, 0.0, 0.1), checked=False)
        with self.assertRaises(IntegrationError) as ctx:
            integrate(start, params, Controls.from_settings(s_max=5.0))
        self.assertEqual(ctx.exception.last_state, (-1e-3, 0.0, 0.1))
        with self.assertRaises(ChartError):
            ChartPoint(Chart.XYZ, (-1e-3, 0.0, 0.1))

    def test_seed_scale_undershoot_is_accepted(self):
        params = make_params()
        start = ChartPoint(Chart.XYZ, (1e-5, 0.0, -1e-13), checked=False)
        traj = integrate(start, params, Controls.from_settings(s_max=0.5))
        self.assertGreaterEqual(traj.states[:, 2].min(), 0.0)


class IntegrateQ5Test(SimpleTestCase):
    def test_orbit_reported_in_finite_chart(self):
        params = make_params()
        seed = seed_q5(0.5, 1e-4, params)
        traj = integrate_q5(seed, params)
        self.assertEqual(traj.chart, Chart.XYZ)
        self.assertEqual(traj.s[0], 0.0)
        x0 = seed.point.coords[0]
        self.assertAlmostEqual(traj.meta['deadcore_eta'], -x0 / ((params.m - 1) * params.k), places=15)
        self.assertIn('switch_eta', traj.meta)
        np.testing.assert_allclose(traj.states[0], states_to_xyz(Chart.XPROJ, seed.point.array)[0])

    def test_dense_output_covers_both_stages(self):
        params = make_params()
        traj = integrate_q5(seed_q5(0.5, 1e-4, params), params)
        nodes = traj.s[::40]
        np.testing.assert_allclose(traj.resample(nodes), traj.states[::40], rtol=1e-7, atol=1e-10)
        switch = traj.meta['switch_eta']
        before, after = traj.resample([switch - 1e-9, switch + 1e-9])
        np.testing.assert_allclose(before, after, rtol=1e-6, atol=1e-8)

    def test_wrong_chart(self):
        params = make_params()
        with self.assertRaises(ChartError):
            integrate_q5(seed_p0(1.0, 1e-5, params), params)


class IoTest(SimpleTestCase):
    def test_records_keep_labels_and_numbers(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = io.write_records(Path(tmp) / 'sweep.csv', ['param', 'n_min', 'fate', 'tangent'],
                                    [[0.1, 2, 'Q1Connection', True], [math.inf, -1, 'Error', False]],
                                    {'version': '1'})
            meta, columns, rows = io.read_records(path)
            text = path.read_text(encoding='utf-8')
        self.assertEqual(meta, {'version': '1'})
        self.assertEqual(columns, ['param', 'n_min', 'fate', 'tangent'])
        self.assertEqual(rows, [[0.1, 2, 'Q1Connection', True], [math.inf, -1, 'Error', False]])
        self.assertTrue(text.startswith('# version: "1"\nparam,n_min,fate,tangent\n'))

    def test_records_reject_bad_rows(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValueError):
                io.write_records(Path(tmp) / 'a.csv', ['a', 'b'], [[1.0]])
            with self.assertRaises(ValueError):
                io.write_records(Path(tmp) / 'b.csv', ['a'], [['x,y']])

    def test_table_format_is_stable(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = io.write_table(Path(tmp) / 'a.csv', ['s', 'X'], [[0.0, 1.0 / 3.0]], {'b': 1, 'a': [1, 2]})
            second = io.write_table(Path(tmp) / 'b.csv', ['s', 'X'], [[0.0, 1.0 / 3.0]], {'a': [1, 2], 'b': 1})
            self.assertEqual(first.read_bytes(), second.read_bytes())
            table = io.read_table(first)
        self.assertEqual(table.column('X')[0], 1.0 / 3.0)
        self.assertEqual(list(table.meta), ['a', 'b'])

    def test_json_document(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = io.write_json(Path(tmp) / 'doc.json', {'z': 1, 'kind': EventKind.NO_RETURN},
                                 {'version': '1'})
            meta, data = io.read_json(path)
        self.assertEqual(data, {'kind': 'NoReturnCross', 'z': 1})
        self.assertEqual(meta, {'version': '1'})

    def test_missing_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'empty.csv'
            path.write_text('# a: 1\n', encoding='utf-8')
            with self.assertRaises(ValueError):
                io.read_table(path)

    def test_event_round_trip(self):
        event = Event(EventKind.Y_ZERO_UP, 1.5, (1.0, 0.0, 2.0), 0.25)
        self.assertEqual(Event.from_dict(event.as_dict()), event)
