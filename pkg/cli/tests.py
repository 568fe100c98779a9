import io as stdio
import math
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag

from analyze.oscillations import OscillationCount
from analyze.terminal import Fate, TerminalInfo
from integrate import io
from integrate.solver import Controls, IntegrationError
from params.exponents import Params
from profiles.reconstruct import Profile
from shooter.outcomes import ConnectionResult, Family, ShotOutcome
from shooter.search import NoBracket

from cli.config import OutputFormat, RunConfig, load_config_file, merge_sources
from cli.forms import RunConfigForm
from cli.management.commands.sweep import sweep_grid
from cli.models import ConnectionRecord, Run, ShotRecord


def make_params(m=2.0, N=5, p=2.1, sigma=0.1):
    return Params(m=m, N=N, p=p, sigma=sigma)


def fake_outcome(value, minima=0, fate=Fate.Q3):
    return ShotOutcome(
        family=Family.P0_C, value=float(value), count=OscillationCount(minima + 1, minima),
        terminal=TerminalInfo(fate), minima=minima,
    )


def fake_connection(params, value=2.5):
    return ConnectionResult(
        family=Family.P0_C, parameter_star=value, bracket=(value * 1.001, value * 0.999), oscillations=0,
        fate_at_bracket_ends=(TerminalInfo(Fate.Q1), TerminalInfo(Fate.Q3)), q1_signature=True,
        controls=Controls().as_dict(), midpoint=fake_outcome(value, fate=Fate.Q1), params=params,
    )


def tail_profile(params):
    """f = xi^{-(sigma+2)/(p-m)} on [1, 10]."""
    xi = np.geomspace(1.0, 10.0, 801)
    exponent = params.no_return_level
    f = xi ** exponent
    return Profile(xi, f, exponent * f / xi, params)


class CommandTestMixin:
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, *args, **options):
        out, err = stdio.StringIO(), stdio.StringIO()
        call_command(name, *args, output_dir=str(self.output), stdout=out, stderr=err, **options)
        return out.getvalue()


class ConfigTest(SimpleTestCase):
    def test_config_file_keys(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.env'
            path.write_text('M=2\nN=5\nP=2.1\nSIGMA=0.1\nREL-TOL=1e-11\n# comment\n', encoding='utf-8')
            values = load_config_file(path)
            merged = merge_sources({'p': 2.8, 'sigma': None}, path)
        self.assertEqual(values, {'m': '2', 'N': '5', 'p': '2.1', 'sigma': '0.1', 'rel_tol': '1e-11'})
        self.assertEqual(merged['p'], 2.8)
        self.assertEqual(merged['sigma'], '0.1')

    def test_run_config_round_trip(self):
        config = RunConfig('find', make_params(), Controls.from_settings(rel_tol=1e-11),
                           {'minima': 1, 'bracket': [1.0, 2.0]}, Path('out'), OutputFormat.JSON)
        self.assertEqual(RunConfig.from_dict(config.as_dict()), config)


class RunConfigFormTest(SimpleTestCase):
    def test_valid(self):
        form = RunConfigForm({'m': 2, 'N': 5, 'p': 2.1, 'sigma': 0.1, 'rel_tol': 1e-11, 'format': 'json'})
        self.assertTrue(form.is_valid(), form.errors)
        config = form.run_config('shoot', {'value': 1.0})
        self.assertEqual(config.controls.rel_tol, 1e-11)
        self.assertEqual(config.format, OutputFormat.JSON)
        self.assertEqual(config.output_dir, Path('output'))
        self.assertEqual(config.params, make_params())

    def test_errors_on_fields(self):
        form = RunConfigForm({'m': 2, 'N': 5, 'sigma': 0.1, 'abs_tol': -1})
        self.assertFalse(form.is_valid())
        self.assertIn('p', form.errors)
        self.assertIn('abs_tol', form.errors)

    def test_p_optional_for_tables(self):
        form = RunConfigForm({'m': 2, 'N': 5, 'sigma': 0.1}, require_p=False)
        self.assertTrue(form.is_valid(), form.errors)


class ExponentsCommandTest(CommandTestMixin, TestCase):
    def test_table(self):
        out = self.call('exponents', m=2, N=5, sigma=0.1)
        for line in ('p_s=4.8', 'p_F=2.42', 'sigma_star=12'):
            self.assertIn(line, out.splitlines())
        self.assertNotIn('alpha', out)
        meta, columns, rows = io.read_records(self.output / 'exponents_table.csv')
        self.assertEqual(columns, ['name', 'value'])
        self.assertIn(['sigma_star', 12.0], rows)
        self.assertEqual(meta['run_config']['command'], 'exponents')
        self.assertIn('version', meta)

    def test_infinite_sobolev_exponent(self):
        out = self.call('exponents', m=2, N=2, sigma=0)
        self.assertIn('p_s=inf', out.splitlines())

    def test_derived_exponents_with_p(self):
        out = self.call('exponents', m=2, N=5, p=2.1, sigma=0.1, format='json')
        self.assertIn('no_return_level=-21', out.splitlines())
        self.assertIn('Q=-13.47', out.splitlines())
        _, data = io.read_json(self.output / 'exponents_table.json')
        beta = next(row['value'] for row in data if row['name'] == 'beta')
        self.assertAlmostEqual(beta, 0.1 / 2.3, places=14)

    def test_invalid_m(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('exponents', m=1, N=5, sigma=0.1)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_config_file_precedence(self):
        path = self.output / 'run.env'
        path.write_text('m=3\nN=5\nsigma=0.1\n', encoding='utf-8')
        out = self.call('exponents', config=str(path), m=2)
        self.assertIn('p_F=2.42', out.splitlines())

    def test_identical_runs_identical_files(self):
        self.call('exponents', m=2, N=5, p=2.1, sigma=0.1)
        first = (self.output / 'exponents_table.csv').read_bytes()
        self.call('exponents', m=2, N=5, p=2.1, sigma=0.1)
        self.assertEqual((self.output / 'exponents_table.csv').read_bytes(), first)


class PointsCommandTest(CommandTestMixin, TestCase):
    def test_catalog(self):
        out = self.call('points', m=2, N=5, p=2.1, sigma=0.1)
        self.assertIn('P0', out)
        meta, data = io.read_json(self.output / 'points_catalog.json')
        ids = {record['id'] for record in data}
        self.assertTrue({'P0', 'P1', 'P3', 'Q1', 'Q5'} <= ids)
        self.assertEqual(meta['run_config']['params']['p'], 2.1)


class NonexistCommandTest(CommandTestMixin, TestCase):
    def test_combined(self):
        out = self.call('nonexist', m=2, N=5, p=3, sigma=12)
        self.assertIn('verdict: true', out)
        self.assertIn('criterion: Combined', out)
        _, data = io.read_json(self.output / 'nonexist_verdict.json')
        self.assertTrue(data['verdict'])

    def test_small_sigma(self):
        out = self.call('nonexist', m=2, N=5, p=3, sigma=0.1)
        self.assertIn('verdict: false', out)
        self.assertIn('criterion: None', out)

    def test_certificate_without_combined(self):
        out = self.call('nonexist', m=2, N=5, p=2.2, sigma=3)
        self.assertIn('verdict: false', out)
        self.assertIn('certificates without Combined: PohozaevRange', out)
        _, data = io.read_json(self.output / 'nonexist_verdict.json')
        self.assertEqual(data['certificates'], ['PohozaevRange'])

    def test_sigma_zero_rejected(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('nonexist', m=2, N=5, p=3, sigma=0)
        self.assertEqual(ctx.exception.returncode, 2)


class SweepCommandTest(CommandTestMixin, TestCase):
    def test_grids_ascending(self):
        params = make_params()
        for family in Family.values:
            grid = sweep_grid(params, family, 7)
            self.assertEqual(grid, sorted(grid))
            self.assertEqual(len(grid), 7)
        grid = sweep_grid(params, Family.P0_C, 3, low=1.0, high=100.0)
        np.testing.assert_allclose(grid, [1.0, 10.0, 100.0])

    @mock.patch('cli.management.commands.sweep.sweep')
    def test_rows_and_ledger(self, sweep):
        sweep.return_value = [
            fake_outcome(0.1, minima=1), fake_outcome(1.0),
            ShotOutcome(family=Family.P0_C, value=10.0, error='stiff'),
        ]
        out = self.call('sweep', m=2, N=5, p=2.1, sigma=0.1, points=3, record=True)
        self.assertIn('Q3CompactSupport: 2 (66.7%)', out)
        self.assertIn('Error: 1 (33.3%)', out)
        _, columns, rows = io.read_records(self.output / 'sweep_table.csv')
        self.assertEqual(columns, ['param', 'n_max', 'n_min', 'fate'])
        self.assertEqual(rows[2], [10.0, -1, -1, 'Error'])
        run = Run.objects.get()
        self.assertEqual(run.exit_code, 0)
        self.assertEqual(run.config['options']['points'], 3)
        self.assertEqual(list(run.shots.values_list('n_min', flat=True)), [1, 0, -1])
        self.assertEqual(ShotRecord.objects.filter(fate='Error').count(), 1)


class ExitCodeTest(CommandTestMixin, TestCase):
    @mock.patch('cli.base.find_connection', side_effect=NoBracket('indicator constant'))
    def test_no_bracket(self, find):
        with self.assertRaises(CommandError) as ctx:
            self.call('find', m=2, N=5, p=2.1, sigma=0.1, record=True)
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertEqual(Run.objects.get().exit_code, 3)

    @mock.patch('cli.base.find_connection', side_effect=IntegrationError('step size too small'))
    def test_numerical_failure(self, find):
        with self.assertRaises(CommandError) as ctx:
            self.call('find', m=2, N=5, p=2.1, sigma=0.1)
        self.assertEqual(ctx.exception.returncode, 4)
        self.assertFalse(Run.objects.exists())

    def test_missing_p(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('shoot', m=2, N=5, sigma=0.1, value=1.0)
        self.assertEqual(ctx.exception.returncode, 2)

    @mock.patch('cli.base.find_negative_sigma', side_effect=NoBracket('indicator constant'))
    def test_negative_sigma_routing(self, find):
        with self.assertRaises(CommandError):
            self.call('find', m=2, N=3, p=3, sigma=-1, bracket=[0.5, 2.0])
        self.assertEqual(find.call_args.kwargs['bracket'], (0.5, 2.0))


class FindCommandTest(CommandTestMixin, TestCase):
    def test_connection_recorded(self):
        params = make_params()
        with mock.patch('cli.base.find_connection', return_value=fake_connection(params)) as find, \
                mock.patch('cli.management.commands.find.connection_profile', return_value=tail_profile(params)):
            out = self.call('find', m=2, N=5, p=2.1, sigma=0.1, minima=1, tol=1e-8, record=True)
        self.assertEqual(find.call_args.kwargs['k'], 1)
        self.assertEqual(find.call_args.kwargs['tol'], 1e-8)
        self.assertIn('P0_C* = 2.5 (k=0, with Q1 signature)', out)
        record = ConnectionRecord.objects.get()
        self.assertEqual(record.profile_file, 'find_profile.csv')
        self.assertLess(record.bracket_low, record.bracket_high)
        _, data = io.read_json(self.output / 'find_connection.json')
        self.assertEqual(data['profile_ref'], record.pk)
        self.assertAlmostEqual(data['tail_fit']['exponent_fit'], -21.0, places=6)
        profile = Profile.from_csv(self.output / 'find_profile.csv')
        self.assertEqual(profile.params, params)


class ReplayTest(CommandTestMixin, TestCase):
    def test_replay_reproduces_files(self):
        self.call('exponents', m=2, N=5, p=2.1, sigma=0.1, record=True)
        path = self.output / 'exponents_table.csv'
        first = path.read_bytes()
        path.unlink()
        run = Run.objects.get()
        out = stdio.StringIO()
        call_command('runs', replay=run.pk, stdout=out)
        self.assertEqual(path.read_bytes(), first)
        self.assertIn('replayed', out.getvalue())

    def test_listing_and_unknown_id(self):
        self.call('exponents', m=2, N=5, sigma=0.1, record=True)
        out = stdio.StringIO()
        call_command('runs', stdout=out)
        self.assertIn('exponents', out.getvalue())
        with self.assertRaises(CommandError) as ctx:
            call_command('runs', replay=999, stdout=stdio.StringIO())
        self.assertEqual(ctx.exception.returncode, 2)


class FigureCommandTest(CommandTestMixin, TestCase):
    @mock.patch('cli.figures.shoot', side_effect=IntegrationError('non-finite right-hand side'))
    def test_failures_reported_bundle_emitted(self, shoot):
        self.call('figure', 'fig1', points=3, m=7)
        meta, manifest = io.read_json(self.output / 'figure_fig1_manifest.json')
        self.assertEqual(manifest['series'], [])
        self.assertEqual([f['name'] for f in manifest['failures']], ['l_C00', 'l_C01', 'l_C02'])
        self.assertEqual(manifest['params'], {'m': 2.0, 'N': 5, 'p': 2.1, 'sigma': 0.5})
        self.assertEqual(meta['run_config']['params']['m'], 2.0)

    @tag('slow')
    def test_w_plane_portrait(self):
        self.call('figure', 'fig4')
        _, manifest = io.read_json(self.output / 'figure_fig4_manifest.json')
        series = {s['name']: s for s in manifest['series']}
        self.assertTrue(series['q5prime']['monotone_y'])
        q1 = [s for name, s in series.items() if name.startswith('q1prime')]
        self.assertGreaterEqual(len(q1), 3)
        for s in q1:
            self.assertEqual(s['y_maxima'], 1)
            self.assertTrue((self.output / s['trajectory']).exists())

    @tag('slow')
    def test_no_return_figure(self):
        self.call('figure', 'fig3')
        _, manifest = io.read_json(self.output / 'figure_fig3_manifest.json')
        self.assertAlmostEqual(manifest['no_return_level'], -30.0, places=10)
        self.assertEqual(manifest['failures'], [])
        for s in manifest['series']:
            self.assertEqual(s['fate'], Fate.Q3.value)
            self.assertAlmostEqual(s['no_return_y'], -30.0, places=6)

    @tag('slow')
    def test_oscillation_classes(self):
        self.call('figure', 'fig2')
        _, manifest = io.read_json(self.output / 'figure_fig2_manifest.json')
        classes = {s['n_min'] for s in manifest['series']}
        self.assertGreaterEqual(len(classes), 3)
        profiles = [s['profile'] for s in manifest['series'] if s['profile']]
        self.assertTrue(profiles)
        self.assertTrue(all((self.output / name).exists() for name in profiles))


@tag('slow')
class EndToEndTest(CommandTestMixin, TestCase):
    def test_sweep_in_non_existence_range(self):
        out = self.call('sweep', m=2, N=5, p=2.1, sigma=1, points=100, workers=1)
        self.assertIn('Q3CompactSupport: 100 (100.0%)', out)

    def test_two_minima_classes_at_sigma_zero(self):
        self.call('find', m=2, N=5, p=2.8, sigma=0, minima=1)
        _, data = io.read_json(self.output / 'find_connection.json')
        self.assertEqual(data['oscillations'], 1)
        self.assertTrue(math.isclose(data['tail_fit']['exponent_fit'], -2 / 0.8, rel_tol=0.02))

    def test_shoot_emits_orbit_files(self):
        out = self.call('shoot', m=2, N=5, p=2.1, sigma=0.1, value=1e6)
        self.assertIn('Q3CompactSupport', out)
        for name in ('shoot_trajectory.csv', 'shoot_diagnostics.json'):
            self.assertTrue((self.output / name).exists(), name)
