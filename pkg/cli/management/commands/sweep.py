from collections import Counter

import numpy as np
from django.conf import settings

from shooter.outcomes import Family
from shooter.search import default_grid, sweep

from cli import emit
from cli.base import BlowupCommand
from cli.models import ShotRecord

COLUMNS = ['param', 'n_max', 'n_min', 'fate']


def sweep_grid(params, family, points, low=None, high=None):
    """Ascending grid: geometric in C, arithmetic in theta and p."""
    family = Family(family)
    if low is None and high is None:
        if family == Family.P0_C:
            conf = settings.BLOWUP
            return list(np.geomspace(conf['SWEEP_C_MIN'], conf['SWEEP_C_MAX'], points))
        return sorted(default_grid(params, family, points))
    grid = sorted(default_grid(params, family, points))
    low = grid[0] if low is None else low
    high = grid[-1] if high is None else high
    if family == Family.P0_C:
        return list(np.geomspace(low, high, points))
    return list(np.linspace(low, high, points))


class Command(BlowupCommand):
    help = 'Shoot a grid of family members and tabulate oscillation counts and fates.'
    option_names = ('family', 'points', 'min', 'max', 'workers', 'epsilon')

    def add_command_arguments(self, parser):
        parser.add_argument('--family', choices=Family.values, default=Family.P0_C.value)
        parser.add_argument('--points', type=int, help='Grid size (SWEEP_POINTS by default).')
        parser.add_argument('--min', type=float, help='Lower end of the grid.')
        parser.add_argument('--max', type=float, help='Upper end of the grid.')
        parser.add_argument('--workers', type=int, help='Process pool size (BLOWUP_THREADS by default).')
        parser.add_argument('--epsilon', type=float, help='Seed distance to the critical point.')

    def run(self, config):
        options = config.options
        family = Family(options['family'])
        points = options.get('points') or settings.BLOWUP['SWEEP_POINTS']
        grid = sweep_grid(config.params, family, points, options.get('min'), options.get('max'))
        outcomes = sweep(config.params, family, grid, config.controls, epsilon=options.get('epsilon'),
                         workers=options.get('workers'))
        rows = [outcome.as_row() for outcome in outcomes]
        emit.emit_rows(config, 'table', COLUMNS, rows, family=family.value)
        if getattr(self, 'ledger_run', None) is not None:
            ShotRecord.objects.bulk_create([
                ShotRecord(run=self.ledger_run, family=family.value, parameter=value,
                           n_max=n_max, n_min=n_min, fate=fate)
                for value, n_max, n_min, fate in rows
            ])
        fates = Counter(row[3] for row in rows)
        for fate, count in sorted(fates.items()):
            self.stdout.write(f'{fate}: {count} ({100.0 * count / len(rows):.1f}%)')
        classes = sorted({row[2] for row in rows if row[3] != 'Error'})
        self.success(f'{len(rows)} shots, minima counts {classes}')
