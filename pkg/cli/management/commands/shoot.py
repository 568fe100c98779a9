from analyze.report import diagnostics
from shooter.outcomes import Family
from shooter.search import shoot

from cli import emit
from cli.base import BlowupCommand
from cli.figures import shot_profile


class Command(BlowupCommand):
    help = 'Integrate one member of an orbit family and emit its trajectory, diagnostics and profile.'
    option_names = ('family', 'value', 'epsilon')

    def add_command_arguments(self, parser):
        parser.add_argument('--family', choices=Family.values, default=Family.P0_C.value)
        parser.add_argument('--value', type=float, required=True, help='C, theta or p of the family member.')
        parser.add_argument('--epsilon', type=float, help='Seed distance to the critical point.')

    def run(self, config):
        options = config.options
        family = Family(options['family'])
        outcome = shoot(config.params, family, options['value'], config.controls,
                        epsilon=options.get('epsilon'), keep_trajectory=True)
        params = config.params.with_p(outcome.value) if family == Family.P3_P else config.params
        traj = outcome.trajectory
        emit.emit_trajectory(config, 'trajectory', traj)
        emit.emit_document(config, 'diagnostics', {**diagnostics(traj, params), 'shot': outcome.as_dict()})
        profile = shot_profile(traj, params)
        if profile is None:
            self.stderr.write('orbit not reconstructed as a profile')
        else:
            emit.emit_profile(config, 'profile', profile)
        count = outcome.count
        self.success(f'{family.value}={outcome.value:.12g}: {outcome.terminal.fate.value}, '
                     f'{count.n_max} maxima, {count.n_min} minima')
