from collections import Counter

from cli.base import BlowupCommand
from cli.figures import FIGURES, build_figure


class Command(BlowupCommand):
    help = 'Emit the plot-data bundle of a reference figure; its parameters are fixed by the figure.'
    option_names = ('figure_id', 'points')

    def add_command_arguments(self, parser):
        parser.add_argument('figure_id', choices=sorted(FIGURES))
        parser.add_argument('--points', type=int, help='Number of C values of the l_C figures.')

    def build_config(self, options):
        params = FIGURES[options['figure_id']].params.as_dict()
        return super().build_config({**options, **params})

    def run(self, config):
        path, manifest = build_figure(config, config.options['figure_id'], config.options.get('points'))
        for failure in manifest['failures']:
            self.stderr.write(f'{failure["name"]} failed: {failure["error"]}')
        if manifest['plane'] == 'w':
            maxima = Counter(series['y_maxima'] for series in manifest['series'])
            self.stdout.write(f'y maxima per orbit: {dict(sorted(maxima.items()))}')
        else:
            fates = Counter(series['fate'] for series in manifest['series'])
            minima = sorted({series['n_min'] for series in manifest['series']})
            self.stdout.write(f'fates: {dict(sorted(fates.items()))}; minima counts {minima}')
        self.success(f'{len(manifest["series"])} series written, manifest {path}')
