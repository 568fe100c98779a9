import math

from params.exponents import derive, exponent_table, pohozaev_thresholds, q_value

from cli import emit
from cli.base import BlowupCommand


class Command(BlowupCommand):
    help = 'Print the self-similar and critical exponents of (m, N, sigma) and, with --p, of p.'
    requires_p = False

    def run(self, config):
        params = config.params
        rows = list(exponent_table(params).as_dict().items())
        if config.options.get('p_given'):
            derived = derive(params)
            p1, p2 = pohozaev_thresholds(params)
            rows += [
                ('alpha', derived.alpha), ('beta', derived.beta), ('L', derived.L), ('k', params.k),
                ('no_return_level', params.no_return_level),
                ('p1', p1), ('p2', math.nan if p2 is None else p2), ('Q', q_value(params)),
            ]
        for name, value in rows:
            self.stdout.write(f'{name}={value:.6g}')
        emit.emit_rows(config, 'table', ['name', 'value'], rows)
