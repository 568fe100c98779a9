from profiles.pohozaev import pohozaev
from profiles.reconstruct import connection_profile
from shooter.outcomes import Family

from cli import emit
from cli.base import ConnectionCommand


class Command(ConnectionCommand):
    help = 'Locate a connection and check the Pohozaev identity on its profile.'
    families = (Family.P0_C.value,)

    def run(self, config):
        result = self.locate(config)
        profile = connection_profile(result)
        report = pohozaev(profile, result.params)
        self.emit_connection(config, result, profile)
        emit.emit_document(config, 'report', report.as_dict())
        for name in ('T1', 'T2', 'T3'):
            self.stdout.write(f'{name}={getattr(report, name):.10g}')
        state = 'converged' if report.converged else 'divergent tail'
        self.stdout.write(f'Q={report.Q_value:.10g} residual={report.residual:.3g} '
                          f'relative={report.relative:.3g} ({state})')
