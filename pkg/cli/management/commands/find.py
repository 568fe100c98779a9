import logging

from profiles.asymptotics import Law, WindowTooShort, fit_asymptotics
from profiles.reconstruct import connection_profile
from profiles.residuals import GridTooCoarse, ode_residual

from cli.base import ConnectionCommand

logger = logging.getLogger(__name__)


class Command(ConnectionCommand):
    help = 'Locate a connection to Q1 with k minima and emit its profile.'

    def run(self, config):
        result = self.locate(config)
        profile = connection_profile(result)
        extra = {}
        try:
            extra['tail_fit'] = fit_asymptotics(profile, Law.TAIL_Q1).as_dict()
        except WindowTooShort as exc:
            logger.warning('tail not fitted: %s', exc)
            extra['tail_fit'] = None
        try:
            extra['ode_residual'] = ode_residual(profile)
        except GridTooCoarse as exc:
            logger.warning('residual not evaluated: %s', exc)
            extra['ode_residual'] = None
        self.emit_connection(config, result, profile, **extra)
        if extra['tail_fit'] is not None:
            fit = extra['tail_fit']
            self.stdout.write(f'tail exponent {fit["exponent_fit"]:.6g} (expected {fit["expected_exponent"]:.6g})')
