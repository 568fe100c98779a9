from profiles.asymptotics import Law, contact_derivative, fit_asymptotics
from profiles.reconstruct import connection_profile
from shooter.outcomes import Family

from cli.base import ConnectionCommand


class Command(ConnectionCommand):
    help = 'Locate a dead-core profile (orbit of Q5 connecting to Q1) and emit it.'
    families = (Family.Q5_THETA.value,)

    def run(self, config):
        result = self.locate(config)
        profile = connection_profile(result)
        fit = fit_asymptotics(profile, Law.DEADCORE_Q5)
        contact = contact_derivative(profile)
        self.emit_connection(config, result, profile, deadcore_edge=profile.deadcore_edge,
                             deadcore_fit=fit.as_dict(), contact_derivative=contact)
        self.stdout.write(f'dead core edge {profile.deadcore_edge:.6g}, (f^m)\' = {contact:.3g}, '
                          f'edge coefficient {fit.exponent_fit:.6g} (expected {fit.expected_exponent:.6g})')
