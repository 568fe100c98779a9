"""Base class of the management commands.

Defines:
- BlowupCommand: common flags, RunConfig construction, exit codes and the
  optional run ledger.
- ConnectionCommand: search options and emission shared by find, deadcore
  and pohozaev.
- EXIT_VALIDATION, EXIT_NO_BRACKET, EXIT_NUMERICAL.

Notes:
    - Subclasses implement ``add_command_arguments`` and ``run(config)``;
      command specific options are read back from ``config.options`` so
      that a replay needs nothing but the stored RunConfig.
    - ValidationError exits with 2, NoBracket with 3 and every numerical
      exception with 4, through ``CommandError(returncode=...)``.
"""

import logging
from dataclasses import replace

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from analyze.barriers import AccuracyAlarm
from integrate.solver import EventMissing, IntegrationError
from manifolds.r0 import R0NotFound
from phasespace.charts import ChartError
from profiles.asymptotics import WindowTooShort
from profiles.reconstruct import ReconstructionError
from profiles.residuals import GridTooCoarse
from shooter.outcomes import Family
from shooter.search import (
    NoBracket, TangencyFlag, find_connection, find_deadcore, find_negative_sigma, find_p3_connection,
)

from . import emit
from .config import PARAM_KEYS, OutputFormat, RunConfig, merge_sources
from .forms import RunConfigForm
from .models import ConnectionRecord, Run

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_NO_BRACKET = 3
EXIT_NUMERICAL = 4

NUMERICAL_ERRORS = (
    IntegrationError, EventMissing, ChartError, AccuracyAlarm, R0NotFound, TangencyFlag,
    ReconstructionError, GridTooCoarse, WindowTooShort, FloatingPointError,
)

COMMON_KEYS = (*PARAM_KEYS, 'rel_tol', 'abs_tol', 's_max', 'radius_max', 'output_dir', 'format')


class BlowupCommand(BaseCommand):
    """
    Shared surface of the commands.

    Attributes:
        requires_p (bool): Whether --p is mandatory.
        option_names (tuple[str, ...]): Command specific options stored in
            the RunConfig.
    """
    requires_p = True
    option_names = ()

    def add_arguments(self, parser):
        parser.add_argument('--m', type=float, help='Diffusion exponent, m > 1.')
        parser.add_argument('--N', type=int, help='Space dimension.')
        parser.add_argument('--p', type=float, help='Reaction exponent.')
        parser.add_argument('--sigma', type=float, help='Weight exponent.')
        parser.add_argument('--config', help='KEY=value file; flags take precedence.')
        parser.add_argument('--output-dir', dest='output_dir', help='Directory of emitted files.')
        parser.add_argument('--format', choices=OutputFormat.values, help='Format of tables.')
        parser.add_argument('--rel-tol', dest='rel_tol', type=float)
        parser.add_argument('--abs-tol', dest='abs_tol', type=float)
        parser.add_argument('--s-max', dest='s_max', type=float)
        parser.add_argument('--radius-max', dest='radius_max', type=float)
        parser.add_argument('--record', action='store_true', help='Store the run in the ledger.')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        """Hook for command specific arguments."""

    def build_config(self, options):
        """
        RunConfig from the parsed options.

        Raises:
            CommandError: Invalid input (returncode 2).
        """
        data = merge_sources({key: options.get(key) for key in COMMON_KEYS}, options.get('config'))
        form = RunConfigForm(data, require_p=self.requires_p)
        if not form.is_valid():
            messages = '; '.join(f'{field}: {" ".join(errors)}' for field, errors in form.errors.items())
            raise CommandError(f'invalid parameters: {messages}', returncode=EXIT_VALIDATION)
        command_options = {name: options.get(name) for name in self.option_names}
        command_options['p_given'] = data.get('p') is not None
        return form.run_config(self.command_name(), command_options)

    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def handle(self, *args, **options):
        config = self.build_config(options)
        run = None
        if options.get('record'):
            run = Run.objects.create(command=config.command, config=config.as_dict(),
                                     version=settings.BLOWUP_VERSION)
        self.ledger_run = run
        exit_code = 1
        try:
            self.execute_config(config)
            exit_code = 0
        except CommandError as exc:
            exit_code = exc.returncode
            raise
        finally:
            if run is not None:
                run.exit_code = exit_code
                run.save(update_fields=['exit_code'])

    def execute_config(self, config):
        """Run ``config`` and translate domain exceptions into exit codes."""
        try:
            self.run(config)
        except ValidationError as exc:
            raise CommandError(f'invalid input: {"; ".join(exc.messages)}', returncode=EXIT_VALIDATION)
        except NoBracket as exc:
            raise CommandError(f'no bracket: {exc}', returncode=EXIT_NO_BRACKET)
        except NUMERICAL_ERRORS as exc:
            logger.error('%s failed: %s', config.command, exc)
            raise CommandError(f'numerical failure ({type(exc).__name__}): {exc}', returncode=EXIT_NUMERICAL)

    def run(self, config):
        raise NotImplementedError('subclasses of BlowupCommand must provide a run() method')

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

    def replay(self, stored):
        """Re-execute a stored RunConfig dictionary."""
        self.ledger_run = None
        self.execute_config(RunConfig.from_dict(stored))


class ConnectionCommand(BlowupCommand):
    """
    Commands that locate a connection to Q1 before working on its profile.

    Attributes:
        families (tuple[str, ...]): Families accepted by ``--family``.
    """
    option_names = ('family', 'minima', 'tol', 'bracket', 'epsilon')
    families = (Family.P0_C.value, Family.P3_P.value)

    def add_command_arguments(self, parser):
        parser.add_argument('--family', choices=self.families, default=self.families[0])
        parser.add_argument('--minima', type=int, default=0, help='Minima k of the connecting orbit.')
        parser.add_argument('--tol', type=float, help='Relative bracket width (BISECTION_TOL by default).')
        parser.add_argument('--bracket', type=float, nargs=2, metavar=('LOW', 'HIGH'),
                            help='Bracket hint; scanned over the default grid otherwise.')
        parser.add_argument('--epsilon', type=float, help='Seed distance to the critical point.')

    def locate(self, config):
        """Run the search selected by the options; sigma < 0 uses the sign-of-Y search."""
        options = config.options
        kwargs = {'tol': options.get('tol'), 'controls': config.controls, 'epsilon': options.get('epsilon')}
        bracket = tuple(options['bracket']) if options.get('bracket') else None
        family = Family(options.get('family') or self.families[0])
        k = options.get('minima') or 0
        if family == Family.Q5_THETA:
            return find_deadcore(config.params, k=k, bracket=bracket, **kwargs)
        if family == Family.P3_P:
            return find_p3_connection(config.params, p_interval=bracket, k=k, **kwargs)
        if config.params.sigma < 0:
            return find_negative_sigma(config.params, bracket=bracket, **kwargs)
        return find_connection(config.params, k=k, bracket=bracket, **kwargs)

    def emit_connection(self, config, result, profile, **extra):
        """
        Emit the profile and the result document; add a ConnectionRecord
        when the run is recorded.

        Returns:
            ConnectionResult: ``result`` with ``profile_ref`` set.
        """
        profile_file = emit.emit_profile(config, 'profile', profile)
        ledger_run = getattr(self, 'ledger_run', None)
        if ledger_run is not None:
            low, high = sorted(result.bracket)
            record = ConnectionRecord.objects.create(
                run=ledger_run, family=result.family.value, parameter_star=result.parameter_star,
                bracket_low=low, bracket_high=high, oscillations=result.oscillations,
                q1_signature=result.q1_signature, profile_file=profile_file.name,
            )
            result = replace(result, profile_ref=record.pk)
        else:
            result = replace(result, profile_ref=profile_file.name)
        emit.emit_document(config, 'connection', {**result.as_dict(), **extra})
        signature = 'with' if result.q1_signature else 'without'
        self.success(f'{result.family.value}* = {result.parameter_star:.12g} '
                     f'(k={result.oscillations}, {signature} Q1 signature)')
        return result
