from django.core.management import load_command_class
from django.core.management.base import BaseCommand, CommandError

from cli.models import Run


class Command(BaseCommand):
    help = 'List recorded runs, or replay one from its stored RunConfig.'

    def add_arguments(self, parser):
        parser.add_argument('--replay', type=int, metavar='ID', help='Re-execute the run with this id.')
        parser.add_argument('--limit', type=int, default=20, help='Number of runs listed.')

    def handle(self, *args, **options):
        if options['replay'] is None:
            for run in Run.objects.all()[:options['limit']]:
                self.stdout.write(str(run))
            return
        try:
            run = Run.objects.get(pk=options['replay'])
        except Run.DoesNotExist:
            raise CommandError(f'no recorded run with id {options["replay"]}', returncode=2)
        command = load_command_class('cli', run.command)
        command.stdout, command.stderr = self.stdout, self.stderr
        command.replay(run.config)
        self.stdout.write(self.style.SUCCESS(f'replayed {run}'))
