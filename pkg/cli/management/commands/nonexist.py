from profiles.nonexistence import nonexistence_predicate

from cli import emit
from cli.base import BlowupCommand


class Command(BlowupCommand):
    help = 'Evaluate the non-existence certificates at (m, N, p, sigma), sigma > 0.'

    def run(self, config):
        verdict = nonexistence_predicate(config.params)
        emit.emit_document(config, 'verdict', verdict.as_dict())
        self.stdout.write(f'verdict: {str(verdict.verdict).lower()}')
        self.stdout.write(f'criterion: {verdict.criterion.value}')
        for name, holds in verdict.sub_criteria.items():
            self.stdout.write(f'  {name}: {str(holds).lower()}')
        if verdict.certificates and not verdict.verdict:
            self.stdout.write(f'certificates without Combined: {", ".join(verdict.certificates)}')
