from phasespace.points import critical_points

from cli import emit
from cli.base import BlowupCommand


class Command(BlowupCommand):
    help = 'List the critical points of the finite and infinite charts with their linearization.'

    def run(self, config):
        infos = critical_points(config.params)
        for info in infos:
            record = info.as_dict()
            coords = ', '.join(f'{c:.6g}' for c in record['coords'] or ())
            state = record['kind'] if info.exists else 'absent'
            self.stdout.write(f'{record["id"]:<8} {record["chart"] or "-":<12} ({coords}) {state}')
        path = emit.emit_document(config, 'catalog', [info.as_dict() for info in infos])
        self.success(f'{len(infos)} points written to {path}')
