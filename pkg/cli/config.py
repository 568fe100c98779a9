"""Run configuration shared by every management command.

Defines:
- OutputFormat: csv or json for tabular emissions.
- RunConfig: everything a run needs to be reproduced.
- load_config_file(): the flat KEY=value file given with ``--config``.
- merge_sources(): flags over config file over settings defaults.

Notes:
    - A RunConfig round-trips through ``as_dict`` / ``from_dict``; replaying
      a recorded run only needs that dictionary.
"""

from dataclasses import dataclass, field
from pathlib import Path

from django.db import models
from dotenv import dotenv_values

from integrate.solver import Controls
from params.exponents import Params

CONTROL_KEYS = ('rel_tol', 'abs_tol', 's_max', 'radius_max')
PARAM_KEYS = ('m', 'N', 'p', 'sigma')


class OutputFormat(models.TextChoices):
    CSV = 'csv', 'CSV'
    JSON = 'json', 'JSON'


@dataclass(frozen=True)
class RunConfig:
    """
    Attributes:
        command (str): Management command name.
        params (Params | None): Problem parameters (None only for tables
            that do not need p).
        controls (Controls): Integrator settings.
        options (dict): Command specific options, JSON-ready.
        output_dir (Path): Directory receiving the emitted files.
        format (OutputFormat): Format of tabular emissions.
    """
    command: str
    params: Params
    controls: Controls
    options: dict = field(default_factory=dict)
    output_dir: Path = Path('output')
    format: OutputFormat = OutputFormat.CSV

    def as_dict(self):
        return {
            'command': self.command,
            'params': self.params.as_dict() if self.params is not None else None,
            'controls': self.controls.as_dict(),
            'options': self.options,
            'output_dir': str(self.output_dir),
            'format': OutputFormat(self.format).value,
        }

    @classmethod
    def from_dict(cls, data):
        controls = {key: data['controls'][key] for key in (*CONTROL_KEYS, 'max_step', 'method')
                    if key in data['controls']}
        params = Params(**data['params']) if data.get('params') else None
        return cls(
            command=data['command'],
            params=params,
            controls=Controls.from_settings(**controls),
            options=dict(data.get('options') or {}),
            output_dir=Path(data.get('output_dir', 'output')),
            format=OutputFormat(data.get('format', OutputFormat.CSV)),
        )


def load_config_file(path):
    """
    Read a ``KEY=value`` file; keys are case-insensitive except ``N``.

    Returns:
        dict: Raw string values keyed like the command-line options.
    """
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            continue
        name = key.strip().replace('-', '_')
        values[name if name == 'N' else name.lower()] = value
    return values


def merge_sources(flags, config_path=None):
    """Raw form data: non-None ``flags`` override the config file."""
    data = load_config_file(config_path) if config_path else {}
    data.update({key: value for key, value in flags.items() if value is not None})
    return data
