"""File emission for the management commands.

Defines:
- header(): metadata embedded in every emitted file.
- emit_rows(): tabular output in the configured format.
- emit_document(): JSON document.
- emit_trajectory() / emit_profile(): CSV of an orbit or a profile.

Notes:
    - File names are derived from the command and the caller's stem only,
      so identical RunConfigs overwrite identical files byte for byte.
"""

import logging

from django.conf import settings

from integrate import io

from .config import OutputFormat

logger = logging.getLogger(__name__)


def header(config, **extra):
    return {'run_config': config.as_dict(), 'version': settings.BLOWUP_VERSION, **extra}


def _path(config, stem, suffix):
    return config.output_dir / f'{config.command}_{stem}.{suffix}'


def emit_rows(config, stem, columns, rows, **extra):
    """Write ``rows`` as CSV records or as a JSON list of objects."""
    if OutputFormat(config.format) == OutputFormat.JSON:
        data = [dict(zip(columns, row)) for row in rows]
        path = io.write_json(_path(config, stem, 'json'), data, header(config, **extra))
    else:
        path = io.write_records(_path(config, stem, 'csv'), columns, rows, header(config, **extra))
    logger.debug('wrote %s', path)
    return path


def emit_document(config, stem, data, **extra):
    path = io.write_json(_path(config, stem, 'json'), data, header(config, **extra))
    logger.debug('wrote %s', path)
    return path


def emit_trajectory(config, stem, traj, **extra):
    return traj.to_csv(_path(config, stem, 'csv'), header(config, **extra))


def emit_profile(config, stem, profile, **extra):
    return profile.to_csv(_path(config, stem, 'csv'), header(config, **extra))
