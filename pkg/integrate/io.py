"""Plain-text emission of numeric tables and JSON documents.

Defines:
- write_table / read_table: CSV with ``# key: value`` metadata lines, one
  column header line and 17-significant-digit rows.
- write_records / read_records: the same layout for rows mixing numbers
  and labels.
- write_json / read_json: ``{"meta": ..., "data": ...}`` documents with
  sorted keys.

Notes:
    - Output is byte-stable for identical inputs: no timestamps, fixed float
      format, LF line endings, UTF-8.
"""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

FLOAT_FORMAT = '%.17g'


@dataclass(frozen=True)
class Table:
    meta: dict
    columns: list
    data: np.ndarray

    def column(self, name):
        return self.data[:, self.columns.index(name)]


def _jsonable(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (set, frozenset)):
        return sorted(_jsonable(v) for v in value)
    if hasattr(value, 'as_dict'):
        return value.as_dict()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dumps(value, **kwargs):
    return json.dumps(value, sort_keys=True, default=_jsonable, **kwargs)


def write_table(path, columns, rows, meta=None):
    """
    Write ``rows`` (n x len(columns)) as CSV.

    Args:
        path (str | Path): Output file; parent directories are created.
        columns (list[str]): Column names.
        rows (array-like): Numeric rows.
        meta (dict | None): Metadata written as ``# key: <json>`` lines.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    header = [f'# {key}: {dumps(value)}' for key, value in sorted((meta or {}).items())]
    header.append(','.join(columns))
    np.savetxt(
        path, data, fmt=FLOAT_FORMAT, delimiter=',', newline='\n',
        header='\n'.join(header), comments='', encoding='utf-8',
    )
    return path


def read_table(path):
    """Inverse of ``write_table``; returns a Table."""
    meta, columns, body = {}, None, []
    with open(path, encoding='utf-8') as handle:
        for line in handle:
            if line.startswith('# '):
                key, _, value = line[2:].rstrip('\n').partition(': ')
                meta[key] = json.loads(value)
            elif columns is None:
                columns = line.strip().split(',')
            elif line.strip():
                body.append(line)
    if columns is None:
        raise ValueError(f'{path}: missing column header')
    if body:
        data = np.loadtxt(body, delimiter=',', ndmin=2)
    else:
        data = np.empty((0, len(columns)))
    return Table(meta, columns, data)


def write_json(path, data, meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps({'meta': meta or {}, 'data': data}, indent=2)
    path.write_text(text + '\n', encoding='utf-8')
    return path


def read_json(path):
    """Return ``(meta, data)`` of a document written by ``write_json``."""
    payload = json.loads(Path(path).read_text(encoding='utf-8'))
    return payload['meta'], payload['data']


def _cell(value):
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    text = str(value)
    if ',' in text or '\n' in text:
        raise ValueError(f'cell {text!r} contains a separator')
    return text


def _parse(cell):
    if cell in ('true', 'false'):
        return cell == 'true'
    for kind in (int, float):
        try:
            return kind(cell)
        except ValueError:
            continue
    return cell


def write_records(path, columns, records, meta=None):
    """
    Write rows mixing numbers and labels (fates, ids) as CSV.

    Same layout as ``write_table``; integers and labels are written as is.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f'# {key}: {dumps(value)}' for key, value in sorted((meta or {}).items())]
    lines.append(','.join(columns))
    for record in records:
        if len(record) != len(columns):
            raise ValueError(f'row has {len(record)} cells, expected {len(columns)}')
        lines.append(','.join(_cell(v) for v in record))
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write('\n'.join(lines) + '\n')
    return path


def read_records(path):
    """Inverse of ``write_records``: ``(meta, columns, rows)`` with parsed cells."""
    meta, columns, rows = {}, None, []
    with open(path, encoding='utf-8') as handle:
        for line in handle:
            line = line.rstrip('\n')
            if line.startswith('# '):
                key, _, value = line[2:].partition(': ')
                meta[key] = json.loads(value)
            elif columns is None:
                columns = line.split(',')
            elif line:
                rows.append([_parse(cell) for cell in line.split(',')])
    if columns is None:
        raise ValueError(f'{path}: missing column header')
    return meta, columns, rows
