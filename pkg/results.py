"""
Emission of experiment results as CSV or JSON.

CSV files have one header row of ResultRecord field names and floats with
17 significant digits; JSON documents add a provenance block and the run
summary.
"""

import csv
import io
import json
import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence

import click
import numpy as np

from config import ARTIFACT_VERSION
from errors import InvalidInputError
from models import ResultRecord, format_value, parse_parameters

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ('csv', 'json')


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def render_csv(rows: Iterable[Dict[str, Any]], fieldnames: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow({key: format_value(row.get(key)) for key in fieldnames})
    return buffer.getvalue()


def render_json(rows: List[Dict[str, Any]], summary: Optional[Dict[str, Any]] = None,
                provenance: Optional[Dict[str, Any]] = None) -> str:
    document = {
        'artifact_version': ARTIFACT_VERSION,
        'provenance': provenance or {},
        'summary': summary or {},
        'records': rows,
    }
    return json.dumps(document, indent=2, sort_keys=True, default=_json_default) + '\n'


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == '-':
        click.echo(text, nl=False)
        return
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(text)
    logger.info(f'Wrote {path}')


def write_table(rows: List[Dict[str, Any]], fieldnames: Sequence[str], path: Optional[str] = None,
                fmt: str = 'csv', summary: Optional[Dict[str, Any]] = None,
                provenance: Optional[Dict[str, Any]] = None) -> None:
    """Write plain rows; in CSV the summary goes to stderr as key=value lines."""
    if fmt not in OUTPUT_FORMATS:
        raise InvalidInputError(f'Unknown output format: {fmt}')
    if fmt == 'json':
        _emit(render_json(rows, summary, provenance), path)
        return
    _emit(render_csv(rows, fieldnames), path)
    for key in sorted(summary or {}):
        click.echo(f'summary {key}={format_value(summary[key])}', err=True)


def write_records(records: Sequence[ResultRecord], path: Optional[str] = None, fmt: str = 'csv',
                  summary: Optional[Dict[str, Any]] = None,
                  provenance: Optional[Dict[str, Any]] = None) -> None:
    """Write a ResultRecord stream in the requested format."""
    if fmt == 'csv':
        rows = [record.to_row() for record in records]
    else:
        rows = [record.to_dict() for record in records]
    write_table(rows, ResultRecord.field_names(), path, fmt, summary, provenance)


def read_records(path: str) -> List[Dict[str, Any]]:
    """
    Load a CSV written by write_records.

    Numeric columns come back as floats, parameters as a dict of strings.
    """
    try:
        with open(path, encoding='utf-8', newline='') as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            missing = [name for name in ('command', 'parameters', 'E_F') if name not in header]
            if missing:
                raise InvalidInputError(f'{path} lacks columns {", ".join(missing)}')
            rows = list(reader)
    except OSError as exc:
        raise InvalidInputError(f'Cannot read {path}: {exc}')

    records = []
    for line, row in enumerate(rows, start=2):
        try:
            record: Dict[str, Any] = dict(row)
            record['parameters'] = parse_parameters(row['parameters'])
            record['E_F'] = float(row['E_F'])
        except ValueError as exc:
            raise InvalidInputError(f'{path}:{line}: {exc}')
        records.append(record)
    return records
