"""Output file helpers"""

import csv
import json
import os

from advsyn.exceptions import DataError


def ensure_dir(path):
    """Create path and its parents if missing, returning path"""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as error:
        raise DataError('{}: cannot create directory ({})'.format(path, error))
    return path


def write_csv(path, rows, header=None):
    """Write rows with ``\\n`` line endings, prefixed by header when given"""
    parent = os.path.dirname(path)
    if parent:
        ensure_dir(parent)
    try:
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            if header is not None:
                writer.writerow(header)
            writer.writerows(rows)
    except OSError as error:
        raise DataError('{}: {}'.format(path, error))
    return path


def write_json(path, data):
    """Write data as sorted, indented JSON ending with a newline"""
    parent = os.path.dirname(path)
    if parent:
        ensure_dir(parent)
    try:
        with open(path, 'w') as f:
            f.write(json.dumps(data, indent=2, sort_keys=True) + '\n')
    except OSError as error:
        raise DataError('{}: {}'.format(path, error))
    return path
