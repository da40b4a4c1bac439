# utils/io.py

"""
Result files and run manifests.

Tables are written with a fixed float format and JSON with sorted keys, so
that a rerun with the same configuration and seed reproduces every file
byte for byte. Manifests carry no timestamps for the same reason.
"""

import hashlib
import json
import os
from typing import Any, Dict, Iterable, List

import numpy as np
import pandas as pd

FLOAT_FORMAT = '%.12e'
MANIFEST_NAME = 'manifest.json'


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(data: Any, path: str) -> str:
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)
        f.write('\n')
    return path


def write_table(frame: pd.DataFrame, path_stem: str, fmt: str = 'csv') -> str:
    """
    Writes a table as `<stem>.csv` or `<stem>.json` (list of records).

    Returns:
        str: The written path.
    """
    if fmt == 'csv':
        path = path_stem + '.csv'
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path
    if fmt == 'json':
        return write_json(frame.to_dict(orient='records'), path_stem + '.json')
    raise ValueError(f"Unknown output format: {fmt}")


def sha256_file(path: str, chunk_bytes: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_bytes), b''):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(output_dir: str, command: str, config: Dict[str, Any], seed: int,
                   files: Iterable[str]) -> str:
    """
    Writes `manifest.json` listing the command, resolved configuration, seed
    and the SHA-256 of every output file (paths relative to `output_dir`).
    """
    entries: List[Dict[str, str]] = []
    for path in sorted(set(files)):
        entries.append({'path': os.path.relpath(path, output_dir), 'sha256': sha256_file(path)})
    manifest = {'command': command, 'config': config, 'seed': seed, 'files': entries}
    return write_json(manifest, os.path.join(output_dir, MANIFEST_NAME))
