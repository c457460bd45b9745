"""CSV tables and their metadata sidecars."""

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return "" if value is None else str(value)


def table_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_table(path, header, rows):
    Path(path).write_text(table_text(header, rows), encoding="utf-8")


def config_digest(*texts):
    digest = hashlib.sha256()
    for text in texts:
        digest.update(text.encode("utf-8"))
    return digest.hexdigest()


def write_metadata(directory, command, config_texts, seed=None, files=()):
    """Sidecar recording what produced the tables; contains nothing run-specific."""
    meta = {
        "command": command,
        "config_sha256": config_digest(*config_texts),
        "version": __version__,
        "seed": seed,
        "files": sorted(files),
    }
    path = Path(directory) / "metadata.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
