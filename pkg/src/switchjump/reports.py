"""CSV report writing with provenance columns.

Every report starts with a single `# generated: <timestamp>` header line and
then plain CSV; rows carry the seed and config hash.  Two runs with identical
config and seed produce byte-identical files apart from that header line.
"""

from __future__ import annotations

import csv
import io
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = ["write_report", "read_report", "strip_timestamp_header", "format_value"]


def format_value(v) -> str:
    """Stable scalar formatting: repr-precision floats, plain ints/strings."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_report(path: str, fieldnames: Sequence[str], rows: Sequence[dict],
                 seed: Optional[int], config_hash: str,
                 timestamp: Optional[str] = None) -> None:
    """Write rows (dicts keyed by fieldnames) plus seed/config_hash columns."""
    fieldnames = list(fieldnames)
    for extra in ("seed", "config_hash"):
        if extra not in fieldnames:
            fieldnames.append(extra)
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat()
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        full = dict(row)
        full.setdefault("seed", seed)
        full.setdefault("config_hash", config_hash)
        unknown = set(full) - set(fieldnames)
        if unknown:
            raise DomainError(f"row has fields outside the header: {sorted(unknown)}")
        writer.writerow({k: format_value(v) if v is not None else ""
                         for k, v in full.items()})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# generated: {timestamp}\n")
        fh.write(buf.getvalue())


def strip_timestamp_header(text: str) -> str:
    """Drop the leading `# generated:` line, the only run-dependent content."""
    lines = text.splitlines(keepends=True)
    if lines and lines[0].startswith("# generated:"):
        return "".join(lines[1:])
    return text


def read_report(path: str):
    """Read a report back as (fieldnames, list of dict rows)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = strip_timestamp_header(fh.read())
    reader = csv.DictReader(io.StringIO(text))
    return reader.fieldnames, list(reader)
