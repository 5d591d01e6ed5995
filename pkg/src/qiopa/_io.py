"""CSV/JSON emitters shared by the exporters and the CLI.

Floats are written with ``repr`` so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def provenance(config: Mapping | None = None) -> dict:
    return {"library": "qiopa", "version": __version__, "config": dict(config or {})}


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> str:
    """CSV with ``# key=value`` comment lines, a header row and one line per row."""
    lines = []
    prov = provenance(meta)
    lines.append(f"# {prov['library']} {prov['version']}")
    for key in sorted(prov["config"]):
        lines.append(f"# {key}={fmt(prov['config'][key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def read_csv(text: str) -> tuple:
    """Parse ``csv_text`` output into (meta, columns, rows of strings)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            item = line[1:].strip()
            if "=" in item:
                k, v = item.split("=", 1)
                meta[k] = v
        elif line:
            body.append(line.split(","))
    return meta, body[0], body[1:]


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def json_text(payload: Mapping, meta: Mapping | None = None) -> str:
    doc = {"provenance": provenance(meta)}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True, default=_default, allow_nan=False) + "\n"
