"""
CSV and JSON artifact writers.

Every file carries the config hash and tool version: CSV files as leading
'# key=value' comment lines, JSON files as top-level keys. Floats are written
with 17 significant digits so a write/read cycle is bit-exact, and nothing
time-dependent is ever written, which keeps repeated runs byte-identical.
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from config import APP_VERSION

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def header_lines(config_hash: str, extra: Mapping[str, Any] = None) -> List[str]:
    items = {"config_hash": config_hash, "version": APP_VERSION}
    if extra:
        items.update(extra)
    return [f"# {k}={format_value(v)}" for k, v in items.items()]


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    config_hash: str,
    extra_header: Mapping[str, Any] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            for line in header_lines(config_hash, extra_header):
                f.write(line + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            count = 0
            for row in rows:
                writer.writerow([format_value(row[c]) for c in columns])
                count += 1
    except OSError as e:
        logger.error(f"✗ Could not write {path}: {e}")
        raise
    logger.info(f"✓ Wrote {path} ({count} rows)")
    return path


def read_csv(path: Path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Return (header comments, rows as strings) of a file written by write_csv."""
    meta: Dict[str, str] = {}
    body: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else format_value(v)
    if hasattr(value, "model_dump"):
        return _jsonable(value.model_dump())
    return value


def write_json(path: Path, payload: Mapping[str, Any], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"config_hash": config_hash, "version": APP_VERSION}
    document.update(_jsonable(dict(payload)))
    try:
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"✗ Could not write {path}: {e}")
        raise
    logger.info(f"✓ Wrote {path}")
    return path
