"""Deterministic file output: CSV, JSON, checksums.

Every writer here produces byte-identical files for identical inputs,
which is what makes end-to-end determinism testable at the file level.
Floats are rendered with repr() (shortest round-trip form, '.' decimal),
lines end with '\\n', and JSON keys are sorted.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np


def format_value(value: Any) -> str:
    """Render one scalar for CSV output."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, columns: Sequence[tuple[str, Sequence[Any]]]) -> Path:
    """Write named columns as a CSV file with a header row.

    ``columns`` is an ordered list of (name, values) pairs; all value
    sequences must have equal length.
    """
    path = Path(path)
    names = [name for name, _ in columns]
    arrays = [np.asarray(vals) for _, vals in columns]
    if arrays:
        n = len(arrays[0])
        for name, arr in zip(names, arrays):
            if len(arr) != n:
                raise ValueError(f"column {name!r} has length {len(arr)}, expected {n}")
    else:
        n = 0
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(format_value(arr[i]) for arr in arrays))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and dataclasses to JSON types.

    Non-finite floats become null so the output stays strict JSON.
    """
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: str | Path, payload: Any) -> Path:
    """Write a JSON document with sorted keys and two-space indentation."""
    path = Path(path)
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _coerce(text: str) -> Any:
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv_columns(path: str | Path) -> list[tuple[str, list]]:
    """Inverse of write_csv: parse a CSV file back into named columns."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    names = lines[0].split(",")
    cols: list[list] = [[] for _ in names]
    for line in lines[1:]:
        for col, cell in zip(cols, line.split(",")):
            col.append(_coerce(cell))
    return list(zip(names, cols))


def csv_to_json(csv_path: str | Path) -> Path:
    """Rewrite a CSV produced by write_csv as a JSON column document."""
    csv_path = Path(csv_path)
    payload = {"columns": dict(read_csv_columns(csv_path))}
    json_path = csv_path.with_suffix(".json")
    write_json(json_path, payload)
    csv_path.unlink()
    return json_path


def file_checksum(path: str | Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def checksum_files(paths: Sequence[str | Path]) -> dict[str, str]:
    """Map file name to SHA-256 digest, sorted by name."""
    out = {Path(p).name: file_checksum(p) for p in paths}
    return dict(sorted(out.items()))
