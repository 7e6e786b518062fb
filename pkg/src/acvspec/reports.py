"""Plain-text outputs: CSV tables and matrices with a ``#`` header block, JSON summaries."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__

THRESHOLDS_VERSION = "1"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def header_lines(meta: dict) -> list[str]:
    lines = [f"acvspec {__version__}"]
    lines += [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    return lines


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: list[str], rows, meta: dict | None = None) -> Path:
    """Write rows under a ``# key: value`` header block and a column line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for line in header_lines(meta or {}):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue())
    return path


def write_matrix(path, M: np.ndarray, meta: dict | None = None) -> Path:
    """Row-major CSV dump of a 2-d array with a header block (shape included)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    meta = dict(meta or {})
    meta.setdefault("shape", list(M.shape))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {line}" for line in header_lines(meta)]
    lines += [",".join(repr(float(x)) for x in row) for row in M]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_matrix(path) -> np.ndarray:
    """Read a numeric CSV matrix, skipping ``#`` comment lines."""
    with open(path) as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    try:
        return np.array([[float(x) for x in line.split(",")] for line in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: not a numeric CSV matrix ({exc})") from None


def read_header(path) -> dict:
    """Parse the ``# key: value`` block written by :func:`write_csv`/:func:`write_matrix`."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ": " in body:
                k, v = body.split(": ", 1)
                out[k] = json.loads(v)
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path, payload: dict, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"header": {"version": __version__, **(meta or {})}, **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
    return path


def test_record(statistic: float, threshold: float, passed: bool | None = None, **extra) -> dict:
    """(statistic, threshold, pass) record; pass defaults to statistic < threshold."""
    if passed is None:
        passed = statistic < threshold
    return {"statistic": statistic, "threshold": threshold, "pass": bool(passed), **extra}


test_record.__test__ = False
