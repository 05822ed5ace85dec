"""Small file helpers: atomic writes, eigenvalue CSV and JSON encoding."""
import json
import math
import os
import tempfile

import numpy as np

from .errors import ContractError


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(v):
    """Shortest round-trip repr, with JSON-safe spelling of non-finite values."""
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return repr(v)


def values_to_csv(values, header=True):
    lines = ["value"] if header else []
    lines.extend(format_float(v) for v in values)
    return "\n".join(lines) + "\n"


def read_values_csv(path):
    """Read one float per line; tolerates a ``value`` header, CRLF and blanks."""
    with open(path, "r", newline="") as fh:
        raw = fh.read()
    out = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        item = line.strip().strip(",")
        if not item:
            continue
        if lineno == 1 and item.lower() == "value":
            continue
        try:
            out.append(float(item))
        except ValueError:
            raise ContractError(f"{path}:{lineno}: not a number: {item!r}") from None
    if not out:
        raise ContractError(f"{path}: no values")
    return np.asarray(out, dtype=float)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    # non-finite floats are emitted as null to keep strict JSON
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.generic):
        return _clean(o.item())
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    return o


def dumps(obj):
    """Deterministic JSON (sorted keys, non-finite floats as null)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, default=_default, allow_nan=False) + "\n"
