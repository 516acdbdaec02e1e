"""Lossless JSON and CSV emission for reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from fractions import Fraction
from typing import Any, Iterable, Sequence

import mpmath
import numpy as np

SAFE_INT = 2 ** 53


def to_jsonable(obj: Any) -> Any:
    """Convert a report value into plain JSON types.

    Integers beyond 2^53 become decimal strings, rationals become "p/q"
    strings (just "p" when integral), and non-finite floats become strings.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        v = int(obj)
        return v if abs(v) <= SAFE_INT else str(v)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, mpmath.mpf):
        return mpmath.nstr(obj, 30)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def dumps_jsonl(records: Iterable[Any]) -> str:
    return "".join(json.dumps(to_jsonable(r), sort_keys=True) + "\n" for r in records)


def dumps_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    rows = [to_jsonable(r) for r in rows]
    if columns is None:
        columns = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else _cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)
