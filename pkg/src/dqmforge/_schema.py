"""Small helpers for validating JSON payloads with field-level diagnostics."""
from __future__ import annotations

import json
import math
from numbers import Integral, Real
from pathlib import Path
from typing import Any

from dqmforge.errors import InputError

_KINDS = {
    "int": (Integral,),
    "float": (Real,),
    "str": (str,),
    "list": (list,),
    "dict": (dict,),
}


def field(payload: Any, key: str, kind: str, where: str = "payload") -> Any:
    if not isinstance(payload, dict):
        raise InputError(f"{where}: expected a JSON object, got {type(payload).__name__}")
    if key not in payload:
        raise InputError(f"{where}: missing field '{key}'")
    value = payload[key]
    ok = isinstance(value, _KINDS[kind]) and not (kind in ("int", "float") and isinstance(value, bool))
    if kind == "float" and value in ("inf", "-inf"):
        return math.inf if value == "inf" else -math.inf
    if not ok:
        raise InputError(f"{where}: field '{key}' must be {kind}, got {type(value).__name__}")
    return value


def row(item: Any, length: int, key: str, where: str) -> list:
    if not isinstance(item, (list, tuple)) or len(item) != length:
        raise InputError(f"{where}: entries of field '{key}' must be arrays of length {length}")
    for v in item:
        if isinstance(v, bool) or not isinstance(v, Real):
            raise InputError(f"{where}: field '{key}' contains a non-numeric entry {item!r}")
    return list(item)


def encode_float(x: float) -> float | str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_float(x: Any, key: str = "value") -> float:
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if isinstance(x, bool) or not isinstance(x, Real):
        raise InputError(f"field '{key}' must be a number or 'inf', got {x!r}")
    return float(x)


def dumps(payload: Any) -> str:
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def load(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def save(path: str | Path, payload: Any) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload))
