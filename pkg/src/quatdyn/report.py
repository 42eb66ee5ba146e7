"""Helpers for JSON-serializable reports."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from fractions import Fraction

import numpy as np

from . import __version__


def jsonable(obj):
    """Recursively convert numpy, complex, enum and dataclass values to JSON types."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if hasattr(obj, "to_dict") and not isinstance(obj, type):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _num(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return x


def dumps(report) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True)


def envelope(command: str, config: dict, seed: int | None, payload: dict) -> dict:
    """Standard report wrapper carrying config, seed and tool version."""
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        **payload,
    }
