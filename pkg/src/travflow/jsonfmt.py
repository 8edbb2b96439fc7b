"""Canonical JSON output.

Reports are diffed and committed, so serialization is normalized:
keys sorted, floats rounded to 12 significant digits, negative zero
flattened, numpy scalars unwrapped, and a trailing newline.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import TravflowError


def _normalize(value):
    if isinstance(value, dict):
        return {str(key): _normalize(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_normalize(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == 0.0:
            return 0.0
        return float("%.12g" % value)
    return value


def canonical_text(data):
    try:
        return json.dumps(_normalize(data), sort_keys=True, indent=2,
                          allow_nan=False) + "\n"
    except ValueError as exc:
        raise TravflowError(f"value not serializable canonically: {exc}") from None


def dump_canonical(data, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(canonical_text(data))


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise TravflowError(f"cannot read {path}: {exc}") from None
