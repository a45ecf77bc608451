from __future__ import annotations

"""Deterministic JSON report envelopes and CSV emission."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from jsonschema import Draft202012Validator

from .errors import ConfigError
from .journal import BuildInfo


REPORT_SCHEMA_VERSION = "1.0"
CSV_FLOAT_FORMAT = "%.17g"

ENVELOPE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "config", "build", "result"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "command": {"enum": ["leaves", "flow", "shoot", "translate", "verify", "spectrum"]},
        "config": {"type": "object"},
        "build": {
            "type": "object",
            "required": ["version", "python_version", "platform"],
            "properties": {
                "version": {"type": "string"},
                "git_sha": {"type": ["string", "null"]},
                "python_version": {"type": "string"},
                "platform": {"type": "string"},
            },
        },
        "result": {"type": ["object", "array"]},
    },
}

_VALIDATOR = Draft202012Validator(ENVELOPE_SCHEMA)


def normalize(value: Any) -> Any:
    """Plain JSON types: numpy scalars/arrays unwrapped, `to_dict` objects expanded, non-finite floats to None."""

    if hasattr(value, "to_dict") and not isinstance(value, (pd.DataFrame, pd.Series)):
        return normalize(value.to_dict())
    if isinstance(value, dict):
        return {str(key): normalize(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(item) for item in value]
    if isinstance(value, np.ndarray):
        return [normalize(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


def _encode(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [pad + _encode(item, indent, level + 1) for item in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{_encode(key, indent, level + 1)}: {_encode(value[key], indent, level + 1)}" for key in sorted(value)
        ]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    raise TypeError(f"cannot encode {type(value).__name__} in a report")


def dumps(value: Any, indent: int = 2) -> str:
    """Sorted keys, 17 significant digits, non-finite values as null."""

    return _encode(normalize(value), indent, 0)


def build_envelope(command: str, config: dict[str, Any], result: Any, build: BuildInfo) -> dict[str, Any]:
    envelope = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": normalize(config),
        "build": build.to_dict(),
        "result": normalize(result),
    }
    errors = sorted(_VALIDATOR.iter_errors(envelope), key=lambda error: [str(part) for part in error.path])
    if errors:
        raise ConfigError(
            "report_schema_violation",
            f"report envelope does not match schema {REPORT_SCHEMA_VERSION}: {errors[0].message}",
            path=[str(part) for part in errors[0].path],
        )
    return envelope


def write_report(path: Path, command: str, config: dict[str, Any], result: Any, build: BuildInfo) -> Path:
    envelope = build_envelope(command, config, result, build)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(envelope) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path
