"""Canonical JSON plumbing so repeated runs emit identical bytes."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

from .errors import DataError
from .rng import GENERATOR_NAME

TOOL_VERSION = "0.1.0"


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def read_json(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"unreadable file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in {path}: {exc}") from exc


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def build_meta(config: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """The meta block every JSON output carries: version, config hash, generator."""
    payload = canonical_dumps(dict(config) if config else {})
    return {
        "tool_version": TOOL_VERSION,
        "config_hash": sha256_hex(payload),
        "generator_name": GENERATOR_NAME,
    }
