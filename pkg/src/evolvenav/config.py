"""Flat ``key = value`` config files mirroring the typed dataclass configs.

Blank lines and ``#`` comments are ignored. Values are parsed as Python
literals where possible (numbers, booleans, tuples, None) and fall back to
plain strings. Keys may be prefixed with a section name (``reward.alpha``)
so one file can hold several configs.
"""
from __future__ import annotations

import ast
import dataclasses
from pathlib import Path


class ConfigError(ValueError):
    pass


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def parse_config_text(text: str, source: str = "<string>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = _parse_value(value)
    return out


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def section(values: dict, name: str) -> dict:
    """Entries ``name.key`` with the prefix stripped, plus unprefixed keys."""
    prefix = name + "."
    out = {k: v for k, v in values.items() if "." not in k}
    out.update({k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)})
    return out


def build(cls, values: dict, strict: bool = False, **overrides):
    """Instantiate dataclass ``cls`` from the keys it knows; unknown keys raise if ``strict``."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if strict and unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {k: v for k, v in values.items() if k in names}
    for k, v in kw.items():
        if isinstance(v, list):
            kw[k] = tuple(v)
    kw.update(overrides)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def format_config(obj, prefix: str = "") -> str:
    lines = []
    for f in dataclasses.fields(obj):
        lines.append(f"{prefix}{f.name} = {getattr(obj, f.name)!r}")
    return "\n".join(lines) + "\n"
