"""Line-oriented ``key=value`` config files and deterministic report serialization."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    """Bad config file or option value; maps to exit status 2."""


def read_config(path) -> list[tuple[int, str, str]]:
    """Return ``(line_number, key, value)`` triples.

    Blank lines and lines starting with ``#`` are skipped. Keys use the long
    option name with or without the leading dashes; ``-`` and ``_`` are
    interchangeable.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not sep or not key:
            raise ConfigError(f"{path}:{no}: expected key=value, got {raw!r}")
        out.append((no, key, value.strip()))
    return out


def config_tokens(path, actions: dict) -> list[str]:
    """Turn a config file into argv tokens for the parser whose actions are given.

    ``actions`` maps option dest to its argparse action. Values are
    type-checked here so errors carry the file line.
    """
    tokens = []
    for no, key, value in read_config(path):
        act = actions.get(key)
        if act is None:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        flag = max(act.option_strings, key=len)
        if act.nargs == 0:
            low = value.lower()
            if low not in TRUE_WORDS | FALSE_WORDS:
                raise ConfigError(f"{path}:{no}: {key} expects true/false, got {value!r}")
            if low in TRUE_WORDS:
                tokens.append(flag)
            continue
        values = value.split() if isinstance(act, argparse._AppendAction) else [value]
        for val in values:
            try:
                conv = act.type(val) if act.type else val
            except (TypeError, ValueError):
                raise ConfigError(f"{path}:{no}: bad value {val!r} for {key}") from None
            if act.choices is not None and conv not in act.choices:
                raise ConfigError(f"{path}:{no}: {key} must be one of {sorted(act.choices)}")
            tokens += [flag, val]
    return tokens


def jsonable(x):
    """Recursively convert to plain JSON types; nan -> null, inf -> "inf"."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return jsonable(dataclasses.asdict(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if x is None or isinstance(x, str):
        return x
    return str(x)


def dump_json(report: dict) -> str:
    body = dict(report, schema_version=SCHEMA_VERSION)
    return json.dumps(jsonable(body), sort_keys=True, indent=2, allow_nan=False) + "\n"
