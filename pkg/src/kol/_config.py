"""Experiment configuration: published JSON schema, merging, hashing.

A run is described by one JSON document.  Command-line flags override
config-file fields, which override built-in defaults; the resolved
document (minus machine-local fields) is hashed and the hash stamped
into every output file, so identical configs always produce identical
bytes regardless of where or how wide they ran.
"""

from __future__ import annotations

import json

import jsonschema

from . import _io

SCHEMA_VERSION = 1

# machine-local knobs: they steer scheduling and placement, never results,
# and are excluded from the semantic hash
VOLATILE_KEYS = ("out", "workers")

_RATE_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "piecewise"},
                "c_plus": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "arctan"},
                "stiffness": {"type": "number", "exclusiveMinimum": 0},
                "offset": {"type": "number"},
            },
            "required": ["kind", "stiffness"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "exponential"},
                "prefactor": {"type": "number"},
                "alpha0": {"type": "number"},
                "y0": {"type": "number"},
                "max_rate": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "prefactor", "alpha0", "y0"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "tabulated"},
                "knots": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
            "required": ["kind", "knots"],
            "additionalProperties": False,
        },
    ],
}

_WINDOW_SCHEMA = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "kol experiment configuration",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "eps": {"type": "number", "minimum": 0},
        "x0": {"type": "number"},
        "rate": _RATE_SCHEMA,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "samples": {"type": "integer", "minimum": 1},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "out": {"type": "string", "minLength": 1},
        "bin_width": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0},
                {"const": "auto"},
            ]
        },
        "grid": {
            "type": "object",
            "properties": {
                "x_min": {"type": "number"},
                "x_max": {"type": "number"},
                "n_nodes": {"type": "integer", "minimum": 16},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "sigma0": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "times": {
            "type": "object",
            "properties": {
                "start": {"type": "number", "exclusiveMinimum": 0},
                "stop": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 2},
                "spacing": {"enum": ["linear", "log"]},
            },
            "required": ["start", "stop", "count"],
            "additionalProperties": False,
        },
        "windows": {
            "type": "object",
            "properties": {
                "power": _WINDOW_SCHEMA,
                "exponential": _WINDOW_SCHEMA,
                "transition": _WINDOW_SCHEMA,
            },
            "additionalProperties": False,
        },
        "snapshot_times": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
        },
    },
    "additionalProperties": False,
}


class ConfigSchemaError(Exception):
    """A config document violates the published schema.

    Maps to exit status 2; `payload` is the machine-readable error body.
    """

    def __init__(self, payload: dict):
        self.payload = payload
        super().__init__(payload.get("message", "config schema violation"))


def validate_config(doc) -> None:
    """Check a parsed config document against CONFIG_SCHEMA."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigSchemaError(
            {
                "kind": "config-schema",
                "path": [str(p) for p in first.absolute_path],
                "message": first.message,
                "error_count": len(errors),
            }
        )


def load_config(path: str) -> dict:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigSchemaError(
            {"kind": "config-unreadable", "path": [path], "message": str(e)}
        ) from None
    except json.JSONDecodeError as e:
        raise ConfigSchemaError(
            {"kind": "config-parse", "path": [path], "message": str(e)}
        ) from None
    validate_config(doc)
    return doc


def resolve(defaults: dict, config: dict, flags: dict) -> dict:
    """Three-layer merge with precedence flags > config > defaults.

    `flags` entries that are None (flag not given) are skipped.  Only
    top-level keys merge; nested objects replace wholesale, which keeps
    the provenance of every value obvious.
    """
    out = dict(defaults)
    for k, v in config.items():
        if k != "schema_version":
            out[k] = v
    for k, v in flags.items():
        if v is not None:
            out[k] = v
    return out


def semantic_config(resolved: dict) -> dict:
    """The hash-relevant view: resolved config minus machine-local keys."""
    doc = {k: v for k, v in resolved.items() if k not in VOLATILE_KEYS}
    doc["schema_version"] = SCHEMA_VERSION
    return doc


def config_digest(resolved: dict) -> str:
    return _io.json_digest(semantic_config(resolved))
