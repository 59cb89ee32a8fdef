"""Published JSON Schemas for the CLI's --json output, one per subcommand.

The schemas are plain dicts (draft-07) so downstream tooling can import
SCHEMAS without pulling in a validator; validate() uses jsonschema when it
is installed.
"""

from __future__ import annotations

_LENGTH_STATS = {
    "type": "object",
    "properties": {"mean": {"type": "number"}, "std": {"type": "number"}},
    "required": ["mean", "std"],
    "additionalProperties": False,
}

_NULLABLE_LENGTH_STATS = {
    "anyOf": [_LENGTH_STATS, {"type": "null"}],
}

_LANGUAGE_STATS = {
    "type": "object",
    "properties": {
        "count": {"type": "integer", "minimum": 0},
        "post_tokens": _LENGTH_STATS,
        "post_chars": _LENGTH_STATS,
        "span_tokens": _NULLABLE_LENGTH_STATS,
        "span_chars": _NULLABLE_LENGTH_STATS,
    },
    "required": ["count", "post_tokens", "post_chars", "span_tokens", "span_chars"],
    "additionalProperties": False,
}

_RATE = {"type": "number", "minimum": 0}

SCHEMAS: dict[str, dict] = {
    "filter": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "filter"},
            "total": {"type": "integer", "minimum": 0},
            "accepted": {"type": "integer", "minimum": 0},
            "rejected": {"type": "integer", "minimum": 0},
            "reasons": {
                "type": "object",
                "properties": {
                    "media_keyword": {"type": "integer", "minimum": 0},
                    "too_short": {"type": "integer", "minimum": 0},
                    "too_long": {"type": "integer", "minimum": 0},
                },
                "required": ["media_keyword", "too_short", "too_long"],
                "additionalProperties": False,
            },
        },
        "required": ["command", "total", "accepted", "rejected", "reasons"],
        "additionalProperties": False,
    },
    "split": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "split"},
            "total": {"type": "integer", "minimum": 0},
            "train": {"type": "integer", "minimum": 0},
            "dev": {"type": "integer", "minimum": 0},
            "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "seed": {"type": "integer"},
        },
        "required": ["command", "total", "train", "dev", "ratio", "seed"],
        "additionalProperties": False,
    },
    "stats": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "stats"},
            "files": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "path": {"type": "string"},
                        "total": {"type": "integer", "minimum": 0},
                        "languages": {
                            "type": "object",
                            "additionalProperties": _LANGUAGE_STATS,
                        },
                    },
                    "required": ["path", "total", "languages"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["command", "files"],
        "additionalProperties": False,
    },
    "annotate": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "annotate"},
            "annotated": {"type": "integer", "minimum": 0},
            "rejected": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "rejects": {"type": "string"},
        },
        "required": ["command", "annotated", "rejected", "out", "rejects"],
        "additionalProperties": False,
    },
    "project": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "project"},
            "projected": {"type": "integer", "minimum": 0},
            "rejected": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "rejects": {"type": "string"},
        },
        "required": ["command", "projected", "rejected", "out", "rejects"],
        "additionalProperties": False,
    },
    "encode": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "encode"},
            "samples": {"type": "integer", "minimum": 0},
            "scheme": {"enum": ["IO", "BIO", "BEO", "BEIO"]},
            "out": {"type": "string"},
        },
        "required": ["command", "samples", "scheme", "out"],
        "additionalProperties": False,
    },
    "eval": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "eval"},
            "mode": {"enum": ["micro", "macro"]},
            "unit": {"enum": ["char", "token"]},
            "documents": {"type": "integer", "minimum": 0},
            "precision": _RATE,
            "recall": _RATE,
            "f1": _RATE,
        },
        "required": [
            "command",
            "mode",
            "unit",
            "documents",
            "precision",
            "recall",
            "f1",
        ],
        "additionalProperties": False,
    },
    "prompt": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "prompt"},
            "kind": {"enum": ["identify", "extract", "span", "language"]},
            "k": {"type": "integer", "minimum": 0},
            "prompts": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "id": {"type": "string"},
                        "prompt": {"type": "string"},
                    },
                    "required": ["id", "prompt"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["command", "kind", "k", "prompts"],
        "additionalProperties": False,
    },
    "llm-run": {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "command": {"const": "llm-run"},
            "model": {"type": "string"},
            "kind": {"enum": ["identify", "extract", "span", "language"]},
            "k": {"type": "integer", "minimum": 0},
            "documents": {"type": "integer", "minimum": 0},
            "precision": _RATE,
            "recall": _RATE,
            "f1": _RATE,
        },
        "required": [
            "command",
            "model",
            "kind",
            "k",
            "documents",
            "precision",
            "recall",
            "f1",
        ],
        "additionalProperties": False,
    },
}


def validate(command: str, payload: dict) -> None:
    """Check a payload against its subcommand schema. Requires jsonschema."""
    import jsonschema

    jsonschema.validate(payload, SCHEMAS[command])
