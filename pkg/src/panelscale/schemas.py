"""Published JSON schema for the test report (result.json)."""

RESULT_SCHEMA_VERSION = 1

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "panelscale test result",
    "type": "object",
    "required": [
        "schema_version",
        "alpha",
        "B",
        "seed",
        "q_alpha",
        "psi_hat",
        "reject_global",
        "rejections",
        "config",
    ],
    "properties": {
        "schema_version": {"const": RESULT_SCHEMA_VERSION},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "B": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "q_alpha": {"type": "number"},
        "psi_hat": {"type": "number"},
        "reject_global": {"type": "boolean"},
        "rejections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["i", "j", "unit_i", "unit_j", "u", "h", "stat", "exceedance"],
                "properties": {
                    "i": {"type": "integer", "minimum": 0},
                    "j": {"type": "integer", "minimum": 0},
                    "unit_i": {"type": "string"},
                    "unit_j": {"type": "string"},
                    "u": {"type": "number"},
                    "h": {"type": "number"},
                    "stat": {"type": "number"},
                    "exceedance": {"type": "number"},
                },
            },
        },
        "minimal_rejections": {"type": "array"},
        "fallback_gridpoints": {"type": "array", "items": {"type": "integer"}},
        "config": {
            "type": "object",
            "required": ["n_units", "n_time", "n_covariates", "kernel", "grid"],
        },
    },
}
