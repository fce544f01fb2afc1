"""JSON schema for ``verdict.json``; a copy is published at docs/verdict.schema.json."""

VERDICT_SCHEMA_ID = "nonlocal-fv/verdict/1"

_num = {"type": "number"}
_opt_int = {"type": ["integer", "null"]}

VERDICT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": VERDICT_SCHEMA_ID,
    "title": "Run verdict",
    "type": "object",
    "required": ["schema", "config_hash", "config", "verdict", "final_time", "steps", "health"],
    "properties": {
        "schema": {"const": VERDICT_SCHEMA_ID},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "config": {
            "type": "object",
            "required": ["params", "grid", "scheme", "ic", "thresholds", "seed"],
        },
        "verdict": {
            "type": "object",
            "required": [
                "stop_reason", "solution_kind", "symmetry", "label",
                "peak_count", "aggregation_count", "symmetry_residual", "t0", "stop_time",
            ],
            "properties": {
                "stop_reason": {"enum": ["Continue", "FinalTimeReached", "SteadyStateStop", "Aborted"]},
                "solution_kind": {"enum": ["TransientOnly", "SteadyState", "NonConvergent", "Undetermined"]},
                "symmetry": {"enum": ["Odd", "Even", "NonSymmetric"]},
                "label": {"type": "string", "pattern": "^([0-9]+-)?(ODD|EVEN|NON)$"},
                "peak_count": {"type": "integer", "minimum": 0},
                "aggregation_count": {"type": "integer", "minimum": 0},
                "symmetry_residual": _num,
                "t0": _opt_int,
                "stop_time": _opt_int,
            },
        },
        "minima": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "E", "kind"],
                "properties": {
                    "t": {"type": "integer"},
                    "E": _num,
                    "kind": {"enum": ["Transient", "SteadyState", "Undetermined"]},
                },
            },
        },
        "nonconvergence": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["flagged", "band"],
                    "properties": {
                        "flagged": {"type": "boolean"},
                        "band": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                    },
                },
            ]
        },
        "final_time": {"type": "integer", "minimum": 0},
        "steps": {"type": "integer", "minimum": 0},
        "wall_clock_s": _num,
        "mass_initial": _num,
        "mass_final": _num,
        "health": {
            "type": "object",
            "required": ["first_negative_step", "nonfinite", "flagged"],
        },
        "kernels": {"type": "object"},
    },
}
