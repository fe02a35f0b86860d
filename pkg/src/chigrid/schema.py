EXPERIMENT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "https://chigrid.example/experiment.schema.json",
    "title": "Experiment",
    "description": "Joint maxima experiment for a chi-process over a grid",
    "type": "object",
    "additionalProperties": False,
    "required": ["m", "alpha", "r", "T", "grid", "n_rep", "master_seed"],
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
        "r": {"type": "number", "minimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "family": {"type": "string", "enum": ["exp_power", "strong_mixture"]},
        "eta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n_rep": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string", "enum": ["sparse", "pickands", "dense"]},
                "D": {"type": "number", "exclusiveMinimum": 0},
                "delta0": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "eval_points": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "number"},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "source": {"type": "string", "enum": ["estimate", "provided"]},
                "H_alpha": {"type": "number", "exclusiveMinimum": 0},
                "H_D_alpha": {"type": "number", "exclusiveMinimum": 0},
                "pickands_term": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["x", "y", "value"],
                        "properties": {
                            "x": {"type": "number"},
                            "y": {"type": "number"},
                            "value": {"type": "number", "minimum": 0},
                            "stderr": {"type": ["number", "null"]},
                        },
                    },
                },
                "n_rep": {"type": "integer", "minimum": 100},
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "method": {"type": "string", "enum": ["window", "normalized"]},
            },
        },
    },
}
