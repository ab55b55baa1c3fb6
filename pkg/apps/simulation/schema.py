simulation_schema = {
    "type": "object",
    "properties": {
        "births_per_year": {"type": "integer", "minimum": 1},
        "calibrate_to": {"type": "integer", "minimum": 1},
        "birth_window": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "cross_section_time": {"type": "number"},
        "age_groups": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "items": {"type": "number", "minimum": 0},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "rng_seed": {"type": "integer", "minimum": 0, "maximum": 18446744073709551615},
        "max_age": {"type": "number", "exclusiveMinimum": 0},
        "dump_ledger": {"type": "boolean"},
    },
    "additionalProperties": False,
}
