number = {"type": "number"}
positive = {"type": "number", "exclusiveMinimum": 0}

incidence_schema = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "variant": {"const": "positive_part_linear"},
                "onset_age": number,
                "denominator": positive,
            },
            "required": ["variant"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "variant": {"const": "exponential_first_order"},
                "k0": number,
                "k1": number,
                "k2": number,
            },
            "required": ["variant", "k0", "k1", "k2"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "variant": {"const": "tabulated_grid"},
                "times": {"type": "array", "items": number, "minItems": 2},
                "ages": {"type": "array", "items": number, "minItems": 2},
                "rates": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number", "minimum": 0}},
                },
                "extrapolation": {"enum": ["clamp", "error"]},
            },
            "required": ["variant", "times", "ages", "rates"],
            "additionalProperties": False,
        },
    ]
}

m0_schema = {
    "type": "object",
    "properties": {"xi1": number, "xi2": number, "xi3": number},
    "required": ["xi1", "xi2", "xi3"],
    "additionalProperties": False,
}

ratio_schema = {
    "type": "object",
    "properties": {
        "gamma1": number,
        "gamma2": number,
        "gamma3": number,
        "max_duration": positive,
    },
    "required": ["gamma1", "gamma2", "gamma3"],
    "additionalProperties": False,
}
