number = {"type": "number"}
interval = {"type": "array", "items": number, "minItems": 2, "maxItems": 2}
components = ("gamma1", "gamma2", "gamma3")

fit_schema = {
    "type": "object",
    "properties": {
        "bounds": {
            "type": "object",
            "properties": {name: interval for name in components},
            "additionalProperties": False,
        },
        "initial_points": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": number, "minItems": 3, "maxItems": 3},
        },
        "fixed": {
            "type": "object",
            "properties": {name: number for name in components},
            "additionalProperties": False,
        },
        "xatol": {"type": "number", "exclusiveMinimum": 0},
        "fatol": {"type": "number", "exclusiveMinimum": 0},
        "max_iterations": {"type": "integer", "minimum": 1},
        "restarts": {"type": "integer", "minimum": 0},
        "group_evaluation": {"enum": ["midpoint", "averaged"]},
        "include_binomial_coefficient": {"type": "boolean"},
        "hessian_step": {"type": "number", "exclusiveMinimum": 0},
        "echo_input": {"type": "boolean"},
    },
    "additionalProperties": False,
}
