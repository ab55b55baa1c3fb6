"""
JSON schema of the run configuration, assembled from the app fragments.
"""

from apps.estimation.schema import fit_schema
from apps.rates.schema import incidence_schema, m0_schema, ratio_schema
from apps.simulation.schema import simulation_schema

quadrature_schema = {
    "type": "object",
    "properties": {
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "abs_tol": {"type": "number", "exclusiveMinimum": 0},
        "max_subdivisions": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

output_schema = {
    "type": "object",
    "properties": {
        "directory": {"type": "string", "minLength": 1},
        "formats": {
            "type": "array",
            "items": {"enum": ["csv", "json"]},
            "uniqueItems": True,
        },
    },
    "additionalProperties": False,
}

run_config_schema = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "incidence": incidence_schema,
        "m0": m0_schema,
        "ratio": ratio_schema,
        "quadrature": quadrature_schema,
        "simulation": simulation_schema,
        "fit": fit_schema,
        "output": output_schema,
    },
    "required": ["incidence", "m0", "ratio"],
    "additionalProperties": False,
}
