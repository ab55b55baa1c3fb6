"""
Writers for command outputs.

Every file is written to a temporary file in the target directory and
moved into place with os.replace, so readers never see a partial file.
"""

import json
import logging
import math
import os
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd

from apps.analysis.results import Method
from apps.estimation.params import COMPONENTS
from .readers import TABLE_COLUMNS, TOTAL_LABEL

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"

CURVE_COLUMNS = {
    Method.PSEUDO_CONVOLUTION: "odds_analytic",
    Method.KEIDING: "odds_keiding",
    Method.COHORT_RATIO: "odds_cohort",
    Method.CONVOLUTION_SPECIAL: "odds_convolution",
}


def atomic_write(path, text):
    """Write text to path atomically and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp_name, path)
    except Exception as e:
        logger.error(f"Could not write {path}: {str(e)}")
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.debug(f"Wrote {path}")
    return path


def jsonable(value):
    """Plain JSON value; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path, payload):
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    return atomic_write(path, text + "\n")


def _frame_to_csv(path, frame):
    return atomic_write(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


# ==============================
# CSV OUTPUTS
# ==============================

def write_curve_csv(path, ages, curves):
    """
    Odds curve with one column per method.

    Args:
        path (str | Path): output file
        ages (list): evaluated ages
        curves (dict): Method -> list of PrevalenceResult in the order of ages
    """
    frame = pd.DataFrame({"age": [float(a) for a in ages]})
    for method, results in curves.items():
        frame[CURVE_COLUMNS[Method(method)]] = [r.odds for r in results]
    return _frame_to_csv(path, frame)


def write_table_csv(path, table):
    """Age-group table in the bundled data layout, totals row included."""
    rows = [[row.k, f"{row.age_lo:g}", f"{row.age_hi:g}", row.n, row.c] for row in table.rows]
    total_n, total_c = table.totals
    rows.append([TOTAL_LABEL, "", "", total_n, total_c])
    return _frame_to_csv(path, pd.DataFrame(rows, columns=TABLE_COLUMNS))


def write_ledger_csv(path, ledger):
    """One row per simulated person; absent events are empty."""
    return _frame_to_csv(path, ledger.frame)


def write_table2_csv(path, fit_result):
    """Estimates in the param,input,estimate,ci_lo,ci_hi layout."""
    given = fit_result.gamma_input or (math.nan,) * len(COMPONENTS)
    frame = pd.DataFrame({
        "param": list(COMPONENTS),
        "input": list(given),
        "estimate": list(fit_result.gamma_hat),
        "ci_lo": [lo for lo, _ in fit_result.ci95],
        "ci_hi": [hi for _, hi in fit_result.ci95],
    })
    return _frame_to_csv(path, frame)


# ==============================
# JSON OUTPUTS
# ==============================

def write_fit_json(path, fit_result):
    return write_json(path, fit_result.to_dict())


def write_diagnostics_json(path, report):
    return write_json(path, report)
