"""
Readers for current-status data files.

The age-group CSV has the header k,age_lo,age_hi,n,c, one row per group and
an optional closing totals row "total,,,<sum n>,<sum c>".
"""

import logging
import math
import re

from django.conf import settings
import pandas as pd

from apps.simulation.tables import AgeGroupTable
from idmodds.exceptions import DomainError, InputDataError

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["k", "age_lo", "age_hi", "n", "c"]
TOTAL_LABEL = "total"


def _count(value, name, line):
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise InputDataError(f"{name} must be a number, got {value!r}", line)
    if not math.isfinite(number) or number != int(number) or number < 0:
        raise InputDataError(f"{name} must be a non-negative integer, got {value!r}", line)
    return int(number)


def _age(value, name, line):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InputDataError(f"{name} must be a number, got {value!r}", line)


def read_age_group_table(path, cross_section_time=100.0):
    """
    Read an age-group table.

    Args:
        path (str | Path): CSV file
        cross_section_time (float): calendar time the counts refer to

    Returns:
        AgeGroupTable

    Raises:
        InputDataError: on a malformed file, with the offending line number
        FileNotFoundError: if the file does not exist
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True,
                            skip_blank_lines=False)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise InputDataError(f"malformed CSV: {e}", int(match.group(1)) if match else None)
    except pd.errors.EmptyDataError:
        raise InputDataError("empty file", 1)

    if list(frame.columns) != TABLE_COLUMNS:
        raise InputDataError(f"header must be {','.join(TABLE_COLUMNS)}", 1)

    groups, n, c = [], [], []
    totals = None
    for index, row in enumerate(frame.itertuples(index=False)):
        line = index + 2
        if all(pd.isna(value) or value == "" for value in row):
            continue
        if totals is not None:
            raise InputDataError("rows after the totals row", line)
        if str(row.k).strip().lower() == TOTAL_LABEL:
            totals = (_count(row.n, "n", line), _count(row.c, "c", line), line)
            continue
        if _count(row.k, "k", line) != len(groups) + 1:
            raise InputDataError(f"group index must be {len(groups) + 1}, got {row.k}", line)

        lo, hi = _age(row.age_lo, "age_lo", line), _age(row.age_hi, "age_hi", line)
        if not 0 <= lo < hi:
            raise InputDataError(f"invalid age group [{lo}, {hi})", line)
        if groups and lo < groups[-1][1]:
            raise InputDataError("age groups must be ascending and disjoint", line)
        n_k, c_k = _count(row.n, "n", line), _count(row.c, "c", line)
        if c_k > n_k:
            raise InputDataError(f"c={c_k} exceeds n={n_k}", line)
        groups.append((lo, hi))
        n.append(n_k)
        c.append(c_k)

    if not groups:
        raise InputDataError("no age groups", 2)
    if totals is not None:
        total_n, total_c, line = totals
        if (total_n, total_c) != (sum(n), sum(c)):
            raise InputDataError(
                f"totals row says ({total_n}, {total_c}), groups sum to ({sum(n)}, {sum(c)})", line
            )

    try:
        table = AgeGroupTable.from_counts(groups, n, c, cross_section_time)
    except DomainError as e:
        raise InputDataError(str(e)) from e
    logger.info(f"Read {len(groups)} age groups from {path}")
    return table


def read_bundled_table(cross_section_time=100.0):
    """The published cross-section shipped with the toolkit."""
    return read_age_group_table(settings.TABLE1_FIXTURE_PATH, cross_section_time)
