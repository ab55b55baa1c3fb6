from .readers import read_age_group_table, read_bundled_table
from .writers import (
    atomic_write,
    write_curve_csv,
    write_diagnostics_json,
    write_fit_json,
    write_json,
    write_ledger_csv,
    write_table2_csv,
    write_table_csv,
)
