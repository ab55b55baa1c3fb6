"""
Simulation input and output types.

- SimConfig: birth process, cross-section and age groups
- LifeRecord / PopulationLedger: simulated life courses on the Lexis plane
- AgeGroupTable: aggregated current-status data (n_k alive, c_k diseased)
"""

from dataclasses import dataclass, field, replace
import math
from typing import Optional

import numpy as np
import pandas as pd

from idmodds.exceptions import ConfigError, DomainError

DEFAULT_AGE_GROUPS = tuple((float(lo), float(lo + 5)) for lo in range(40, 95, 5))
PUBLISHED_ALIVE_TOTAL = 74388


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulated study."""

    births_per_year: int = 2000
    birth_window: tuple = (0.0, 65.0)
    cross_section_time: float = 100.0
    age_groups: tuple = DEFAULT_AGE_GROUPS
    rng_seed: int = 20140101
    max_age: float = 110.0

    def __post_init__(self):
        object.__setattr__(self, "birth_window", tuple(float(x) for x in self.birth_window))
        object.__setattr__(
            self, "age_groups", tuple((float(lo), float(hi)) for lo, hi in self.age_groups)
        )
        if int(self.births_per_year) != self.births_per_year or self.births_per_year <= 0:
            raise ConfigError("births_per_year must be a positive integer")
        start, end = self.birth_window
        years = end - start
        if years < 1 or not math.isclose(years, round(years)):
            raise ConfigError("birth_window must span a whole number of years (at least one)")
        if not self.age_groups:
            raise ConfigError("at least one age group is needed")
        previous_hi = -math.inf
        for lo, hi in self.age_groups:
            if not 0 <= lo < hi:
                raise ConfigError(f"age group [{lo}, {hi}) is empty or negative")
            if lo < previous_hi:
                raise ConfigError("age groups must be disjoint and ascending")
            previous_hi = hi
        if self.max_age < self.age_groups[-1][1]:
            raise ConfigError("max_age must cover the oldest age group")
        youngest, oldest = self.age_groups[0][0], self.age_groups[-1][1]
        if start > self.cross_section_time - oldest or end < self.cross_section_time - youngest:
            raise ConfigError(
                f"birth window {self.birth_window} does not populate ages "
                f"[{youngest}, {oldest}) at t={self.cross_section_time}"
            )

    @property
    def n_years(self):
        return int(round(self.birth_window[1] - self.birth_window[0]))

    @property
    def total_births(self):
        return self.n_years * self.births_per_year

    def with_seed(self, seed):
        return replace(self, rng_seed=int(seed))

    @classmethod
    def from_config(cls, section):
        section = dict(section or {})
        section.pop("calibrate_to", None)
        section.pop("dump_ledger", None)
        try:
            return cls(**section)
        except TypeError as e:
            raise ConfigError(str(e)) from e


@dataclass(frozen=True)
class LifeRecord:
    """One simulated life: birth, optional onset, optional death (absent = censored alive)."""

    birth_time: float
    onset_time: Optional[float] = None
    death_time: Optional[float] = None

    def __post_init__(self):
        if self.onset_time is not None and not self.birth_time < self.onset_time:
            raise DomainError("onset must follow birth")
        if self.death_time is not None:
            start = self.onset_time if self.onset_time is not None else self.birth_time
            if not start < self.death_time:
                raise DomainError("death must follow birth and onset")


@dataclass(frozen=True, eq=False)
class PopulationLedger:
    """Life records of a simulated population, one row per person.

    Columns birth, onset, death hold calendar times; NaN marks an absent event.
    """

    frame: pd.DataFrame

    COLUMNS = ("birth", "onset", "death")

    @classmethod
    def from_arrays(cls, birth, onset, death):
        return cls(pd.DataFrame({"birth": birth, "onset": onset, "death": death}))

    @classmethod
    def empty(cls):
        return cls.from_arrays(np.empty(0), np.empty(0), np.empty(0))

    def __len__(self):
        return len(self.frame)

    def records(self):
        """Iterate over LifeRecord objects."""
        for birth, onset, death in self.frame[list(self.COLUMNS)].itertuples(index=False):
            yield LifeRecord(
                float(birth),
                None if np.isnan(onset) else float(onset),
                None if np.isnan(death) else float(death),
            )

    def equals(self, other):
        return self.frame.equals(other.frame)


@dataclass(frozen=True)
class AgeGroupRow:
    k: int
    age_lo: float
    age_hi: float
    n: int
    c: int

    def __post_init__(self):
        if not 0 <= self.c <= self.n:
            raise DomainError(f"group {self.k}: need 0 <= c <= n, got c={self.c}, n={self.n}")

    @property
    def midpoint(self):
        return 0.5 * (self.age_lo + self.age_hi)


@dataclass(frozen=True)
class AgeGroupTable:
    """Current-status counts per age group at one cross-section."""

    rows: tuple
    cross_section_time: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    @classmethod
    def from_counts(cls, age_groups, n, c, cross_section_time=100.0):
        rows = [
            AgeGroupRow(k, float(lo), float(hi), int(n_k), int(c_k))
            for k, ((lo, hi), n_k, c_k) in enumerate(zip(age_groups, n, c), start=1)
        ]
        return cls(tuple(rows), float(cross_section_time))

    @property
    def n(self):
        return np.array([row.n for row in self.rows], dtype=float)

    @property
    def c(self):
        return np.array([row.c for row in self.rows], dtype=float)

    @property
    def age_groups(self):
        return tuple((row.age_lo, row.age_hi) for row in self.rows)

    @property
    def totals(self):
        return sum(row.n for row in self.rows), sum(row.c for row in self.rows)

    def informative_rows(self):
        """Rows with at least one person alive."""
        return sum(1 for row in self.rows if row.n > 0)

    def fingerprint(self):
        """Stable text identifying the table's content."""
        body = ";".join(f"{r.age_lo},{r.age_hi},{r.n},{r.c}" for r in self.rows)
        return f"{self.cross_section_time}|{body}"
