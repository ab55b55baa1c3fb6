"""
Result and input types of the analytic layer.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from idmodds.exceptions import DomainError


class Method(str, Enum):
    PSEUDO_CONVOLUTION = "pseudo_convolution"
    KEIDING = "keiding"
    COHORT_RATIO = "cohort_ratio"
    CONVOLUTION_SPECIAL = "convolution_special"


def _unit_cohort(birth_time):
    return np.ones_like(np.asarray(birth_time, dtype=float))


@dataclass(frozen=True)
class CohortBaseline:
    """Number S0(t - a) of healthy newborns of each birth cohort.

    Prevalence and prevalence odds do not depend on it; only absolute
    counts S and C* do.
    """

    s0: Callable = _unit_cohort

    @classmethod
    def constant(cls, size):
        if not size > 0:
            raise DomainError("cohort size must be positive")
        return cls(s0=lambda birth_time: np.full_like(np.asarray(birth_time, dtype=float), size))

    def __call__(self, birth_time):
        size = np.asarray(self.s0(birth_time), dtype=float)
        if np.any(size <= 0):
            raise DomainError(f"cohort baseline must be positive at birth time {birth_time!r}")
        return size


@dataclass(frozen=True)
class PrevalenceResult:
    """Prevalence odds pi and prevalence p = pi / (1 + pi) at (t, a)."""

    t: float
    a: float
    odds: float
    prevalence: float
    method: Method
    diagnostics: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_odds(cls, t, a, odds, method, **diagnostics):
        odds = max(float(odds), 0.0)
        return cls(float(t), float(a), odds, odds / (1.0 + odds), Method(method), diagnostics)

    @classmethod
    def from_counts(cls, t, a, healthy, cases, method=Method.COHORT_RATIO, **diagnostics):
        """Build from S and C*: pi = C*/S, p = C*/(S + C*)."""
        healthy, cases = float(healthy), max(float(cases), 0.0)
        return cls(
            float(t), float(a), cases / healthy, cases / (healthy + cases),
            Method(method), diagnostics,
        )


@dataclass(frozen=True)
class CharacteristicGrid:
    """Values along one characteristic t - a = birth_time."""

    birth_time: float
    ages: tuple
    values: tuple

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if ages.shape != values.shape or ages.ndim != 1:
            raise DomainError("characteristic grid needs one value per age")
        if np.any(np.diff(ages) <= 0):
            raise DomainError("characteristic grid ages must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DomainError("characteristic grid values must be finite")
        object.__setattr__(self, "ages", tuple(ages.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))

    @property
    def times(self):
        return tuple(self.birth_time + a for a in self.ages)

    def slope(self):
        """Forward differences of the values along the characteristic."""
        return np.diff(self.values) / np.diff(self.ages)


@dataclass(frozen=True, eq=False)
class CrossSection:
    """Values over a vector of ages at one calendar time."""

    time: float
    ages: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if ages.shape != values.shape or ages.ndim != 1:
            raise DomainError("cross-section needs one value per age")
        if np.any(np.diff(ages) <= 0):
            raise DomainError("cross-section ages must be strictly increasing")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "values", values)
