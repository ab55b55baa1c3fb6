"""
Parameter types of the illness-death model.

Transition rates:
- incidence i(t, a): one of three variants (positive-part linear,
  exponential first order, tabulated grid)
- mortality of the healthy m0(t, a): Gompertz intensity
- mortality of the diseased m1(t, a, d) = m0(t, a) * R(d), R quadratic in
  disease duration d

Every rate family carries its cumulative hazard along a characteristic
(t - delta + tau, a - delta + tau), tau in [0, delta]. All types are frozen
and safe to share between threads.
"""

from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from apps.analysis.quadrature import QuadratureConfig, gauss_kronrod
from idmodds.exceptions import ConfigError, DomainError

DEFAULT_MAX_DURATION = 100.0


def _require_finite(name, *values):
    for value in values:
        if not np.isfinite(value):
            raise ConfigError(f"{name} must be finite, got {value!r}")


# ==============================
# MORTALITY WITHOUT DISEASE
# ==============================

@dataclass(frozen=True)
class GompertzParams:
    """m0(t, a) = exp(xi1 + xi2 * a + xi3 * t)."""

    xi1: float
    xi2: float
    xi3: float

    def __post_init__(self):
        _require_finite("Gompertz parameters", self.xi1, self.xi2, self.xi3)
        if self.xi2 + self.xi3 == 0:
            raise ConfigError("xi2 + xi3 must be non-zero for the closed-form M0")

    @property
    def slope(self):
        """Growth rate of m0 along a characteristic."""
        return self.xi2 + self.xi3

    def rate(self, t, a):
        return np.exp(self.xi1 + self.xi2 * np.asarray(a) + self.xi3 * np.asarray(t))

    def cumulative(self, t, a, delta):
        """M0(t, a, delta) = (m0(t, a) - m0(t - delta, a - delta)) / (xi2 + xi3)."""
        s = self.slope
        return self.rate(t, a) * -np.expm1(-s * np.asarray(delta)) / s


# ==============================
# INCIDENCE VARIANTS
# ==============================

@dataclass(frozen=True)
class PositivePartLinear:
    """i(t, a) = (a - onset_age)_+ / denominator."""

    kind: ClassVar[str] = "positive_part_linear"

    onset_age: float = 30.0
    denominator: float = 3000.0

    def __post_init__(self):
        _require_finite("incidence parameters", self.onset_age, self.denominator)
        if self.denominator <= 0:
            raise ConfigError("incidence denominator must be positive")

    def rate(self, t, a):
        a = np.asarray(a, dtype=float)
        return np.maximum(a - self.onset_age, 0.0) / self.denominator + 0.0 * np.asarray(t)

    def cumulative(self, t, a, delta):
        """Closed form of (1/D) * int_0^delta (a - delta + tau - onset)_+ dtau.

        Covers the characteristic below the onset age, straddling it and
        above it with one expression: (u1^2 - u0^2) / 2D, u the positive part
        at both ends.
        """
        a = np.asarray(a, dtype=float)
        u1 = np.maximum(a - self.onset_age, 0.0)
        u0 = np.maximum(a - np.asarray(delta) - self.onset_age, 0.0)
        return (u1 - u0) * (u1 + u0) / (2.0 * self.denominator) + 0.0 * np.asarray(t)

    def kink_ages(self):
        return (self.onset_age,)

    def kink_times(self):
        return ()


@dataclass(frozen=True)
class ExponentialFirstOrder:
    """i(t, a) = exp(k0 + k1 * a + k2 * t)."""

    kind: ClassVar[str] = "exponential_first_order"

    k0: float
    k1: float
    k2: float

    def __post_init__(self):
        _require_finite("incidence parameters", self.k0, self.k1, self.k2)

    def rate(self, t, a):
        return np.exp(self.k0 + self.k1 * np.asarray(a) + self.k2 * np.asarray(t))

    def cumulative(self, t, a, delta):
        s = self.k1 + self.k2
        delta = np.asarray(delta, dtype=float)
        if s == 0:
            return self.rate(t, a) * delta
        return self.rate(t, a) * -np.expm1(-s * delta) / s

    def kink_ages(self):
        return ()

    def kink_times(self):
        return ()


@dataclass(frozen=True)
class TabulatedGrid:
    """Incidence tabulated on a (time, age) grid, bilinear in between.

    Outside the grid the rate is clamped to the nearest edge, or a
    DomainError is raised when extrapolation is "error".
    """

    kind: ClassVar[str] = "tabulated_grid"

    times: tuple
    ages: tuple
    rates: tuple
    extrapolation: str = "clamp"
    _interpolator: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "ages", tuple(float(x) for x in self.ages))
        object.__setattr__(self, "rates", tuple(tuple(float(x) for x in row) for row in self.rates))
        times = np.asarray(self.times, dtype=float)
        ages = np.asarray(self.ages, dtype=float)
        values = np.asarray(self.rates, dtype=float)
        if values.shape != (times.size, ages.size):
            raise ConfigError(
                f"tabulated incidence has shape {values.shape}, "
                f"expected ({times.size}, {ages.size})"
            )
        if times.size < 2 or ages.size < 2:
            raise ConfigError("tabulated incidence needs at least two times and two ages")
        if np.any(np.diff(times) <= 0) or np.any(np.diff(ages) <= 0):
            raise ConfigError("tabulated incidence axes must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ConfigError("tabulated incidence rates must be finite and non-negative")
        if self.extrapolation not in ("clamp", "error"):
            raise ConfigError(f"unknown extrapolation mode {self.extrapolation!r}")
        object.__setattr__(
            self, "_interpolator",
            RegularGridInterpolator((times, ages), values, method="linear"),
        )

    def _points(self, t, a):
        t, a = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(a, dtype=float))
        t_lo, t_hi = self.times[0], self.times[-1]
        a_lo, a_hi = self.ages[0], self.ages[-1]
        if self.extrapolation == "error":
            outside = (t < t_lo) | (t > t_hi) | (a < a_lo) | (a > a_hi)
            if np.any(outside):
                raise DomainError("(t, a) outside the tabulated incidence grid")
        return np.clip(t, t_lo, t_hi), np.clip(a, a_lo, a_hi)

    def rate(self, t, a):
        t, a = self._points(t, a)
        return self._interpolator(np.stack([t, a], axis=-1))

    def cumulative(self, t, a, delta, quadrature=None):
        quadrature = quadrature or QuadratureConfig()

        def along(t_, a_, d_):
            if d_ == 0:
                return 0.0
            start_t, start_a = t_ - d_, a_ - d_
            breaks = [g - start_a for g in self.ages] + [g - start_t for g in self.times]
            return gauss_kronrod(
                lambda tau: self.rate(start_t + tau, start_a + tau),
                0.0, d_, quadrature, points=breaks,
            )

        result = np.vectorize(along, otypes=[float])(t, a, delta)
        return result if result.ndim else float(result)

    def kink_ages(self):
        return tuple(self.ages)

    def kink_times(self):
        return tuple(self.times)


# ==============================
# MORTALITY RATE RATIO
# ==============================

@dataclass(frozen=True)
class MortalityRatioParams:
    """R(d) = gamma1 * (d - gamma2)^2 + gamma3, positive on [0, max_duration]."""

    gamma1: float
    gamma2: float
    gamma3: float
    max_duration: float = DEFAULT_MAX_DURATION

    def __post_init__(self):
        _require_finite("mortality ratio parameters", self.gamma1, self.gamma2, self.gamma3)
        if self.max_duration <= 0:
            raise ConfigError("max_duration must be positive")
        lowest = self.minimum()
        if not lowest > 0:
            raise DomainError(
                f"R(d) must be positive on [0, {self.max_duration}], minimum is {lowest}"
            )

    @property
    def gamma(self):
        return (self.gamma1, self.gamma2, self.gamma3)

    @property
    def duration_independent(self):
        return self.gamma1 == 0

    def minimum(self):
        """Smallest R(d) over [0, max_duration]."""
        candidates = [0.0, self.max_duration]
        if 0.0 < self.gamma2 < self.max_duration:
            candidates.append(self.gamma2)
        return min(float(self.ratio(d)) for d in candidates)

    def ratio(self, d):
        d = np.asarray(d, dtype=float)
        return self.gamma1 * (d - self.gamma2) ** 2 + self.gamma3

    def weighted_exponential_integral(self, s, onset_rate, current_rate, delta):
        """int_0^delta onset_rate * exp(s * tau) * R(tau) dtau in closed form.

        current_rate is onset_rate * exp(s * delta). The antiderivative of
        exp(s tau) P(tau) for quadratic P is exp(s tau) (P/s - P'/s^2 + P''/s^3).
        """
        delta = np.asarray(delta, dtype=float)
        g1, g2 = self.gamma1, self.gamma2
        p_delta = self.ratio(delta)
        dp_delta = 2.0 * g1 * (delta - g2)
        q_delta = p_delta / s - dp_delta / s ** 2 + 2.0 * g1 / s ** 3
        q_step = g1 * delta * (delta - 2.0 * g2) / s - 2.0 * g1 * delta / s ** 2
        return (current_rate - onset_rate) * q_delta + onset_rate * q_step


# ==============================
# RATE MODEL
# ==============================

@dataclass(frozen=True)
class RateModel:
    """Transition rates i, m0 and m1 = m0 * R(d) of the illness-death model."""

    incidence: object
    m0: GompertzParams
    ratio: MortalityRatioParams

    def with_gamma(self, gamma):
        """Copy of the model with another mortality ratio (raises DomainError if R <= 0)."""
        g1, g2, g3 = (float(g) for g in gamma)
        return replace(
            self,
            ratio=MortalityRatioParams(g1, g2, g3, max_duration=self.ratio.max_duration),
        )
