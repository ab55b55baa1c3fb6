"""
Settings and results of the mortality-ratio fit.
"""

from dataclasses import dataclass, field
import hashlib
import sys
from typing import Optional

import numpy as np

from apps.analysis.quadrature import QuadratureConfig
from apps.rates.params import DEFAULT_MAX_DURATION, MortalityRatioParams, RateModel
from idmodds.exceptions import ConfigError

COMPONENTS = ("gamma1", "gamma2", "gamma3")

DEFAULT_BOUNDS = ((0.0, 1.0), (0.0, 50.0), (1e-9, 20.0))
DEFAULT_STARTS = (
    (0.01, 2.0, 1.0),
    (0.05, 10.0, 1.5),
    (0.02, 25.0, 0.5),
    (0.2, 5.0, 3.0),
)
GROUP_EVALUATIONS = ("midpoint", "averaged")

# Hessian differences need likelihood values far smoother than the step
FIT_QUADRATURE = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-16, max_subdivisions=400)


@dataclass(frozen=True)
class FitConfig:
    """What is fixed, where to search and when to stop."""

    incidence: object
    m0: object
    bounds: tuple = DEFAULT_BOUNDS
    initial_points: tuple = DEFAULT_STARTS
    fixed: dict = field(default_factory=dict)
    xatol: float = 1e-6
    fatol: float = 1e-8
    max_iterations: int = 4000
    restarts: int = 1
    group_evaluation: str = "midpoint"
    include_binomial_coefficient: bool = False
    hessian_step: float = 1e-4
    max_duration: float = DEFAULT_MAX_DURATION
    quadrature: QuadratureConfig = FIT_QUADRATURE

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        object.__setattr__(
            self, "initial_points", tuple(tuple(float(x) for x in p) for p in self.initial_points)
        )
        if len(self.bounds) != 3 or any(not lo < hi for lo, hi in self.bounds):
            raise ConfigError("bounds need one increasing interval per gamma component")
        if not self.initial_points:
            raise ConfigError("at least one initial point is needed")
        for point in self.initial_points:
            if len(point) != 3 or not self.contains(point):
                raise ConfigError(f"initial point {point} lies outside the parameter bounds")
        unknown = set(self.fixed) - set(COMPONENTS)
        if unknown:
            raise ConfigError(f"unknown fixed components {sorted(unknown)}")
        if len(self.fixed) == 3:
            raise ConfigError("at least one gamma component must be free")
        if not (self.xatol > 0 and self.fatol > 0 and self.hessian_step > 0):
            raise ConfigError("optimizer tolerances and the Hessian step must be positive")
        if self.group_evaluation not in GROUP_EVALUATIONS:
            raise ConfigError(f"group_evaluation must be one of {GROUP_EVALUATIONS}")

    @property
    def free_indices(self):
        return tuple(j for j, name in enumerate(COMPONENTS) if name not in self.fixed)

    def contains(self, gamma):
        return all(lo <= g <= hi for g, (lo, hi) in zip(gamma, self.bounds))

    def full_gamma(self, free_values):
        """Complete gamma vector from the free components."""
        gamma = [self.fixed.get(name, np.nan) for name in COMPONENTS]
        for j, value in zip(self.free_indices, free_values):
            gamma[j] = float(value)
        return tuple(float(g) for g in gamma)

    def model_for(self, gamma):
        """RateModel with the fixed rates and mortality ratio gamma (DomainError if R <= 0)."""
        g1, g2, g3 = (float(g) for g in gamma)
        return RateModel(
            self.incidence, self.m0,
            MortalityRatioParams(g1, g2, g3, max_duration=self.max_duration),
        )

    def fingerprint(self):
        """Digest of everything that changes the likelihood value."""
        with np.printoptions(threshold=sys.maxsize):
            text = repr((
                self.incidence, self.m0, self.group_evaluation,
                self.include_binomial_coefficient, self.max_duration, self.quadrature,
            ))
        return hashlib.md5(text.encode()).hexdigest()

    @classmethod
    def from_config(cls, section, model, quadrature=None):
        """
        Build from the "fit" config section.

        Args:
            section (dict): validated "fit" section
            model (RateModel): supplies the fixed incidence and m0
            quadrature (QuadratureConfig): optional override of the fit tolerances
        """
        section = dict(section or {})
        section.pop("echo_input", None)
        if "bounds" in section:
            given = section.pop("bounds")
            section["bounds"] = tuple(
                given.get(name, default) for name, default in zip(COMPONENTS, DEFAULT_BOUNDS)
            )
        if quadrature is not None:
            section["quadrature"] = quadrature
        try:
            return cls(
                incidence=model.incidence, m0=model.m0,
                max_duration=model.ratio.max_duration, **section,
            )
        except TypeError as e:
            raise ConfigError(str(e)) from e


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    Maximum likelihood estimate of gamma with Wald intervals.

    hessian is the Hessian of the negative log-likelihood over all three
    components; rows of fixed components are zero. covariance is its
    inverse over the identifiable free components, zero for fixed ones and
    NaN for unidentifiable ones.
    """

    gamma_hat: tuple
    loglik: float
    hessian: np.ndarray
    covariance: np.ndarray
    ci95: tuple
    converged: bool
    iterations: int
    function_evals: int
    diagnostics: dict = field(default_factory=dict)
    gamma_input: Optional[tuple] = None

    @property
    def standard_errors(self):
        return np.sqrt(np.diag(self.covariance))

    def to_dict(self):
        return {
            "gamma_hat": list(self.gamma_hat),
            "loglik": self.loglik,
            "hessian": np.asarray(self.hessian).tolist(),
            "cov": np.asarray(self.covariance).tolist(),
            "ci95": [list(ci) for ci in self.ci95],
            "converged": self.converged,
            "iterations": self.iterations,
            "function_evals": self.function_evals,
            "gamma_input": list(self.gamma_input) if self.gamma_input is not None else None,
            "diagnostics": self.diagnostics,
        }
