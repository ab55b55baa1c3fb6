"""
Incidence from two cross-sectional prevalence studies.

Solving the prevalence PDE for the incidence gives

    i = (d/dt + d/da) p / (1 - p) + p (m1* - m0).

Two cross-sections at t and t + h are paired along characteristics: age a
at t meets age a + h at t + h. The forward difference over that segment
estimates the derivative at the segment's midpoint, where the estimate is
reported.
"""

import logging

import numpy as np

from apps.rates import services as rates
from idmodds.exceptions import DomainError, NumericalError
from ..quadrature import QuadratureConfig
from ..results import CharacteristicGrid, CohortBaseline, CrossSection, Method
from .population import effective_mortality_m1star
from .prevalence import prevalence_curve

logger = logging.getLogger(__name__)


def cross_section_grid(model, baseline, t, ages, method=Method.PSEUDO_CONVOLUTION,
                       quadrature=None):
    """Prevalence over a vector of ages at time t."""
    results = prevalence_curve(model, baseline, t, ages, (method,), quadrature)[Method(method)]
    return CrossSection(t, np.asarray(ages, dtype=float),
                        np.array([r.prevalence for r in results]))


def pair_characteristics(before, after):
    """
    Two-point characteristics linking two cross-sections.

    Args:
        before (CrossSection): prevalence at time t
        after (CrossSection): prevalence at time t + h, same ages

    Returns:
        list: CharacteristicGrid per age a of `before` with a + h inside `after`

    Raises:
        DomainError: if the age vectors differ or h <= 0
    """
    if before.ages.shape != after.ages.shape or not np.array_equal(before.ages, after.ages):
        raise DomainError("cross-sections must share the same age vector")
    h = after.time - before.time
    if not h > 0:
        raise DomainError("the second cross-section must be later than the first")

    grids = []
    for age, p0 in zip(before.ages, before.values):
        later_age = age + h
        if later_age > after.ages[-1] + 1e-12:
            continue
        p1 = float(np.interp(later_age, after.ages, after.values))
        grids.append(CharacteristicGrid(before.time - age, (age, later_age), (p0, p1)))
    return grids


def reconstruct_incidence(before, after, m1star_fn, m0_fn):
    """
    Estimate incidence between two cross-sections.

    Args:
        before (CrossSection): prevalence at time t
        after (CrossSection): prevalence at time t + h
        m1star_fn (callable): (t, a) -> m1*(t, a)
        m0_fn (callable): (t, a) -> m0(t, a)

    Returns:
        CrossSection: incidence estimates at time t + h/2 over ages a + h/2

    Raises:
        DomainError: if the cross-sections do not match
        NumericalError: if the prevalence reaches 1
    """
    grids = pair_characteristics(before, after)
    h = after.time - before.time
    mid_time = before.time + h / 2.0

    ages, estimates = [], []
    for grid in grids:
        p_mid = 0.5 * (grid.values[0] + grid.values[1])
        if max(grid.values) >= 1.0:
            raise NumericalError(f"prevalence reaches 1 at age {grid.ages[0]}")
        mid_age = grid.ages[0] + h / 2.0
        slope = float(grid.slope()[0])
        excess = m1star_fn(mid_time, mid_age) - m0_fn(mid_time, mid_age)
        ages.append(mid_age)
        estimates.append(slope / (1.0 - p_mid) + p_mid * excess)

    logger.debug(f"Reconstructed incidence at {len(ages)} ages around t={mid_time}")
    return CrossSection(mid_time, np.array(ages), np.array(estimates))


def reconstruct_from_model(model, baseline, t, h, ages, quadrature=None):
    """Run the reconstruction on analytic cross-sections generated from a model."""
    quadrature = quadrature or QuadratureConfig(rel_tol=1e-10, abs_tol=1e-14)
    baseline = baseline or CohortBaseline()
    before = cross_section_grid(model, baseline, t, ages, quadrature=quadrature)
    after = cross_section_grid(model, baseline, t + h, ages, quadrature=quadrature)
    return reconstruct_incidence(
        before, after,
        lambda t_, a_: effective_mortality_m1star(model, baseline, t_, a_, quadrature),
        lambda t_, a_: float(rates.mortality_healthy(model, t_, a_)),
    )
