"""
Consistency checks against the differential forms of the prevalence.

Each residual compares a central difference along the characteristic
(step h in both t and a) with the right-hand side of a PDE at (t, a). The
residual is O(h^2), so halving h divides it by about four. Prevalence
values are computed with tight tolerances so that quadrature noise stays
well below the truncation error.
"""

import logging

from apps.rates import services as rates
from idmodds.exceptions import DomainError, PreconditionError
from ..quadrature import QuadratureConfig
from ..results import CohortBaseline, Method
from .population import effective_mortality_m1star
from .prevalence import prevalence

logger = logging.getLogger(__name__)

PDE_QUADRATURE = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-16, max_subdivisions=400)


def _check_step(a, h):
    if not (h > 0 and a >= h):
        raise DomainError(f"PDE residuals need a >= h > 0, got a={a}, h={h}")


def _directional_difference(values_at, t, a, h):
    return (values_at(t + h, a + h) - values_at(t - h, a - h)) / (2.0 * h)


def general_mortality(model, baseline, t, a, quadrature=None):
    """m = p m1* + (1 - p) m0, the mortality of everyone alive at (t, a)."""
    quadrature = quadrature or PDE_QUADRATURE
    p = prevalence(model, baseline, t, a, Method.PSEUDO_CONVOLUTION, quadrature).prevalence
    m0 = float(rates.mortality_healthy(model, t, a))
    m1_star = effective_mortality_m1star(model, baseline, t, a, quadrature)
    return p * m1_star + (1.0 - p) * m0


def relative_mortality(model, baseline, t, a, quadrature=None):
    """R = m1* / m0 at (t, a); 0 while nobody is diseased."""
    quadrature = quadrature or PDE_QUADRATURE
    m1_star = effective_mortality_m1star(model, baseline, t, a, quadrature)
    return m1_star / float(rates.mortality_healthy(model, t, a))


def pde_residual_prevalence(model, baseline, t, a, h, quadrature=None,
                            method=Method.PSEUDO_CONVOLUTION):
    """
    Residual of (d/dt + d/da) p = (1 - p)(i - p (m1* - m0)).

    Args:
        model (RateModel): transition rates
        baseline (CohortBaseline): cohort sizes
        t (float): calendar time
        a (float): age, a >= h
        h (float): step along the characteristic

    Returns:
        float: difference quotient minus right-hand side
    """
    _check_step(a, h)
    quadrature = quadrature or PDE_QUADRATURE
    baseline = baseline or CohortBaseline()

    def p_at(t_, a_):
        return prevalence(model, baseline, t_, a_, method, quadrature).prevalence

    slope = _directional_difference(p_at, t, a, h)
    p = p_at(t, a)
    i = float(rates.incidence(model, t, a))
    m0 = float(rates.mortality_healthy(model, t, a))
    m1_star = effective_mortality_m1star(model, baseline, t, a, quadrature)
    return slope - (1.0 - p) * (i - p * (m1_star - m0))


def pde_residual_prevalence_general(model, baseline, t, a, h, quadrature=None):
    """
    Residual of the prevalence PDE written with general and relative mortality.

    (d/dt + d/da) p = (1 - p)(i - m p (R - 1) / (p (R - 1) + 1)),
    m = p m1* + (1 - p) m0, R = m1* / m0.
    """
    _check_step(a, h)
    quadrature = quadrature or PDE_QUADRATURE
    baseline = baseline or CohortBaseline()

    def p_at(t_, a_):
        return prevalence(model, baseline, t_, a_, Method.PSEUDO_CONVOLUTION,
                          quadrature).prevalence

    slope = _directional_difference(p_at, t, a, h)
    p = p_at(t, a)
    i = float(rates.incidence(model, t, a))
    m0 = float(rates.mortality_healthy(model, t, a))
    m1_star = effective_mortality_m1star(model, baseline, t, a, quadrature)
    m = p * m1_star + (1.0 - p) * m0
    excess = p * (m1_star / m0 - 1.0) if p > 0 else 0.0
    return slope - (1.0 - p) * (i - m * excess / (excess + 1.0))


def pde_residual_odds(model, baseline, t, a, h, quadrature=None):
    """
    Residual of (d/dt + d/da) pi = (i - (m1 - m0)) pi + i.

    Only valid when m1 does not depend on disease duration.

    Raises:
        PreconditionError: if gamma1 != 0
    """
    if not model.ratio.duration_independent:
        raise PreconditionError(
            "the odds PDE needs duration-independent m1 (gamma1 = 0), "
            f"got gamma1={model.ratio.gamma1}"
        )
    _check_step(a, h)
    quadrature = quadrature or PDE_QUADRATURE

    def odds_at(t_, a_):
        return prevalence(model, baseline, t_, a_, Method.PSEUDO_CONVOLUTION,
                          quadrature).odds

    slope = _directional_difference(odds_at, t, a, h)
    odds = odds_at(t, a)
    i = float(rates.incidence(model, t, a))
    m0 = float(rates.mortality_healthy(model, t, a))
    m1 = m0 * model.ratio.gamma3
    return slope - ((i - (m1 - m0)) * odds + i)


def richardson_ratio(residual, model, baseline, t, a, h, **kwargs):
    """(r(h), r(h/2), r(h)/r(h/2)) for a residual function; ratio is None if r(h/2) = 0."""
    coarse = residual(model, baseline, t, a, h, **kwargs)
    fine = residual(model, baseline, t, a, h / 2.0, **kwargs)
    ratio = coarse / fine if fine != 0 else None
    return coarse, fine, ratio
