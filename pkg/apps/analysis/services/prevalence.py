"""
Prevalence odds and prevalence of the illness-death model.

Three independent routes to the odds pi = C*/S at (t, a):
- pseudo-convolution: pi = int_0^a i(t-delta, a-delta) Y_{t,a}(delta) ddelta
- Keiding's representation with nested quadrature of the m1 hazard
- cohort ratio C*/S from the population functions
plus the true convolution available when incidence is exponential in
(t, a). Odds and prevalence do not depend on the cohort baseline S0.
"""

import logging

import numpy as np

from apps.core.parallel import ordered_map
from apps.rates import services as rates
from apps.rates.params import ExponentialFirstOrder
from idmodds.exceptions import DomainError, VariantMismatchError
from ..quadrature import QuadratureConfig, gauss_kronrod_full, quadpack
from ..results import CohortBaseline, Method, PrevalenceResult
from .population import (
    exit_exponent,
    incidence_breakpoints,
    survival_healthy_S,
    total_cases_Cstar,
)

logger = logging.getLogger(__name__)


def _check_age(a):
    if a < 0:
        raise DomainError(f"age must be non-negative, got {a}")


def damping_exponent(model, t, a, delta, quadrature=None):
    """log Y_{t,a}(delta) = M0 + I - M1 along the last delta years."""
    return (
        model.m0.cumulative(t, a, delta)
        + rates.cumulative_incidence_hazard(model, t, a, delta, quadrature)
        - rates.cumulative_m1(model, t, a, delta)
    )


def damping_Y(model, t, a, delta, quadrature=None):
    """Weight Y_{t,a}(delta) of incidence delta years before (t, a)."""
    return np.exp(damping_exponent(model, t, a, delta, quadrature))


def prevalence_odds_pseudo(model, baseline, t, a, quadrature=None):
    """
    Prevalence odds as a pseudo-convolution of incidence and Y.

    Args:
        model (RateModel): transition rates
        baseline (CohortBaseline): ignored, the odds are scale free
        t (float): calendar time
        a (float): age

    Returns:
        PrevalenceResult: odds, prevalence and quadrature diagnostics

    Raises:
        QuadratureError: if the tolerance is not met
    """
    _check_age(a)
    if a == 0:
        return PrevalenceResult.from_odds(t, a, 0.0, Method.PSEUDO_CONVOLUTION)
    quadrature = quadrature or QuadratureConfig()

    def integrand(d):
        return model.incidence.rate(t - d, a - d) * np.exp(
            damping_exponent(model, t, a, d, quadrature)
        )

    result = gauss_kronrod_full(
        integrand, 0.0, a, quadrature, points=incidence_breakpoints(model, t, a)
    )
    return PrevalenceResult.from_odds(
        t, a, result.value, Method.PSEUDO_CONVOLUTION,
        error=result.error, intervals=result.intervals,
    )


def prevalence_odds_keiding(model, baseline, t, a, quadrature=None):
    """
    Prevalence odds from Keiding's representation.

    pi = int_0^a i(b+y, y) M(y)/M(a) exp(-int_y^a m1(b+tau, tau, tau-y) dtau) dy
    with b = t - a. The inner m1 hazard is integrated by QUADPACK for every outer
    node, independently of the closed forms used by the pseudo-convolution.
    """
    _check_age(a)
    if a == 0:
        return PrevalenceResult.from_odds(t, a, 0.0, Method.KEIDING)
    quadrature = quadrature or QuadratureConfig()
    birth = t - a
    total_exit = float(exit_exponent(model, t, a, quadrature))

    def m1_hazard(y):
        return quadpack(
            lambda tau: float(model.m0.rate(birth + tau, tau) * model.ratio.ratio(tau - y)),
            y, a, quadrature,
        )

    def integrand(y):
        inner = np.vectorize(m1_hazard, otypes=[float])(y)
        exponent = total_exit - exit_exponent(model, birth + y, y, quadrature) - inner
        return model.incidence.rate(birth + y, y) * np.exp(exponent)

    variant = model.incidence
    breaks = list(variant.kink_ages()) + [k - birth for k in variant.kink_times()]
    result = gauss_kronrod_full(integrand, 0.0, a, quadrature, points=breaks)
    return PrevalenceResult.from_odds(
        t, a, result.value, Method.KEIDING,
        error=result.error, intervals=result.intervals,
        survivor_at_age=float(np.exp(-total_exit)),
    )


def prevalence_odds_cohort(model, baseline, t, a, quadrature=None):
    """Prevalence odds C*/S from the population functions."""
    _check_age(a)
    baseline = baseline or CohortBaseline()
    healthy = float(survival_healthy_S(model, baseline, t, a, quadrature))
    cases = total_cases_Cstar(model, baseline, t, a, quadrature)
    return PrevalenceResult.from_counts(t, a, healthy, cases, S=healthy, C_star=cases)


def convolution_factors(model, t, a, delta):
    """(i*(t, a), Exp(t - delta)) with i(t-delta, a-delta) = i* Exp(t-delta)."""
    variant = _exponential_incidence(model)
    i_star = np.exp(variant.k0 + variant.k1 * a - variant.k1 * t)
    exp_factor = np.exp((variant.k1 + variant.k2) * (t - np.asarray(delta, dtype=float)))
    return i_star, exp_factor


def separable_factors(model, t, a):
    """(i*_T(t), i*_A(a)) with i*(t, a) = i*_T(t) i*_A(a)."""
    variant = _exponential_incidence(model)
    return np.exp(variant.k0 - variant.k1 * t), np.exp(variant.k1 * a)


def _exponential_incidence(model):
    if not isinstance(model.incidence, ExponentialFirstOrder):
        raise VariantMismatchError(
            f"convolution form needs exponential first order incidence, "
            f"got {model.incidence.kind}"
        )
    return model.incidence


def prevalence_odds_convolution_special(model, baseline, t, a, quadrature=None):
    """
    Prevalence odds as a true convolution for exponential incidence.

    pi(t, a) = i*(t, a) int_0^a Exp(t - delta) Y_{t,a}(delta) ddelta.

    Raises:
        VariantMismatchError: if the incidence is not exponential first order
    """
    _exponential_incidence(model)
    _check_age(a)
    if a == 0:
        return PrevalenceResult.from_odds(t, a, 0.0, Method.CONVOLUTION_SPECIAL)
    quadrature = quadrature or QuadratureConfig()
    i_star, _ = convolution_factors(model, t, a, 0.0)

    def integrand(d):
        _, exp_factor = convolution_factors(model, t, a, d)
        return exp_factor * np.exp(damping_exponent(model, t, a, d, quadrature))

    result = gauss_kronrod_full(integrand, 0.0, a, quadrature)
    return PrevalenceResult.from_odds(
        t, a, i_star * result.value, Method.CONVOLUTION_SPECIAL,
        error=i_star * result.error, intervals=result.intervals,
    )


_METHODS = {
    Method.PSEUDO_CONVOLUTION: prevalence_odds_pseudo,
    Method.KEIDING: prevalence_odds_keiding,
    Method.COHORT_RATIO: prevalence_odds_cohort,
    Method.CONVOLUTION_SPECIAL: prevalence_odds_convolution_special,
}


def prevalence(model, baseline, t, a, method=Method.PSEUDO_CONVOLUTION, quadrature=None):
    """
    Age-specific prevalence p(t, a).

    Odds methods return p = pi / (1 + pi); the cohort ratio returns
    p = C* / (S + C*). All methods agree to quadrature tolerance.
    """
    try:
        evaluate = _METHODS[Method(method)]
    except (KeyError, ValueError):
        raise DomainError(f"unknown prevalence method {method!r}")
    return evaluate(model, baseline, t, a, quadrature)


def prevalence_curve(model, baseline, t, ages, methods=(Method.PSEUDO_CONVOLUTION,),
                     quadrature=None):
    """
    Evaluate a cross-section of prevalence results.

    Ages are evaluated concurrently; the returned mapping holds, for every
    method, the list of PrevalenceResult in the order of ages.
    """
    ages = [float(a) for a in ages]
    curves = {}
    for method in methods:
        method = Method(method)
        curves[method] = ordered_map(
            lambda a, m=method: prevalence(model, baseline, t, a, m, quadrature), ages
        )
        logger.debug(f"Evaluated {len(ages)} ages at t={t} with {method.value}")
    return curves
