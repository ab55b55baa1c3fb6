"""
Closed-form population functions of the illness-death model.

Along the characteristic through (t, a), people were born at b = t - a.
- survivor_function_M: probability of staying healthy and alive up to age y
- survival_healthy_S: healthy people S(t, a)
- case_density_C: cases C(t, a, d) by disease duration
- total_cases_Cstar: all cases C*(t, a)
- effective_mortality_m1star: duration-averaged mortality of the diseased
"""

import logging

import numpy as np

from apps.rates import services as rates
from idmodds.exceptions import DomainError
from ..quadrature import QuadratureConfig, gauss_kronrod
from ..results import CohortBaseline

logger = logging.getLogger(__name__)


def incidence_breakpoints(model, t, a):
    """Durations delta in (0, a) where i(t - delta, a - delta) has a kink."""
    variant = model.incidence
    breaks = [a - k for k in variant.kink_ages()] + [t - k for k in variant.kink_times()]
    return [d for d in breaks if 0.0 < d < a]


def _check_age(a):
    if a < 0:
        raise DomainError(f"age must be non-negative, got {a}")


def exit_exponent(model, t, a, quadrature=None):
    """Cumulative hazard (m0 + i) from birth up to (t, a)."""
    return rates.cumulative_exit_hazard(model, t, a, quadrature)


def survivor_function_M(model, baseline, t, a, y, quadrature=None):
    """
    Survivor function of the healthy state along the characteristic.

    M_{t,a}(y) = exp(-int_0^y (m0 + i)(t - a + tau, tau) dtau).

    Args:
        model (RateModel): transition rates
        baseline (CohortBaseline): cohort sizes (unused, M is per capita)
        t (float): calendar time of the characteristic's end point
        a (float): age of the characteristic's end point
        y (float or ndarray): age, 0 <= y <= a

    Returns:
        float or ndarray: probability in (0, 1]
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > a):
        raise DomainError("survivor function needs 0 <= y <= a")
    birth = t - a
    return np.exp(-exit_exponent(model, birth + y, y, quadrature))


def survival_healthy_S(model, baseline, t, a, quadrature=None):
    """S(t, a) = S0(t - a) * M_{t,a}(a)."""
    _check_age(a)
    baseline = baseline or CohortBaseline()
    return baseline(t - a) * np.exp(-exit_exponent(model, t, a, quadrature))


def case_density_C(model, baseline, t, a, d, quadrature=None):
    """
    Cases at (t, a) diagnosed d years earlier.

    C(t, a, d) = i(t-d, a-d) S(t-d, a-d) exp(-int_0^d m1(t-d+tau, a-d+tau, tau) dtau),
    with all exponents summed before exponentiation.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(d > a):
        raise DomainError("case density needs 0 <= d <= a")
    baseline = baseline or CohortBaseline()
    onset_t, onset_a = t - d, a - d
    exponent = exit_exponent(model, onset_t, onset_a, quadrature) + rates.cumulative_m1(
        model, t, a, d
    )
    return (
        model.incidence.rate(onset_t, onset_a)
        * baseline(t - a)
        * np.exp(-exponent)
    )


def total_cases_Cstar(model, baseline, t, a, quadrature=None):
    """C*(t, a) = int_0^a C(t, a, delta) ddelta."""
    _check_age(a)
    if a == 0:
        return 0.0
    quadrature = quadrature or QuadratureConfig()
    return gauss_kronrod(
        lambda d: case_density_C(model, baseline, t, a, d, quadrature),
        0.0, a, quadrature, points=incidence_breakpoints(model, t, a),
    )


def effective_mortality_m1star(model, baseline, t, a, quadrature=None):
    """
    Mortality of the diseased averaged over the duration distribution.

    m1*(t, a) = int m1(t, a, delta) C(t, a, delta) / int C(t, a, delta),
    and 0 when there are no cases.
    """
    _check_age(a)
    quadrature = quadrature or QuadratureConfig()
    cases = total_cases_Cstar(model, baseline, t, a, quadrature)
    if cases <= 0:
        return 0.0
    if model.ratio.duration_independent:
        return float(model.m0.rate(t, a) * model.ratio.gamma3)
    weighted = gauss_kronrod(
        lambda d: model.ratio.ratio(d) * case_density_C(model, baseline, t, a, d, quadrature),
        0.0, a, quadrature, points=incidence_breakpoints(model, t, a),
    )
    return float(model.m0.rate(t, a) * weighted / cases)
