"""
Rate-model service layer.

Evaluates the transition rates of the illness-death model and their
cumulative hazards along characteristics (lines of constant birth time
t - a on the Lexis plane). Inputs may be scalars or numpy arrays; all
functions are pure.
"""

import logging

import numpy as np

from idmodds.exceptions import ConfigError, DomainError
from .params import (
    ExponentialFirstOrder,
    GompertzParams,
    MortalityRatioParams,
    PositivePartLinear,
    RateModel,
    TabulatedGrid,
    DEFAULT_MAX_DURATION,
)

logger = logging.getLogger(__name__)

# Slack for d <= a comparisons on floating point grids
_DURATION_SLACK = 1e-12


def _check_characteristic(a, delta):
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0) or np.any(delta > a + _DURATION_SLACK):
        raise DomainError("cumulative hazards need 0 <= delta <= a")


# ==============================
# RATES
# ==============================

def incidence(model, t, a):
    """Incidence rate i(t, a) per person-year."""
    if np.any(np.asarray(a) < 0):
        raise DomainError(f"incidence undefined for negative age {a!r}")
    return model.incidence.rate(t, a)


def mortality_healthy(model, t, a):
    """Gompertz mortality m0(t, a) of people without the disease."""
    return model.m0.rate(t, a)


def mortality_ratio(model, d):
    """Mortality rate ratio R(d) after d years with the disease."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError(f"disease duration must be non-negative, got {d!r}")
    ratio = model.ratio.ratio(d)
    if np.any(ratio <= 0):
        raise DomainError(f"mortality ratio is not positive at d={d!r}")
    return ratio


def mortality_diseased(model, t, a, d):
    """m1(t, a, d) = m0(t, a) * R(d)."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(d > a + _DURATION_SLACK):
        raise DomainError("mortality with disease needs 0 <= d <= a")
    return mortality_healthy(model, t, a) * mortality_ratio(model, d)


# ==============================
# CUMULATIVE HAZARDS
# ==============================

def cumulative_m0(model, t, a, delta):
    """M0(t, a, delta): m0 integrated over the last delta years of the characteristic."""
    _check_characteristic(a, delta)
    return model.m0.cumulative(t, a, delta)


def cumulative_incidence_hazard(model, t, a, delta, quadrature=None):
    """I(t, a, delta): incidence integrated over the last delta years of the characteristic."""
    _check_characteristic(a, delta)
    if isinstance(model.incidence, TabulatedGrid):
        return model.incidence.cumulative(t, a, delta, quadrature)
    return model.incidence.cumulative(t, a, delta)


def cumulative_m1(model, t, a, delta):
    """int_0^delta m1(t - delta + tau, a - delta + tau, tau) dtau.

    The hazard of someone diagnosed delta years before (t, a). Uses
    gamma3 * M0 when R does not depend on duration.
    """
    m0 = model.m0
    if model.ratio.duration_independent:
        return model.ratio.gamma3 * m0.cumulative(t, a, delta)
    delta = np.asarray(delta, dtype=float)
    current = m0.rate(t, a)
    onset = m0.rate(np.asarray(t) - delta, np.asarray(a) - delta)
    return model.ratio.weighted_exponential_integral(m0.slope, onset, current, delta)


def cumulative_exit_hazard(model, t, a, quadrature=None):
    """int_0^a (m0 + i) along the characteristic from birth at t - a to (t, a)."""
    return model.m0.cumulative(t, a, a) + cumulative_incidence_hazard(
        model, t, a, a, quadrature
    )


# ==============================
# CONFIGURATION
# ==============================

def incidence_from_config(section):
    """Build an incidence variant from the "incidence" config section."""
    variant = section["variant"]
    if variant == PositivePartLinear.kind:
        return PositivePartLinear(
            onset_age=section.get("onset_age", 30.0),
            denominator=section.get("denominator", 3000.0),
        )
    if variant == ExponentialFirstOrder.kind:
        return ExponentialFirstOrder(section["k0"], section["k1"], section["k2"])
    if variant == TabulatedGrid.kind:
        return TabulatedGrid(
            times=section["times"],
            ages=section["ages"],
            rates=section["rates"],
            extrapolation=section.get("extrapolation", "clamp"),
        )
    raise ConfigError(f"unknown incidence variant {variant!r}")


def rate_model_from_config(config):
    """Build a RateModel from the "incidence", "m0" and "ratio" sections."""
    m0 = config["m0"]
    ratio = config["ratio"]
    try:
        model = RateModel(
            incidence=incidence_from_config(config["incidence"]),
            m0=GompertzParams(m0["xi1"], m0["xi2"], m0["xi3"]),
            ratio=MortalityRatioParams(
                ratio["gamma1"], ratio["gamma2"], ratio["gamma3"],
                max_duration=ratio.get("max_duration", DEFAULT_MAX_DURATION),
            ),
        )
    except DomainError as e:
        raise ConfigError(str(e)) from e
    logger.debug(f"Rate model built: {model}")
    return model


def incidence_to_config(variant):
    if isinstance(variant, PositivePartLinear):
        return {"variant": variant.kind, "onset_age": variant.onset_age,
                "denominator": variant.denominator}
    if isinstance(variant, ExponentialFirstOrder):
        return {"variant": variant.kind, "k0": variant.k0, "k1": variant.k1, "k2": variant.k2}
    return {"variant": variant.kind, "times": list(variant.times), "ages": list(variant.ages),
            "rates": [list(row) for row in variant.rates],
            "extrapolation": variant.extrapolation}
