"""
Self-consistency report of the analytic layer at one Lexis point.
"""

import logging

import numpy as np

from apps.rates import services as rates
from apps.rates.params import ExponentialFirstOrder
from idmodds.exceptions import PreconditionError
from ..results import CohortBaseline, Method
from .pde import (
    PDE_QUADRATURE,
    pde_residual_odds,
    pde_residual_prevalence,
    pde_residual_prevalence_general,
    richardson_ratio,
)
from .prevalence import prevalence
from .reconstruction import reconstruct_from_model

logger = logging.getLogger(__name__)

TRIANGLE_METHODS = (Method.PSEUDO_CONVOLUTION, Method.KEIDING, Method.COHORT_RATIO)


def _relative_gap(value, reference):
    if reference == 0:
        return abs(value - reference)
    return abs(value - reference) / abs(reference)


def _richardson_entry(residual, model, baseline, t, a, h, **kwargs):
    coarse, fine, ratio = richardson_ratio(residual, model, baseline, t, a, h, **kwargs)
    return {"h": h, "residual_h": coarse, "residual_h_half": fine, "richardson_ratio": ratio}


def formula_triangle(model, baseline, t, a, quadrature=None):
    """Odds from every applicable method and their largest relative gap to the pseudo-convolution."""
    odds = {
        method.value: prevalence(model, baseline, t, a, method, quadrature).odds
        for method in TRIANGLE_METHODS
    }
    reference = odds[Method.PSEUDO_CONVOLUTION.value]
    return {
        "odds": odds,
        "max_relative_deviation": max(_relative_gap(v, reference) for v in odds.values()),
    }


def crosscheck_report(model, t=100.0, a=60.0, h=0.1, quadrature=None, reconstruction_ages=None):
    """
    Run every consistency check at (t, a).

    Checks that cannot apply to the model (the odds PDE with duration
    dependent mortality, the true convolution without exponential incidence)
    are reported with a message instead of numbers.

    Returns:
        dict: JSON-ready report
    """
    baseline = CohortBaseline()
    quadrature = quadrature or PDE_QUADRATURE
    report = {"t": t, "a": a, "h": h}

    report["formula_triangle"] = formula_triangle(model, baseline, t, a, quadrature)

    pde = {
        "prevalence": _richardson_entry(
            pde_residual_prevalence, model, baseline, t, a, h, quadrature=quadrature
        ),
        "prevalence_general": _richardson_entry(
            pde_residual_prevalence_general, model, baseline, t, a, h, quadrature=quadrature
        ),
    }
    try:
        pde["odds"] = _richardson_entry(
            pde_residual_odds, model, baseline, t, a, h, quadrature=quadrature
        )
    except PreconditionError as e:
        logger.warning(f"Odds PDE skipped: {e}")
        pde["odds"] = {"skipped": str(e)}
    report["pde"] = pde

    if isinstance(model.incidence, ExponentialFirstOrder):
        special = prevalence(model, baseline, t, a, Method.CONVOLUTION_SPECIAL, quadrature).odds
        pseudo = report["formula_triangle"]["odds"][Method.PSEUDO_CONVOLUTION.value]
        report["convolution_special"] = {"odds": special, "relative_error": _relative_gap(special, pseudo)}
    else:
        report["convolution_special"] = {
            "skipped": f"needs exponential first order incidence, got {model.incidence.kind}"
        }

    ages = np.arange(40.0, 90.5, 0.5) if reconstruction_ages is None else np.asarray(reconstruction_ages)
    estimate = reconstruct_from_model(model, baseline, t, 0.5, ages)
    truth = np.asarray(rates.incidence(model, estimate.time, estimate.ages), dtype=float)
    errors = [_relative_gap(e, r) for e, r in zip(estimate.values, truth)]
    report["reconstruction"] = {
        "time": estimate.time,
        "ages": [float(estimate.ages[0]), float(estimate.ages[-1])],
        "max_relative_error": max(errors) if errors else 0.0,
    }

    logger.info(
        f"Crosscheck at ({t}, {a}): triangle deviation "
        f"{report['formula_triangle']['max_relative_deviation']:.2e}, reconstruction error "
        f"{report['reconstruction']['max_relative_error']:.2e}"
    )
    return report
