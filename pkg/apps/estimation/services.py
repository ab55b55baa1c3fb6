"""
Estimation service layer.

Binomial maximum likelihood for the mortality ratio parameters gamma on
current-status age-group counts. Incidence and m0 stay fixed at known
values; the group prevalences p_k(gamma) come from the pseudo-convolution.
"""

import logging
import time

import numpy as np
from scipy import optimize
from scipy.special import gammaln, xlog1py, xlogy

from apps.analysis.quadrature import gauss_kronrod
from apps.analysis.results import CohortBaseline, Method
from apps.analysis.services import prevalence
from apps.core.parallel import ordered_map
from apps.simulation.tables import AgeGroupTable
from idmodds.exceptions import DomainError, PreconditionError, SingularHessianError
from . import inference
from .cache import cache_loglik
from .params import COMPONENTS, FitResult

logger = logging.getLogger(__name__)

# gamma_hat closer than this many xatol to a bound counts as a boundary solution
BOUNDARY_FACTOR = 10.0


# ==============================
# LIKELIHOOD
# ==============================

def group_prevalence(model, age_lo, age_hi, t, mode="midpoint", quadrature=None):
    """
    Prevalence attributed to the age group [age_lo, age_hi).

    Args:
        model (RateModel): transition rates
        age_lo (float): lower end of the group
        age_hi (float): upper end of the group
        t (float): calendar time of the cross-section
        mode (str): "midpoint" evaluates p at the group midpoint,
            "averaged" averages p uniformly over the group
        quadrature (QuadratureConfig): tolerances of the prevalence integrals

    Returns:
        float: prevalence in [0, 1]
    """
    if not 0 <= age_lo < age_hi:
        raise DomainError(f"invalid age group [{age_lo}, {age_hi})")
    baseline = CohortBaseline()

    def p_at(a):
        return prevalence(model, baseline, t, a, Method.PSEUDO_CONVOLUTION, quadrature).prevalence

    if mode == "midpoint":
        return p_at(0.5 * (age_lo + age_hi))
    if mode == "averaged":
        density = np.vectorize(p_at, otypes=[float])
        return gauss_kronrod(density, age_lo, age_hi, quadrature) / (age_hi - age_lo)
    raise DomainError(f"unknown group evaluation mode {mode!r}")


def binomial_terms(n, c, p, include_binomial_coefficient=False):
    """Per-group log-probabilities c log p + (n - c) log(1 - p) (+ log binom(n, c))."""
    n, c, p = (np.asarray(x, dtype=float) for x in (n, c, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(c, p) + xlog1py(n - c, -p)
    if include_binomial_coefficient:
        terms = terms + gammaln(n + 1) - gammaln(c + 1) - gammaln(n - c + 1)
    return terms


def _evaluate_log_likelihood(gamma, table, fit_config):
    try:
        model = fit_config.model_for(gamma)
    except DomainError:
        logger.debug(f"R(d) not positive at gamma={tuple(gamma)}")
        return -np.inf

    rows = [row for row in table.rows if row.n > 0]
    p = ordered_map(
        lambda row: group_prevalence(
            model, row.age_lo, row.age_hi, table.cross_section_time,
            fit_config.group_evaluation, fit_config.quadrature,
        ),
        rows,
    )
    terms = binomial_terms(
        [row.n for row in rows], [row.c for row in rows], p,
        fit_config.include_binomial_coefficient,
    )
    # summed in group order so the value is reproducible bit for bit
    value = 0.0
    for term in terms:
        value += float(term)
    return value if not np.isnan(value) else -np.inf


def log_likelihood(gamma, table, fit_config):
    """
    Binomial log-likelihood of the table under mortality ratio gamma.

    Groups contribute c_k log p_k + (n_k - c_k) log(1 - p_k); the binomial
    coefficient is added only with include_binomial_coefficient. The value
    is -inf when R(d; gamma) is not positive on [0, max_duration] or when a
    count is impossible under its p_k (c_k > 0 with p_k = 0, or c_k < n_k
    with p_k = 1). Parameter bounds are not checked here.

    Args:
        gamma (tuple): (gamma1, gamma2, gamma3)
        table (AgeGroupTable): the data
        fit_config (FitConfig): fixed rates and evaluation settings

    Returns:
        float: the log-likelihood
    """
    gamma = tuple(float(g) for g in gamma)
    return cache_loglik(gamma, table, fit_config, _evaluate_log_likelihood)


# ==============================
# FIT
# ==============================

def _free(point, free):
    return np.array([point[j] for j in free], dtype=float)


def _minimize(objective, start, bounds, fit_config):
    return optimize.minimize(
        objective,
        start,
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "xatol": fit_config.xatol,
            "fatol": fit_config.fatol,
            "maxiter": fit_config.max_iterations,
            "maxfev": 2 * fit_config.max_iterations,
        },
    )


def fit(table, fit_config, gamma_input=None):
    """
    Maximum likelihood estimate of gamma within the configured box.

    A Nelder-Mead simplex search runs from every initial point (fixed
    components replaced by their values), then restarts from the best
    point found. The Hessian of the negative log-likelihood at the optimum
    gives covariance and Wald intervals. Free components with a vanishing
    Hessian row are reported unidentifiable with NaN variance. The
    difference stencil is kept inside the bounds, centred on the nearest
    point to the optimum where it fits. A boundary solution whose Hessian
    cannot be inverted keeps its estimate with NaN covariance.

    Args:
        table (AgeGroupTable): current-status counts
        fit_config (FitConfig): fixed rates, bounds, starts and tolerances
        gamma_input (tuple): true gamma of a simulation study, echoed in the result

    Returns:
        FitResult: converged is False when the last simplex run stopped
            on its iteration limit

    Raises:
        PreconditionError: if there are fewer informative groups than free parameters
        SingularHessianError: if the identifiable block of the Hessian of an
            interior solution cannot be inverted
    """
    started = time.perf_counter()
    free = fit_config.free_indices
    if table.informative_rows() < len(free):
        raise PreconditionError(
            f"{table.informative_rows()} informative age groups for {len(free)} free parameters"
        )

    free_bounds = [fit_config.bounds[j] for j in free]

    def negative_loglik(x):
        gamma = fit_config.full_gamma(x)
        if not fit_config.contains(gamma):
            return np.inf
        return -log_likelihood(gamma, table, fit_config)

    runs = []
    for start in fit_config.initial_points:
        result = _minimize(negative_loglik, _free(start, free), free_bounds, fit_config)
        runs.append(result)
        logger.debug(
            f"Simplex from {start}: -loglik={result.fun:.6f} after {result.nit} iterations"
        )
    best = min(runs, key=lambda r: r.fun)
    iterations = sum(r.nit for r in runs)
    evaluations = sum(r.nfev for r in runs)

    for _ in range(fit_config.restarts):
        best = _minimize(negative_loglik, best.x, free_bounds, fit_config)
        iterations += best.nit
        evaluations += best.nfev

    if not np.isfinite(best.fun):
        raise DomainError("the likelihood is zero at every starting point")

    gamma_hat = fit_config.full_gamma(best.x)
    loglik = -float(best.fun)
    converged = bool(best.success)
    if not converged:
        logger.warning(f"Fit did not converge: {best.message}")

    near = BOUNDARY_FACTOR * fit_config.xatol
    boundary = [
        COMPONENTS[j] for j in free
        if gamma_hat[j] - fit_config.bounds[j][0] <= near
        or fit_config.bounds[j][1] - gamma_hat[j] <= near
    ]
    if boundary:
        logger.warning(f"Boundary solution for {', '.join(boundary)}")

    # Hessian over the free components; fixed rows stay zero
    steps = inference.step_sizes(best.x, fit_config.hessian_step)
    centre = inference.stencil_centre(best.x, steps, free_bounds)
    free_hessian = inference.hessian(
        lambda x: -log_likelihood(fit_config.full_gamma(x), table, fit_config), centre, steps
    )
    H = np.zeros((3, 3))
    H[np.ix_(free, free)] = free_hessian

    flat = [free[j] for j in inference.flat_components(free_hessian)]
    identifiable = [j for j in free if j not in flat]
    for j in flat:
        logger.warning(f"{COMPONENTS[j]} is not identifiable: the likelihood does not depend on it")

    hessian_error, condition = None, None
    try:
        covariance = inference.covariance_from_hessian(H, identifiable)
    except SingularHessianError as e:
        if not boundary:
            raise
        # the likelihood need not be curved at a bound; keep the estimate
        logger.warning(f"No covariance at the boundary solution: {e}")
        hessian_error, condition = str(e), e.condition_number
        covariance = np.full((3, 3), np.nan)
    fixed = [j for j in range(3) if j not in free]
    covariance[fixed, :] = 0.0
    covariance[:, fixed] = 0.0
    ci95 = inference.wald_intervals(gamma_hat, covariance)

    identifiable_block = H[np.ix_(identifiable, identifiable)]
    finite_block = identifiable and np.all(np.isfinite(identifiable_block))
    diagnostics = {
        "free": [COMPONENTS[j] for j in free],
        "fixed": dict(fit_config.fixed),
        "unidentifiable": [COMPONENTS[j] for j in flat],
        "boundary": boundary,
        "hessian_centre": [float(x) for x in centre],
        "hessian_error": hessian_error,
        "hessian_condition": float(np.linalg.cond(identifiable_block)) if finite_block else condition,
        "group_evaluation": fit_config.group_evaluation,
        "starts": [
            {"start": list(start), "loglik": -float(r.fun), "converged": bool(r.success)}
            for start, r in zip(fit_config.initial_points, runs)
        ],
        "message": str(best.message),
        "elapsed_seconds": time.perf_counter() - started,
    }

    logger.info(
        f"Fit finished: gamma_hat={tuple(round(g, 6) for g in gamma_hat)}, "
        f"loglik={loglik:.4f}, converged={converged}"
    )
    return FitResult(
        gamma_hat=gamma_hat,
        loglik=loglik,
        hessian=H,
        covariance=covariance,
        ci95=ci95,
        converged=converged,
        iterations=int(iterations),
        function_evals=int(evaluations),
        diagnostics=diagnostics,
        gamma_input=tuple(float(g) for g in gamma_input) if gamma_input is not None else None,
    )


def wald_intervals(fit_result):
    """
    95% Wald intervals of a fit, gamma_hat_j +- 1.96 sqrt(cov_jj).

    Raises:
        SingularHessianError: if the fit could not invert its Hessian
    """
    error = fit_result.diagnostics.get("hessian_error")
    if error:
        raise SingularHessianError(error)
    return inference.wald_intervals(fit_result.gamma_hat, fit_result.covariance)


def noise_free_table(model, age_groups, n, t, mode="midpoint", quadrature=None):
    """Table with c_k = round(n_k * p_k) under model, for self-consistency checks."""
    p = [group_prevalence(model, lo, hi, t, mode, quadrature) for lo, hi in age_groups]
    c = [int(round(n_k * p_k)) for n_k, p_k in zip(n, p)]
    return AgeGroupTable.from_counts(age_groups, n, c, t)
