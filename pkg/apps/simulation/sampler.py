"""
Life-course sampling by inversion of cumulative hazards.

For each person born at b the first event (onset or death without the
disease) happens at the age x solving H(x) = E, E ~ Exp(1), where
H(x) = int_0^x (m0 + i)(b + s, s) ds. The event is an onset with
probability i / (m0 + i) at x. After an onset at age x the residual life
u solves K(u) = E', K(u) = int_0^u m0(b + x + s, x + s) R(s) ds.
Whoever reaches max_age without the corresponding event is censored alive.

All people of one batch are solved together with a safeguarded Newton
iteration (Newton steps that leave the bracket fall back to bisection).
"""

import logging

import numpy as np

from apps.rates import services as rates
from idmodds.exceptions import RootFindingError
from .tables import LifeRecord

logger = logging.getLogger(__name__)

INVERSION_TOL = 1e-10
MAX_ITERATIONS = 200


def invert_cumulative(cumulative, hazard, target, upper, tol=INVERSION_TOL):
    """Solve cumulative(x) = target on [0, upper] for every element.

    cumulative and hazard are vectorized over x; cumulative must be
    increasing with cumulative(0) = 0 < target <= cumulative(upper).
    """
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), target.shape).copy()
    x = 0.5 * (lo + hi)
    active = np.ones(target.shape, dtype=bool)

    for _ in range(MAX_ITERATIONS):
        if not active.any():
            return x
        xa = x[active]
        f = cumulative(xa, active) - target[active]
        lo[active] = np.where(f < 0, xa, lo[active])
        hi[active] = np.where(f > 0, xa, hi[active])

        h = hazard(xa, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(h > 0, xa - f / h, np.nan)
        inside = (step > lo[active]) & (step < hi[active])
        new = np.where(inside, step, 0.5 * (lo[active] + hi[active]))

        done = (f == 0) | (np.abs(new - xa) <= tol) | (hi[active] - lo[active] <= tol)
        x[active] = np.where(f == 0, xa, new)
        idx = np.flatnonzero(active)
        active[idx[done]] = False

    raise RootFindingError(
        f"hazard inversion did not converge for {int(active.sum())} people "
        f"after {MAX_ITERATIONS} iterations"
    )


def _first_event(model, birth, exposure, max_age, quadrature):
    """Age at the first event, or NaN when censored at max_age."""
    at_max = np.full(birth.shape, float(max_age))
    reachable = exposure < rates.cumulative_exit_hazard(model, birth + at_max, at_max, quadrature)
    age = np.full(birth.shape, np.nan)
    if reachable.any():
        sub_birth = birth[reachable]
        age[reachable] = invert_cumulative(
            lambda x, m: rates.cumulative_exit_hazard(model, sub_birth[m] + x, x, quadrature),
            lambda x, m: (
                rates.mortality_healthy(model, sub_birth[m] + x, x)
                + rates.incidence(model, sub_birth[m] + x, x)
            ),
            exposure[reachable],
            max_age,
        )
    return age


def _residual_life(model, onset_time, onset_age, exposure, max_age):
    """Years lived after onset, or NaN when censored at max_age."""
    span = max_age - onset_age
    reach = np.maximum(span, 0.0)
    reachable = (span > 0) & (
        exposure < rates.cumulative_m1(model, onset_time + reach, onset_age + reach, reach)
    )
    life = np.full(onset_time.shape, np.nan)
    if reachable.any():
        t0, a0 = onset_time[reachable], onset_age[reachable]
        life[reachable] = invert_cumulative(
            lambda u, m: rates.cumulative_m1(model, t0[m] + u, a0[m] + u, u),
            lambda u, m: (
                rates.mortality_healthy(model, t0[m] + u, a0[m] + u) * model.ratio.ratio(u)
            ),
            exposure[reachable],
            span[reachable],
        )
    return life


def sample_lives(model, birth_times, rng, max_age=110.0, quadrature=None):
    """Simulate the lives of people born at birth_times.

    Draws, in this order: first-event exposures, event-type uniforms and
    post-onset exposures, one of each per person, so the stream consumed
    only depends on the batch size. Returns (onset_times, death_times)
    with NaN for absent events.
    """
    birth = np.asarray(birth_times, dtype=float)
    n = birth.size
    first_exposure = rng.standard_exponential(n)
    type_uniform = rng.random(n)
    second_exposure = rng.standard_exponential(n)

    onset = np.full(n, np.nan)
    death = np.full(n, np.nan)
    if n == 0:
        return onset, death

    event_age = _first_event(model, birth, first_exposure, max_age, quadrature)
    had_event = ~np.isnan(event_age)
    t_event = birth + event_age

    with np.errstate(invalid="ignore"):
        i_rate = np.where(had_event, rates.incidence(model, t_event, np.nan_to_num(event_age)), 0.0)
        m_rate = np.where(
            had_event, rates.mortality_healthy(model, t_event, np.nan_to_num(event_age)), 0.0
        )
        total = i_rate + m_rate
        is_onset = had_event & (type_uniform * total < i_rate)

    direct_death = had_event & ~is_onset
    death[direct_death] = t_event[direct_death]
    onset[is_onset] = t_event[is_onset]

    if is_onset.any():
        life = _residual_life(
            model, t_event[is_onset], event_age[is_onset], second_exposure[is_onset], max_age
        )
        death[is_onset] = t_event[is_onset] + life

    logger.debug(
        f"Sampled {n} lives: {int(is_onset.sum())} onsets, "
        f"{int(np.count_nonzero(~np.isnan(death)))} deaths"
    )
    return onset, death


def sample_life(model, birth_time, rng, max_age=110.0, quadrature=None):
    """One life course; onset and death are None when they do not happen before max_age."""
    onset, death = sample_lives(model, [birth_time], rng, max_age, quadrature)
    return LifeRecord(
        birth_time=float(birth_time),
        onset_time=None if np.isnan(onset[0]) else float(onset[0]),
        death_time=None if np.isnan(death[0]) else float(death[0]),
    )


def thinning_first_event(model, birth_times, rng, max_age=110.0, hazard_bound=None):
    """First event by thinning a homogeneous Poisson process.

    Independent of the inversion sampler, used to cross-check it. Returns
    (event_ages, is_onset); event age is NaN when nothing happens before
    max_age. hazard_bound must dominate m0 + i over the lifetime; by default
    it is 10% above the largest value seen on a 2001-point age grid.
    """
    birth = np.asarray(birth_times, dtype=float)

    def total_hazard(b, x):
        t = b + x
        return rates.mortality_healthy(model, t, x) + rates.incidence(model, t, x)

    if hazard_bound is None:
        grid = np.linspace(0.0, max_age, 2001)
        hazard_bound = 1.1 * max(float(np.max(total_hazard(b, grid))) for b in np.unique(birth))

    ages = np.full(birth.size, np.nan)
    is_onset = np.zeros(birth.size, dtype=bool)
    for k, b in enumerate(birth):
        x = 0.0
        while True:
            x += rng.exponential(1.0 / hazard_bound)
            if x >= max_age:
                break
            i_rate = float(rates.incidence(model, b + x, x))
            h = i_rate + float(rates.mortality_healthy(model, b + x, x))
            if rng.random() * hazard_bound < h:
                ages[k] = x
                is_onset[k] = rng.random() * h < i_rate
                break
    return ages, is_onset
