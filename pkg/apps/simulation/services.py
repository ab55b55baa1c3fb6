"""
Simulation service layer.

Runs the Lexis-plane microsimulation and aggregates it into current-status
tables. Every birth year draws from its own child of
SeedSequence(rng_seed), so a run is reproducible whatever the number of
worker threads.
"""

from dataclasses import dataclass, replace
import logging
import time

import numpy as np
from numpy.random import SeedSequence, default_rng

from apps.analysis.quadrature import QuadratureConfig, gauss_kronrod
from apps.analysis.results import CohortBaseline
from apps.analysis.services import survival_healthy_S, total_cases_Cstar
from apps.core.parallel import ordered_map
from idmodds.exceptions import ConfigError, DomainError
from .sampler import sample_lives
from .tables import PUBLISHED_ALIVE_TOTAL, AgeGroupTable, PopulationLedger

logger = logging.getLogger(__name__)

CALIBRATION_QUADRATURE = QuadratureConfig(rel_tol=1e-7, abs_tol=1e-12)


# ==============================
# SIMULATION
# ==============================

def _simulate_year(model, config, start, seed, quadrature):
    rng = default_rng(seed)
    births = start + rng.random(config.births_per_year)
    onset, death = sample_lives(model, births, rng, config.max_age, quadrature)
    return births, onset, death


def run_simulation(model, config, quadrature=None):
    """
    Simulate every birth of the configured birth window.

    Args:
        model (RateModel): transition rates
        config (SimConfig): birth process and follow-up
        quadrature (QuadratureConfig): only used by tabulated incidence

    Returns:
        PopulationLedger: one row per birth, ordered by birth year
    """
    started = time.perf_counter()
    seeds = SeedSequence(config.rng_seed).spawn(config.n_years)
    first_year = config.birth_window[0]

    years = ordered_map(
        lambda j: _simulate_year(model, config, first_year + j, seeds[j], quadrature),
        range(config.n_years),
    )
    births, onsets, deaths = (np.concatenate(column) for column in zip(*years))
    ledger = PopulationLedger.from_arrays(births, onsets, deaths)

    logger.info(
        f"Simulated {len(ledger)} lives (seed {config.rng_seed}) "
        f"in {time.perf_counter() - started:.1f}s"
    )
    return ledger


def cross_section(ledger, config):
    """
    Count the living and the diseased per age group at the cross-section.

    Someone counts as alive at T when born at or before T and not dead by T,
    and as diseased when also diagnosed at or before T.
    """
    T = config.cross_section_time

    frame = ledger.frame
    birth = frame["birth"].to_numpy(dtype=float)
    onset = frame["onset"].to_numpy(dtype=float)
    death = frame["death"].to_numpy(dtype=float)

    with np.errstate(invalid="ignore"):
        alive = (birth <= T) & (np.isnan(death) | (death > T))
        diseased = alive & ~np.isnan(onset) & (onset <= T)
    age = T - birth

    n, c = [], []
    for lo, hi in config.age_groups:
        in_group = alive & (age >= lo) & (age < hi)
        n.append(int(np.count_nonzero(in_group)))
        c.append(int(np.count_nonzero(in_group & diseased)))

    return AgeGroupTable.from_counts(config.age_groups, n, c, T)


def replicate_runs(model, config, n_replicates, quadrature=None):
    """
    Simulate n_replicates independent studies, replicate i seeded rng_seed + i.

    Yields:
        tuple: (SimConfig of the replicate, PopulationLedger, AgeGroupTable)
    """
    if n_replicates < 1:
        raise ConfigError("n_replicates must be at least 1")
    for i in range(n_replicates):
        replicate = config.with_seed(config.rng_seed + i)
        ledger = run_simulation(model, replicate, quadrature)
        logger.debug(f"Replicate {i + 1}/{n_replicates} done")
        yield replicate, ledger, cross_section(ledger, replicate)


def replicate_study(model, config, n_replicates, quadrature=None):
    """Tables of n_replicates independent studies, replicate i seeded rng_seed + i."""
    return [table for _, _, table in replicate_runs(model, config, n_replicates, quadrature)]


# ==============================
# CALIBRATION AND CHECKS
# ==============================

def expected_alive_per_birth(model, config, quadrature=None):
    """Expected number alive in the study ages at the cross-section per unit birth rate."""
    quadrature = quadrature or CALIBRATION_QUADRATURE
    baseline = CohortBaseline()
    T = config.cross_section_time

    def alive(a):
        return survival_healthy_S(model, baseline, T, a, quadrature) + total_cases_Cstar(
            model, baseline, T, a, quadrature
        )

    density = np.vectorize(alive, otypes=[float])
    return sum(gauss_kronrod(density, lo, hi, quadrature) for lo, hi in config.age_groups)


def calibrate_births(model, config, target=PUBLISHED_ALIVE_TOTAL, quadrature=None):
    """Copy of config with births_per_year giving `target` expected alive people."""
    expected = expected_alive_per_birth(model, config, quadrature)
    if not expected > 0:
        raise DomainError("nobody is expected alive in the study ages")
    births = max(1, int(round(target / expected)))
    logger.info(f"Calibrated births_per_year={births} (target {target}, {expected:.4f} per birth)")
    return replace(config, births_per_year=births)


@dataclass(frozen=True)
class RateRatioEstimate:
    ratio: float
    se_log: float
    deaths_healthy: int
    deaths_diseased: int
    expected_healthy: float
    expected_diseased: float


def person_time_rate_ratio(model, ledger, config):
    """
    Mortality rate ratio of diseased against healthy person-time.

    Deaths in each state are compared with the number expected under m0
    over the same person-time (m0 integrated along each life segment),
    which removes the age difference between the two states. Under
    m1 = gamma3 * m0 the ratio estimates gamma3.
    """
    frame = ledger.frame
    birth = frame["birth"].to_numpy(dtype=float)
    onset = frame["onset"].to_numpy(dtype=float)
    death = frame["death"].to_numpy(dtype=float)

    has_onset = ~np.isnan(onset)
    end_age = np.where(np.isnan(death), config.max_age, death - birth)
    healthy_end = np.where(has_onset, onset - birth, end_age)
    sick_span = np.where(has_onset, end_age - healthy_end, 0.0)

    m0 = model.m0
    expected_healthy = float(np.sum(m0.cumulative(birth + healthy_end, healthy_end, healthy_end)))
    expected_diseased = float(np.sum(m0.cumulative(birth + end_age, end_age, sick_span)))
    deaths_healthy = int(np.count_nonzero(~np.isnan(death) & ~has_onset))
    deaths_diseased = int(np.count_nonzero(~np.isnan(death) & has_onset))

    if deaths_healthy == 0 or deaths_diseased == 0 or expected_diseased <= 0:
        raise DomainError("need deaths in both states to estimate a rate ratio")

    ratio = (deaths_diseased / expected_diseased) / (deaths_healthy / expected_healthy)
    return RateRatioEstimate(
        ratio=ratio,
        se_log=float(np.sqrt(1.0 / deaths_diseased + 1.0 / deaths_healthy)),
        deaths_healthy=deaths_healthy,
        deaths_diseased=deaths_diseased,
        expected_healthy=expected_healthy,
        expected_diseased=expected_diseased,
    )
