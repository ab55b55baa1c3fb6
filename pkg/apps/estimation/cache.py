"""
Caching of log-likelihood values.

A fit evaluates the likelihood at many repeated points (simplex restarts,
the Hessian centre), each costing eleven prevalence integrals. Values are
memoized in Django's cache, keyed by the exact bits of gamma, the table
content and the settings that change the likelihood.
"""

from django.core.cache import cache
from django.conf import settings
import hashlib
import logging

logger = logging.getLogger(__name__)


def loglik_cache_key(gamma, table, fit_config):
    """
    Cache key of one likelihood evaluation.

    Args:
        gamma (tuple): mortality ratio parameters
        table (AgeGroupTable): the data
        fit_config (FitConfig): fixed rates and evaluation settings

    Returns:
        str: "loglik:<md5>"
    """
    exact = ",".join(float(g).hex() for g in gamma)
    text = f"{exact}|{table.fingerprint()}|{fit_config.fingerprint()}"
    return f"loglik:{hashlib.md5(text.encode()).hexdigest()}"


def cache_loglik(gamma, table, fit_config, get_function):
    """
    Return the cached likelihood or compute and store it.

    Args:
        gamma (tuple): mortality ratio parameters
        table (AgeGroupTable): the data
        fit_config (FitConfig): fixed rates and evaluation settings
        get_function (callable): computes the value on a cache miss

    Returns:
        float: log-likelihood (may be -inf)
    """
    cache_key = loglik_cache_key(gamma, table, fit_config)
    timeout = settings.CACHE_TIMEOUTS.get("loglik", 3600)

    cached_value = cache.get(cache_key)
    if cached_value is not None:
        logger.debug(f"Log-likelihood cache hit for gamma={tuple(gamma)}")
        return cached_value

    logger.debug(f"Log-likelihood cache miss for gamma={tuple(gamma)}")
    try:
        value = get_function(gamma, table, fit_config)
        cache.set(cache_key, value, timeout)
        return value
    except Exception as e:
        logger.error(f"Log-likelihood evaluation error at gamma={tuple(gamma)}: {str(e)}")
        raise
