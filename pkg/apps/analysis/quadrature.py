"""
Adaptive Gauss-Kronrod quadrature for vectorized integrands.

The outer integrals of the prevalence formulas are evaluated with a
global adaptive 7/15-point Gauss-Kronrod scheme. All intervals that still
carry too much error are bisected together and their 15 nodes evaluated
in a single call of the integrand, so the integrand must accept a numpy
array of any shape and return an array of the same shape.

Error estimates follow QUADPACK's qk15 heuristics. Results are
deterministic: the same integrand, limits and tolerances always produce
the same subdivision and the same floating-point sum.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy import integrate

from idmodds.exceptions import ConfigError, QuadratureError

logger = logging.getLogger(__name__)

# Kronrod abscissae (positive half, decreasing) and weights; the Gauss
# points are every second abscissa.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
GAUSS_WEIGHTS = np.zeros(15)
for _j, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_j] = GAUSS_WEIGHTS[14 - _j] = _w
GAUSS_WEIGHTS[7] = _WG[3]

_EPMACH = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances of the adaptive quadrature."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise ConfigError("max_subdivisions must be at least 1")

    @classmethod
    def from_config(cls, section):
        section = section or {}
        return cls(
            rel_tol=section.get("rel_tol", cls.rel_tol),
            abs_tol=section.get("abs_tol", cls.abs_tol),
            max_subdivisions=section.get("max_subdivisions", cls.max_subdivisions),
        )

    def tightened(self, rel_tol, abs_tol=None):
        """Copy with tolerances no looser than the given ones."""
        return QuadratureConfig(
            rel_tol=min(self.rel_tol, rel_tol),
            abs_tol=min(self.abs_tol, abs_tol if abs_tol is not None else self.abs_tol),
            max_subdivisions=max(self.max_subdivisions, 400),
        )


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    intervals: int


def _kronrod15(f, lo, hi):
    """Apply the 7/15 rule on every interval [lo_i, hi_i] at once."""
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center[:, None] + half[:, None] * NODES[None, :]
    fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand is not finite on the integration range")

    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    resasc = np.abs(fx - 0.5 * resk[:, None]) @ KRONROD_WEIGHTS

    value = resk * half
    resabs = resabs * np.abs(half)
    resasc = resasc * np.abs(half)
    err = np.abs((resk - resg) * half)

    scaled = (resasc != 0) & (err != 0)
    err = np.where(
        scaled,
        resasc * np.minimum(1.0, (200.0 * err / np.where(scaled, resasc, 1.0)) ** 1.5),
        err,
    )
    floor = resabs > _UFLOW / (50.0 * _EPMACH)
    err = np.where(floor, np.maximum(50.0 * _EPMACH * resabs, err), err)
    return value, err


def gauss_kronrod_full(f, lower, upper, config=None, points=()):
    """
    Integrate a vectorized function over [lower, upper].

    Args:
        f (callable): integrand, evaluated on numpy arrays
        lower (float): lower limit
        upper (float): upper limit
        config (QuadratureConfig): tolerances and subdivision budget
        points (iterable): breakpoints (kinks, discontinuities) inside the range

    Returns:
        QuadratureResult: value, error estimate and number of intervals

    Raises:
        QuadratureError: if the tolerance is not met within max_subdivisions
    """
    config = config or QuadratureConfig()
    lower, upper = float(lower), float(upper)
    if upper == lower:
        return QuadratureResult(0.0, 0.0, 0)
    if upper < lower:
        flipped = gauss_kronrod_full(f, upper, lower, config, points)
        return QuadratureResult(-flipped.value, flipped.error, flipped.intervals)

    inner = sorted({float(p) for p in points if lower < float(p) < upper})
    edges = np.array([lower] + inner + [upper])
    lo, hi = edges[:-1], edges[1:]
    value, err = _kronrod15(f, lo, hi)
    span = upper - lower

    while True:
        total = float(np.sum(value))
        total_err = float(np.sum(err))
        tol = max(config.abs_tol, config.rel_tol * abs(total))
        if total_err <= tol:
            return QuadratureResult(total, total_err, lo.size)

        capacity = config.max_subdivisions - lo.size
        width = hi - lo
        split = (err > tol * width / span) & (width > 64 * _EPMACH * span)
        if capacity <= 0 or not np.any(split):
            raise QuadratureError(
                f"quadrature on [{lower}, {upper}] stopped at error {total_err:.3e} "
                f"> tolerance {tol:.3e} after {lo.size} intervals"
            )
        chosen = np.flatnonzero(split)
        if chosen.size > capacity:
            chosen = chosen[np.argsort(-err[chosen], kind="stable")[:capacity]]
            chosen.sort()

        keep = np.ones(lo.size, dtype=bool)
        keep[chosen] = False
        mid = 0.5 * (lo[chosen] + hi[chosen])
        new_lo = np.concatenate([lo[chosen], mid])
        new_hi = np.concatenate([mid, hi[chosen]])
        new_value, new_err = _kronrod15(f, new_lo, new_hi)

        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        value = np.concatenate([value[keep], new_value])
        err = np.concatenate([err[keep], new_err])
        order = np.argsort(lo, kind="stable")
        lo, hi, value, err = lo[order], hi[order], value[order], err[order]


def gauss_kronrod(f, lower, upper, config=None, points=()):
    """Value of gauss_kronrod_full."""
    return gauss_kronrod_full(f, lower, upper, config, points).value


def quadpack(f, lower, upper, config=None, points=None):
    """
    Integrate a scalar function with scipy's QUADPACK wrapper.

    Used for nested inner integrals and as an independent oracle.

    Raises:
        QuadratureError: if QUADPACK reports a failure
    """
    config = config or QuadratureConfig()
    if upper == lower:
        return 0.0
    if points is not None:
        points = [p for p in points if min(lower, upper) < p < max(lower, upper)] or None
    out = integrate.quad(
        f, lower, upper,
        epsabs=config.abs_tol, epsrel=config.rel_tol,
        limit=config.max_subdivisions, points=points, full_output=1,
    )
    if len(out) == 4:
        logger.error(f"QUADPACK failure on [{lower}, {upper}]: {out[3]}")
        raise QuadratureError(out[3])
    return out[0]
