"""Lifetime characteristics at the normal operating stress and their intervals.

Point estimates plug the fitted regression vector into the exponential model
at ``x0``; standard errors come from the delta method applied to the sandwich
covariance.  Two interval flavours are produced: the direct Wald interval,
clamped to the natural range, and a transformed interval built on the logit
(reliability) or log (quantile, MTTF) scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np
from scipy import special

from .asymptotics import sandwich_covariance
from .errors import DomainError, NumericalError
from .model import RegressionParams, StressProfile

__all__ = [
    "CharacteristicEstimate",
    "KINDS",
    "reliability",
    "quantile",
    "mttf",
    "characteristic_value",
    "characteristic_gradient",
    "delta_variance",
    "confidence_intervals",
    "z_value",
]

KINDS = ("reliability", "quantile", "mttf")


@dataclass(frozen=True)
class CharacteristicEstimate:
    kind: str
    value: float
    std_error: float
    ci_direct: tuple
    ci_transformed: tuple
    confidence: float
    clamped: bool
    argument: Optional[float] = None  # mission time or quantile level
    x0: Optional[float] = None


def mttf(params: RegressionParams, x0: float) -> float:
    """Mean lifetime ``exp(a0 + a1 * x0)`` at stress ``x0``."""
    return math.exp(params.a0 + params.a1 * x0)


def reliability(t: float, params: RegressionParams, x0: float) -> float:
    """Probability of surviving past mission time ``t`` at stress ``x0``."""
    if t < 0:
        raise DomainError("mission time must be non-negative")
    return math.exp(-t / mttf(params, x0))


def quantile(level: float, params: RegressionParams, x0: float) -> float:
    """Time by which a unit at stress ``x0`` still survives with probability ``level``.

    ``quantile(0.9, ...)`` is ``-log(0.9) * mttf``, so that
    ``reliability(quantile(p)) == p``.
    """
    return -math.log(_check_level(level)) * mttf(params, x0)


def _check_level(level):
    if not 0 < level < 1:
        raise DomainError(f"quantile level must lie in (0, 1), got {level}")
    return level


def _check_kind(kind, argument):
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind != "mttf" and argument is None:
        raise DomainError(f"{kind} needs {'a mission time' if kind == 'reliability' else 'a level'}")


def characteristic_value(kind: str, params: RegressionParams, x0: float, argument: Optional[float] = None) -> float:
    _check_kind(kind, argument)
    if kind == "reliability":
        return reliability(argument, params, x0)
    if kind == "quantile":
        return quantile(argument, params, x0)
    return mttf(params, x0)


def characteristic_gradient(
    kind: str, params: RegressionParams, x0: float, argument: Optional[float] = None
) -> np.ndarray:
    """Gradient of the characteristic with respect to ``(a0, a1)``."""
    _check_kind(kind, argument)
    lam0 = mttf(params, x0)
    if kind == "reliability":
        # d/da exp(-t exp(-a0 - a1 x0)) = R t / lam0 * (1, x0)
        r = math.exp(-argument / lam0)
        g = r * argument / lam0
    elif kind == "quantile":
        g = -math.log(_check_level(argument)) * lam0
    else:
        g = lam0
    return np.array([g, g * x0])


def delta_variance(
    kind: str,
    params: RegressionParams,
    profile: StressProfile,
    beta: float,
    argument: Optional[float] = None,
    x0: Optional[float] = None,
) -> float:
    """Asymptotic variance ``grad^T J^-1 K J^-1 grad`` of ``sqrt(N)`` times the estimate.

    ``x0`` defaults to the profile's normal operating stress.
    """
    x0 = profile.x0 if x0 is None else x0
    grad = characteristic_gradient(kind, params, x0, argument)
    cov = sandwich_covariance(params, profile, beta, 1)
    return float(grad @ cov.sandwich @ grad)


def z_value(confidence: float) -> float:
    """Two-sided standard normal critical value."""
    if not 0 < confidence < 1:
        raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
    return NormalDist().inv_cdf(0.5 + confidence / 2.0)


def confidence_intervals(
    kind: str,
    params: RegressionParams,
    profile: StressProfile,
    beta: float,
    n_units: int,
    confidence: float = 0.95,
    argument: Optional[float] = None,
    x0: Optional[float] = None,
    sigma: Optional[float] = None,
) -> CharacteristicEstimate:
    """Point estimate with direct and transformed intervals.

    ``sigma`` overrides the delta-method standard deviation (of ``sqrt(N)``
    times the estimate); it is computed from the sandwich otherwise.

    Raises
    ------
    NumericalError
        If a reliability estimate is exactly 0 or 1 with a positive standard
        error, where the logit interval is undefined.
    """
    if n_units < 1:
        raise DomainError("N must be at least 1")
    x0 = profile.x0 if x0 is None else x0
    value = characteristic_value(kind, params, x0, argument)
    if sigma is None:
        sigma = math.sqrt(max(delta_variance(kind, params, profile, beta, argument, x0), 0.0))
    se = sigma / math.sqrt(n_units)
    z = z_value(confidence)

    lo, hi = value - z * se, value + z * se
    upper_bound = 1.0 if kind == "reliability" else math.inf
    clamped = lo < 0.0 or hi > upper_bound
    direct = (max(lo, 0.0), min(hi, upper_bound))

    if se == 0.0:
        transformed = (value, value)
    elif kind == "reliability":
        if value <= 0.0 or value >= 1.0:
            raise NumericalError(f"logit interval is degenerate at reliability {value}")
        # R / (R + (1 - R) * S^(+-1)) written as expit(logit(R) -+ log S) so a huge S cannot overflow
        centre, spread = special.logit(value), z * se / (value * (1.0 - value))
        transformed = (float(special.expit(centre - spread)), float(special.expit(centre + spread)))
    else:
        w = math.exp(z * se / value)
        transformed = (value / w, value * w)

    return CharacteristicEstimate(kind, value, se, direct, transformed, confidence, clamped, argument, x0)
