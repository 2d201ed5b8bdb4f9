"""Cumulative-exposure model for a simple (two-level) step-stress test.

Lifetimes are exponential at every constant stress level and the scale at
stress ``x`` follows the log-linear link ``lambda = exp(a0 + a1 * x)``.  When
the stress is raised at ``tau1`` the second-stage distribution is shifted by
``h`` so that the c.d.f. stays continuous; the test is Type-I censored at
``tau2``.

All functions accept scalars or numpy arrays for the time/probability argument
and return the same kind of object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

__all__ = [
    "StressProfile",
    "RegressionParams",
    "RateParams",
    "rates_from_regression",
    "lifetime_cdf",
    "lifetime_pdf",
    "survival_at_end",
    "inverse_cdf",
    "SIMULATION_PROFILE",
    "SIMULATION_PARAMS",
]


@dataclass(frozen=True)
class StressProfile:
    """Design of a simple step-stress experiment.

    Parameters
    ----------
    x1, x2 : float
        Stress levels of the first and second stage, ``x1 < x2``.
    tau1 : float
        Time at which the stress is raised.
    tau2 : float
        Termination (censoring) time, ``tau2 > tau1``.
    x0 : float
        Normal operating stress, ``x0 < x1``.
    """

    x1: float
    x2: float
    tau1: float
    tau2: float
    x0: float = 0.0

    def __post_init__(self):
        problems = []
        if not 0 < self.tau1 < self.tau2:
            problems.append(f"need 0 < tau1 < tau2, got tau1={self.tau1}, tau2={self.tau2}")
        if not self.x1 < self.x2:
            problems.append(f"need x1 < x2, got x1={self.x1}, x2={self.x2}")
        if not self.x0 < self.x1:
            problems.append(f"need x0 < x1, got x0={self.x0}, x1={self.x1}")
        if problems:
            raise DomainError("; ".join(problems))

    def scaled(self, c: float) -> "StressProfile":
        """Same design with both time points multiplied by ``c``."""
        return StressProfile(self.x1, self.x2, self.tau1 * c, self.tau2 * c, self.x0)


@dataclass(frozen=True)
class RegressionParams:
    """Regression vector of the log-linear stress link."""

    a0: float
    a1: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=float)

    @classmethod
    def from_array(cls, values) -> "RegressionParams":
        a0, a1 = (float(v) for v in values)
        return cls(a0, a1)


@dataclass(frozen=True)
class RateParams:
    """Exponential scales at both stress levels plus the exposure shift ``h``."""

    lambda1: float
    lambda2: float
    h: float


def rates_from_regression(params: RegressionParams, profile: StressProfile) -> RateParams:
    """Evaluate the stress link at both stages and the continuity shift."""
    try:
        lam1 = math.exp(params.a0 + params.a1 * profile.x1)
        lam2 = math.exp(params.a0 + params.a1 * profile.x2)
    except OverflowError:
        lam1 = lam2 = math.inf
    if not (math.isfinite(lam1) and math.isfinite(lam2) and lam1 > 0 and lam2 > 0):
        raise NumericalError(f"non-finite rate for a0={params.a0}, a1={params.a1}")
    # G1(tau1) = G2(tau1 + h)
    h = (lam2 / lam1) * profile.tau1 - profile.tau1
    return RateParams(lam1, lam2, h)


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def lifetime_cdf(t, rates: RateParams, profile: StressProfile, censored: bool = True):
    """C.d.f. of the lifetime under the step-stress design.

    With ``censored=True`` (default) this is the observable c.d.f., which
    jumps to 1 at ``tau2``.  With ``censored=False`` the second branch is
    extended beyond ``tau2``.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("lifetime_cdf is defined for t >= 0")
    # clip each branch to its own range so the unused one cannot overflow
    t1, t2 = np.minimum(t, profile.tau1), np.maximum(t, profile.tau1)
    out = np.where(
        t < profile.tau1,
        -np.expm1(-t1 / rates.lambda1),
        -np.expm1(-(t2 + rates.h) / rates.lambda2),
    )
    if censored:
        out = np.where(t >= profile.tau2, 1.0, out)
    return _as_output(out, scalar)


def lifetime_pdf(t, rates: RateParams, profile: StressProfile):
    """Continuous component of the observable lifetime law on ``[0, tau2)``.

    The point mass at ``tau2`` is given by :func:`survival_at_end`.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= profile.tau2):
        raise DomainError("lifetime_pdf is defined on [0, tau2); use survival_at_end for the mass at tau2")
    t1, t2 = np.minimum(t, profile.tau1), np.maximum(t, profile.tau1)
    out = np.where(
        t < profile.tau1,
        np.exp(-t1 / rates.lambda1) / rates.lambda1,
        np.exp(-(t2 + rates.h) / rates.lambda2) / rates.lambda2,
    )
    return _as_output(out, scalar)


def survival_at_end(rates: RateParams, profile: StressProfile) -> float:
    """Probability that a unit survives to the termination time."""
    return math.exp(-(profile.tau2 + rates.h) / rates.lambda2)


def inverse_cdf(u, rates: RateParams, profile: StressProfile):
    """Inverse of the uncensored c.d.f.

    The result can exceed ``tau2``; censoring is left to the caller.
    """
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u >= 1) or np.any(np.isnan(u)):
        raise DomainError("inverse_cdf needs 0 <= u < 1")
    u_change = -math.expm1(-profile.tau1 / rates.lambda1)
    neg_log_surv = -np.log1p(-u)
    out = np.where(
        u < u_change,
        rates.lambda1 * neg_log_surv,
        rates.lambda2 * neg_log_surv - rates.h,
    )
    return _as_output(out, scalar)


#: Design of the contaminated-data simulation study.  ``x0`` is not part of
#: that design; 0 is used so the normal-use characteristics are defined.
SIMULATION_PROFILE = StressProfile(x1=1.0, x2=2.0, tau1=10.0, tau2=33.0, x0=0.0)
SIMULATION_PARAMS = RegressionParams(a0=3.5, a1=-1.0)
