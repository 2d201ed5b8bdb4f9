"""Density power divergence objective for censored step-stress data.

The observable law is a mixture of a continuous part on ``[0, tau2)`` and a
point mass at ``tau2``.  For a tuning parameter ``beta > 0`` the empirical
divergence, up to terms that do not depend on the parameters, is

    H(a) = h1(a) - h2(a)

where ``h1`` integrates ``f ** (beta + 1)`` over the continuous part and adds
the point mass raised to ``beta + 1``, and ``h2`` is ``(1 + 1/beta)`` times the
sample average of ``f ** beta`` (the point mass to the power ``beta`` for
each censored unit).  At ``beta = 0`` the objective is the negative
log-likelihood divided by ``N``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .data import ExperimentData
from .errors import DomainError, NumericalError, OracleError
from .model import RegressionParams, StressProfile, rates_from_regression

__all__ = [
    "dpd_h1",
    "dpd_h2",
    "dpd_objective",
    "neg_log_likelihood",
    "dpd_quadrature_oracle",
]


def _check_beta(beta: float, allow_zero: bool = False) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0 or (beta == 0 and not allow_zero):
        raise DomainError(f"beta must be {'>= 0' if allow_zero else '> 0'}, got {beta}")
    return beta


def dpd_h1(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    """Data-free part of the objective.

    Sum of the integral of ``f ** (beta + 1)`` over each stage and the
    survival probability at ``tau2`` raised to ``beta + 1``.
    """
    beta = _check_beta(beta)
    r = rates_from_regression(params, profile)
    c = beta + 1.0
    e_tau1 = math.exp(-c * profile.tau1 / r.lambda1)
    e_tau2 = math.exp(-c * (profile.tau2 + r.h) / r.lambda2)
    stage1 = r.lambda1 ** -beta / c * (1.0 - e_tau1)
    # (tau1 + h) / lambda2 == tau1 / lambda1, so the stage-2 integral starts at e_tau1
    stage2 = r.lambda2 ** -beta / c * (e_tau1 - e_tau2)
    return stage1 + stage2 + e_tau2


def dpd_h2(params: RegressionParams, profile: StressProfile, data: ExperimentData, beta: float) -> float:
    """Data term: ``(beta + 1) / (beta * N)`` times the summed ``f ** beta``.

    Enters the objective with a negative sign.
    """
    beta = _check_beta(beta)
    if data.n_units < 1:
        raise DomainError("the data term needs N >= 1")
    r = rates_from_regression(params, profile)
    log_l1, log_l2 = math.log(r.lambda1), math.log(r.lambda2)
    # f^beta = exp(beta * log f), evaluated in log space
    s1 = np.exp(-beta * (log_l1 + data.stage1_times / r.lambda1)).sum()
    s2 = np.exp(-beta * (log_l2 + (data.stage2_times + r.h) / r.lambda2)).sum()
    s_cens = data.n_censored * math.exp(-beta * (profile.tau2 + r.h) / r.lambda2)
    return (beta + 1.0) / (beta * data.n_units) * (s1 + s2 + s_cens)


def neg_log_likelihood(params: RegressionParams, profile: StressProfile, data: ExperimentData) -> float:
    """Negative log-likelihood without the constant factorial terms."""
    r = rates_from_regression(params, profile)
    return (
        data.n1 * math.log(r.lambda1)
        + data.n2 * math.log(r.lambda2)
        + data.stage1_times.sum() / r.lambda1
        + (data.stage2_times + r.h).sum() / r.lambda2
        + data.n_censored * (profile.tau2 + r.h) / r.lambda2
    )


def dpd_objective(params: RegressionParams, profile: StressProfile, data: ExperimentData, beta: float) -> float:
    """Empirical DPD loss ``h1 - h2``; ``neg_log_likelihood / N`` at ``beta = 0``.

    Raises
    ------
    NumericalError
        If the value is not finite.
    """
    beta = _check_beta(beta, allow_zero=True)
    if beta == 0.0:
        if data.n_units < 1:
            raise DomainError("the objective needs N >= 1")
        value = neg_log_likelihood(params, profile, data) / data.n_units
    else:
        value = dpd_h1(params, profile, beta) - dpd_h2(params, profile, data, beta)
    if not math.isfinite(value):
        raise NumericalError(f"non-finite objective at a0={params.a0}, a1={params.a1}, beta={beta}")
    return value


def dpd_quadrature_oracle(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    """``h1`` by adaptive quadrature of the densities themselves (test oracle)."""
    beta = _check_beta(beta)
    r = rates_from_regression(params, profile)

    def f1(t):
        return math.exp(-t / r.lambda1) / r.lambda1

    def f2(t):
        return math.exp(-(t + r.h) / r.lambda2) / r.lambda2

    total = 0.0
    for f, lo, hi in ((f1, 0.0, profile.tau1), (f2, profile.tau1, profile.tau2)):
        value, err = integrate.quad(lambda t: f(t) ** (beta + 1.0), lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        if not math.isfinite(value) or err > 1e-10 * max(abs(value), 1e-300):
            raise OracleError(f"quadrature did not converge on [{lo}, {hi}] (error estimate {err:g})")
        total += value
    surv = math.exp(-(profile.tau2 + r.h) / r.lambda2)
    return total + surv ** (beta + 1.0)
