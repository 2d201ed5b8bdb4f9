"""Sandwich asymptotic covariance of the MDPDE.

With score ``u = d log f / d(a0, a1)`` and the observable mixed law (a
continuous part on each stage plus the survival mass ``S`` at ``tau2``)

    J_beta  = int u u^T f^(1+beta) dt + u_S u_S^T S^(1+beta)
    xi_beta = int u   f^(1+beta) dt   + u_S S^(1+beta)
    K_beta  = J_(2 beta) - xi_beta xi_beta^T

and ``sqrt(N) (a_hat - a) -> Normal(0, J^-1 K J^-1)``.

The scores are affine in time on each stage:

* stage 1:  ``u = (-1 + t/l1) * (1, x1)``
* stage 2:  ``u = (L + t/l2, L* + x2 t/l2)`` with ``L = -1 - tau1/l2 + tau1/l1``
  and ``L* = -x2 - x2 tau1/l2 + x1 tau1/l1``
* boundary: ``u_S = ((tau2 + h)/l2, x2 (tau2 - tau1)/l2 + x1 tau1/l1)``

so every integral reduces to the truncated exponential moments computed by
:func:`_stage_moments`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, OracleError, SingularMatrixError
from .model import RateParams, RegressionParams, StressProfile, rates_from_regression

__all__ = [
    "AsymptoticCovariance",
    "j_beta_a0",
    "j_beta_a1",
    "j_beta_cross",
    "xi_beta_a0",
    "xi_beta_a1",
    "j_matrix",
    "xi_vector",
    "j_terms",
    "xi_terms",
    "sandwich_covariance",
    "j_quadrature_oracle",
]


def _poly(k: int, z: float) -> float:
    # int u^k e^{-cu} du = -e^{-cu} P_k(cu) / c^{k+1}
    if k == 0:
        return 1.0
    if k == 1:
        return z + 1.0
    return z * z + 2.0 * z + 2.0


def _stage_moments(r: RateParams, profile: StressProfile, beta: float):
    """Weighted moments ``m_k = int (t/l)^k f^(beta+1) dt`` for k = 0, 1, 2 on each stage.

    Stage 1 uses ``t/l1`` on ``[0, tau1]``; stage 2 uses ``t/l2`` on
    ``[tau1, tau2]`` with the shifted density ``f2(t + h)``.
    """
    c = beta + 1.0
    l1, l2 = r.lambda1, r.lambda2
    e_tau1 = math.exp(-c * profile.tau1 / l1)  # also e^{-c (tau1 + h) / l2}
    e_tau2 = math.exp(-c * (profile.tau2 + r.h) / l2)
    z11 = c * profile.tau1 / l1
    z21, z22 = c * profile.tau1 / l2, c * profile.tau2 / l2
    stage1 = [
        l1 ** -beta / c ** (k + 1) * (_poly(k, 0.0) - e_tau1 * _poly(k, z11)) for k in range(3)
    ]
    stage2 = [
        l2 ** -beta / c ** (k + 1) * (e_tau1 * _poly(k, z21) - e_tau2 * _poly(k, z22)) for k in range(3)
    ]
    return stage1, stage2, e_tau2


def _score_coefficients(r: RateParams, profile: StressProfile):
    l1, l2 = r.lambda1, r.lambda2
    x1, x2, tau1, tau2 = profile.x1, profile.x2, profile.tau1, profile.tau2
    L = -1.0 - tau1 / l2 + tau1 / l1
    L_star = -x2 - x2 * tau1 / l2 + x1 * tau1 / l1
    boundary = ((tau2 + r.h) / l2, x2 * (tau2 - tau1) / l2 + x1 * tau1 / l1)
    return L, L_star, boundary


def _check_beta(beta):
    beta = float(beta)
    if not (math.isfinite(beta) and beta >= 0):
        raise DomainError(f"beta must be >= 0, got {beta}")
    return beta


def j_terms(params: RegressionParams, profile: StressProfile, beta: float) -> dict:
    """Per-region pieces of ``J_beta``.

    Returns ``{"a0": (stage1, stage2, boundary), "a1": (...), "cross": (...)}``.
    """
    beta = _check_beta(beta)
    r = rates_from_regression(params, profile)
    (p0, p1, p2), (q0, q1, q2), surv_c = _stage_moments(r, profile, beta)
    L, Ls, (b0, b1) = _score_coefficients(r, profile)
    x1, x2 = profile.x1, profile.x2

    # stage 1: (-1 + v)^2 integrated against f1^(beta+1)
    s1 = p2 - 2.0 * p1 + p0
    a0 = (s1, L * L * q0 + 2.0 * L * q1 + q2, b0 * b0 * surv_c)
    a1 = (x1 * x1 * s1, Ls * Ls * q0 + 2.0 * Ls * x2 * q1 + x2 * x2 * q2, b1 * b1 * surv_c)
    cross = (x1 * s1, L * Ls * q0 + (L * x2 + Ls) * q1 + x2 * q2, b0 * b1 * surv_c)
    return {"a0": a0, "a1": a1, "cross": cross}


def xi_terms(params: RegressionParams, profile: StressProfile, beta: float) -> dict:
    """Per-region pieces of ``xi_beta``: ``{"a0": (...), "a1": (...)}``."""
    beta = _check_beta(beta)
    r = rates_from_regression(params, profile)
    (p0, p1, _), (q0, q1, _), surv_c = _stage_moments(r, profile, beta)
    L, Ls, (b0, b1) = _score_coefficients(r, profile)
    s1 = p1 - p0
    return {
        "a0": (s1, L * q0 + q1, b0 * surv_c),
        "a1": (profile.x1 * s1, Ls * q0 + profile.x2 * q1, b1 * surv_c),
    }


def j_beta_a0(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    return math.fsum(j_terms(params, profile, beta)["a0"])


def j_beta_a1(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    return math.fsum(j_terms(params, profile, beta)["a1"])


def j_beta_cross(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    return math.fsum(j_terms(params, profile, beta)["cross"])


def xi_beta_a0(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    return math.fsum(xi_terms(params, profile, beta)["a0"])


def xi_beta_a1(params: RegressionParams, profile: StressProfile, beta: float) -> float:
    return math.fsum(xi_terms(params, profile, beta)["a1"])


def j_matrix(params: RegressionParams, profile: StressProfile, beta: float) -> np.ndarray:
    terms = j_terms(params, profile, beta)
    j00, j11, j01 = (math.fsum(terms[k]) for k in ("a0", "a1", "cross"))
    return np.array([[j00, j01], [j01, j11]])


def xi_vector(params: RegressionParams, profile: StressProfile, beta: float) -> np.ndarray:
    terms = xi_terms(params, profile, beta)
    return np.array([math.fsum(terms["a0"]), math.fsum(terms["a1"])])


@dataclass(frozen=True)
class AsymptoticCovariance:
    """Sandwich pieces at one ``beta``.

    ``sandwich`` is the covariance of ``sqrt(N) (a_hat - a)``; the variances
    of the estimates themselves are ``n_scaled_variances = diag(sandwich)/N``.
    """

    J: np.ndarray
    K: np.ndarray
    sandwich: np.ndarray
    n_scaled_variances: np.ndarray
    beta: float
    n_units: int

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(self.n_scaled_variances)

    @property
    def covariance(self) -> np.ndarray:
        """Covariance matrix of the estimates, ``sandwich / N``."""
        return self.sandwich / self.n_units


_SINGULAR_RTOL = 1e-12  # beyond a condition of ~1e12 fewer than four digits survive


def _inverse_2x2(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    norm = np.max(np.abs(m))
    if not math.isfinite(det) or abs(det) < _SINGULAR_RTOL * norm * norm:
        cond = math.inf if det == 0 or not math.isfinite(det) else norm * norm / abs(det)
        raise SingularMatrixError(f"J is singular (det={det:.3g}, condition estimate {cond:.3g})", cond)
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def sandwich_covariance(
    params: RegressionParams, profile: StressProfile, beta: float, n_units: int
) -> AsymptoticCovariance:
    """Assemble ``J_beta``, ``K_beta = J_2beta - xi xi^T`` and ``J^-1 K J^-1``."""
    beta = _check_beta(beta)
    if n_units < 1:
        raise DomainError("N must be at least 1")
    J = j_matrix(params, profile, beta)
    xi = xi_vector(params, profile, beta)
    K = j_matrix(params, profile, 2.0 * beta) - np.outer(xi, xi)
    J_inv = _inverse_2x2(J)
    sandwich = J_inv @ K @ J_inv
    sandwich = 0.5 * (sandwich + sandwich.T)
    return AsymptoticCovariance(J, K, sandwich, np.diag(sandwich) / n_units, beta, int(n_units))


def j_quadrature_oracle(
    params: RegressionParams, profile: StressProfile, beta: float, which: str = "a0", moment: str = "J"
) -> float:
    """Integrate score products against ``f^(beta+1)`` numerically (test oracle).

    The score is the analytic derivative of ``log f`` written directly in
    terms of ``t``; the integrals are done by adaptive quadrature on each stage.
    """
    beta = _check_beta(beta)
    if which not in ("a0", "a1", "cross") or moment not in ("J", "xi"):
        raise DomainError("which in {a0, a1, cross}, moment in {J, xi}")
    if moment == "xi" and which == "cross":
        raise DomainError("xi has no cross component")
    r = rates_from_regression(params, profile)
    l1, l2, h = r.lambda1, r.lambda2, r.h
    x1, x2, tau1, tau2 = profile.x1, profile.x2, profile.tau1, profile.tau2
    c = beta + 1.0

    # d/d(a0, a1) of log f, with dl_i/da0 = l_i and dl_i/da1 = x_i l_i
    def score1(t):
        return (-1.0 + t / l1, x1 * (-1.0 + t / l1))

    def score2(t):
        # log f2(t+h) = -log l2 - (t - tau1)/l2 - tau1/l1
        return (
            -1.0 + (t - tau1) / l2 + tau1 / l1,
            -x2 + x2 * (t - tau1) / l2 + x1 * tau1 / l1,
        )

    surv = math.exp(-(tau2 - tau1) / l2 - tau1 / l1)
    score_s = ((tau2 - tau1) / l2 + tau1 / l1, x2 * (tau2 - tau1) / l2 + x1 * tau1 / l1)

    def combine(u):
        if moment == "xi":
            return u[0] if which == "a0" else u[1]
        if which == "a0":
            return u[0] * u[0]
        if which == "a1":
            return u[1] * u[1]
        return u[0] * u[1]

    def f1(t):
        return math.exp(-t / l1) / l1

    def f2(t):
        return math.exp(-(t + h) / l2) / l2

    total = 0.0
    for score, f, lo, hi in ((score1, f1, 0.0, tau1), (score2, f2, tau1, tau2)):
        value, err = integrate.quad(
            lambda t: combine(score(t)) * f(t) ** c, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=200
        )
        if not math.isfinite(value) or err > 1e-9 * max(abs(value), 1e-12):
            raise OracleError(f"quadrature did not converge on [{lo}, {hi}] (error estimate {err:g})")
        total += value
    return total + combine(score_s) * surv ** c
