"""Minimum density power divergence estimation of the regression vector."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .data import ExperimentData
from .errors import DomainError, NonexistenceError
from .loss import dpd_objective
from .model import RegressionParams, StressProfile
from .optimize import nelder_mead

__all__ = ["FitConfig", "FitResult", "fit_mdpde", "fit_mle_closed_form", "fit_path", "mle_stage_scales"]

log = logging.getLogger(__name__)

_MAX_RESTARTS = 3


@dataclass(frozen=True)
class FitConfig:
    """Settings for one MDPDE fit.

    ``initial_point="auto"`` starts from the closed-form MLE.  The initial
    simplex steps are ``simplex_scale * |coordinate|`` (``simplex_scale`` for
    a zero coordinate).
    """

    beta: float = 0.0
    initial_point: Union[RegressionParams, str] = "auto"
    simplex_scale: float = 0.1
    tol_objective: float = 1e-10
    tol_param: float = 1e-8
    max_iterations: int = 5000

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.beta) and self.beta >= 0):
            problems.append(f"beta must be >= 0, got {self.beta}")
        if not self.simplex_scale > 0:
            problems.append("simplex_scale must be positive")
        if not (self.tol_objective > 0 and self.tol_param > 0):
            problems.append("tolerances must be positive")
        if self.max_iterations < 1:
            problems.append("max_iterations must be at least 1")
        if not (isinstance(self.initial_point, RegressionParams) or self.initial_point == "auto"):
            problems.append("initial_point must be RegressionParams or 'auto'")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass(frozen=True)
class FitResult:
    params: RegressionParams
    objective: float
    beta: float
    converged: bool
    iterations: int
    message: str


def mle_stage_scales(data: ExperimentData, profile: StressProfile) -> tuple[float, float]:
    """Maximum likelihood scales of each stage, NaN for a stage without failures.

    Total time on test within the stage divided by the stage's failure count.
    """
    n = data.n_units
    ttt1 = data.stage1_times.sum() + (n - data.n1) * profile.tau1
    ttt2 = (data.stage2_times - profile.tau1).sum() + data.n_censored * (profile.tau2 - profile.tau1)
    lam1 = ttt1 / data.n1 if data.n1 else math.nan
    lam2 = ttt2 / data.n2 if data.n2 else math.nan
    return float(lam1), float(lam2)


def fit_mle_closed_form(data: ExperimentData, profile: StressProfile) -> RegressionParams:
    """Maximum likelihood estimate from the stationarity equations.

    The likelihood separates in the two stage scales (see
    :func:`mle_stage_scales`); the regression vector follows from the link.
    """
    data.check_existence()
    lam1, lam2 = mle_stage_scales(data, profile)
    a1 = (math.log(lam2) - math.log(lam1)) / (profile.x2 - profile.x1)
    a0 = math.log(lam1) - a1 * profile.x1
    return RegressionParams(a0, a1)


def _auto_start(data: ExperimentData, profile: StressProfile) -> RegressionParams:
    start = fit_mle_closed_form(data, profile)
    if start.a1 < 0:
        return start
    # stage-2 units look longer lived than stage-1 ones; start just inside a1 < 0
    a1 = -1e-3 / (profile.x2 - profile.x1)
    log_lam = start.a0 + start.a1 * 0.5 * (profile.x1 + profile.x2)
    return RegressionParams(log_lam - a1 * 0.5 * (profile.x1 + profile.x2), a1)


def fit_mdpde(data: ExperimentData, profile: StressProfile, config: FitConfig = FitConfig()) -> FitResult:
    """Minimize the DPD objective over ``a0`` real and ``a1 < 0``.

    Raises
    ------
    NonexistenceError
        If a stage has no failures.  Hitting ``max_iterations`` is reported
        through ``FitResult.converged`` instead.
    """
    data.check_existence()
    beta = float(config.beta)

    def objective(x):
        if not x[1] < 0:
            return math.inf
        return dpd_objective(RegressionParams(x[0], x[1]), profile, data, beta)

    start = _auto_start(data, profile) if config.initial_point == "auto" else config.initial_point
    if not start.a1 < 0:
        raise DomainError(f"initial point must have a1 < 0, got a1={start.a1}")

    x = start.as_array()
    iterations = 0
    best = None
    for attempt in range(_MAX_RESTARTS + 1):
        steps = np.where(x != 0, config.simplex_scale * np.abs(x), config.simplex_scale)
        res = nelder_mead(
            objective, x, steps,
            tol_objective=config.tol_objective,
            tol_param=config.tol_param,
            max_iterations=config.max_iterations - iterations,
        )
        iterations += res.iterations
        if not res.converged:
            best = res
            break
        moved = best is not None and (
            best.fun - res.fun > config.tol_objective or np.max(np.abs(best.x - res.x)) > 10 * config.tol_param
        )
        if best is not None and not moved:
            best = res
            break
        best, x = res, res.x
        log.debug("restart %d from %s (objective %.12g)", attempt + 1, res.x, res.fun)
    params = RegressionParams.from_array(best.x)
    return FitResult(params, float(best.fun), beta, best.converged, iterations, best.message)


def fit_path(
    data: ExperimentData,
    profile: StressProfile,
    betas: Sequence[float],
    base_config: FitConfig = FitConfig(),
) -> list[FitResult]:
    """Fit every ``beta`` in order, warm-starting each from the previous solution.

    A failing entry is returned as a non-converged result with NaN parameters
    and the error text as message; the later entries still run.
    """
    if len(betas) == 0:
        raise DomainError("betas must be non-empty")
    results = []
    init = base_config.initial_point
    for beta in betas:
        config = dataclasses.replace(base_config, beta=float(beta), initial_point=init)
        try:
            result = fit_mdpde(data, profile, config)
        except (DomainError, NonexistenceError, ArithmeticError) as exc:
            result = FitResult(RegressionParams(math.nan, math.nan), math.nan, float(beta), False, 0, str(exc))
        results.append(result)
        if result.converged:
            init = result.params
    return results
