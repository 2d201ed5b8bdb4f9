"""Seeded simulation of step-stress experiments and the two Monte Carlo studies.

Replicate ``r`` of a study draws its sample from the stream
``SeedSequence(seed, spawn_key=(r,))``, independently of the worker that runs
it.  The same stream is reused across contamination levels, so level ``nu``
marks as outlying a superset of the units marked at any smaller level.
Results are reduced in replicate order, which makes every output
independent of the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .asymptotics import sandwich_covariance
from .characteristics import mttf, quantile, reliability, z_value
from .data import ExperimentData
from .errors import ConfigError, DomainError, NonexistenceError, SSALTError
from .estimator import FitConfig, fit_path
from .model import (
    SIMULATION_PARAMS,
    SIMULATION_PROFILE,
    RegressionParams,
    StressProfile,
    inverse_cdf,
    rates_from_regression,
)

__all__ = [
    "ContaminationSpec",
    "StudyConfig",
    "StudyResult",
    "replicate_rng",
    "study_config_from_dict",
    "sample_experiment",
    "mse_study",
    "coverage_study",
]

DEFAULT_BETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class ContaminationSpec:
    """Outliers are ``shift + Exponential(mean=outlier_mttf)`` with probability ``proportion``."""

    proportion: float = 0.0
    shift: float = 31.0
    outlier_mttf: float = 0.5

    def __post_init__(self):
        problems = []
        if not 0 <= self.proportion < 1:
            problems.append(f"contamination proportion must lie in [0, 1), got {self.proportion}")
        if not self.outlier_mttf > 0:
            problems.append("outlier_mttf must be positive")
        if not self.shift >= 0:
            problems.append("outlier shift must be non-negative")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class StudyConfig:
    """Settings shared by :func:`mse_study` and :func:`coverage_study`.

    ``contamination_levels`` are proportions.  Use :meth:`from_counts` to give
    absolute numbers of outliers per sample instead.
    """

    true_params: RegressionParams = SIMULATION_PARAMS
    profile: StressProfile = SIMULATION_PROFILE
    sample_size: int = 520
    replicates: int = 500
    betas: tuple = DEFAULT_BETAS
    contamination_levels: tuple = (0.0,)
    seed: int = 0
    confidence: float = 0.95
    mission_time: float = 14.0
    shift: float = 31.0
    outlier_mttf: float = 0.5
    jobs: int = 1
    fit: FitConfig = FitConfig()

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "contamination_levels", tuple(float(v) for v in self.contamination_levels))
        problems = []
        if self.replicates < 1:
            problems.append("replicates must be at least 1")
        if self.sample_size < 2:
            problems.append("sample_size must be at least 2")
        if not self.betas:
            problems.append("betas must be non-empty")
        if any(not (math.isfinite(b) and b >= 0) for b in self.betas):
            problems.append("every beta must be >= 0")
        if not self.contamination_levels:
            problems.append("contamination_levels must be non-empty")
        if any(not 0 <= v < 1 for v in self.contamination_levels):
            problems.append("contamination proportions must lie in [0, 1)")
        if not self.shift < self.profile.tau2:
            problems.append(f"outlier shift {self.shift} must be below tau2={self.profile.tau2} to be observable")
        if not self.outlier_mttf > 0:
            problems.append("outlier_mttf must be positive")
        if not 0 < self.confidence < 1:
            problems.append("confidence must lie in (0, 1)")
        if not self.mission_time >= 0:
            problems.append("mission_time must be non-negative")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if self.jobs < 1:
            problems.append("jobs must be at least 1")
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_counts(cls, counts: Sequence[int], sample_size: int, **kwargs) -> "StudyConfig":
        """Build a config whose contamination is given as outliers per sample."""
        return cls(sample_size=sample_size, contamination_levels=tuple(c / sample_size for c in counts), **kwargs)

    def contamination(self, proportion: float) -> ContaminationSpec:
        return ContaminationSpec(proportion, self.shift, self.outlier_mttf)


_SCALAR_KEYS = {
    "sample_size": int,
    "replicates": int,
    "seed": int,
    "confidence": float,
    "mission_time": float,
    "shift": float,
    "outlier_mttf": float,
    "jobs": int,
}


def study_config_from_dict(raw: dict) -> StudyConfig:
    """Build a :class:`StudyConfig` from a parsed JSON object.

    Schema (every key optional)::

        {"true_params": {"a0": 3.5, "a1": -1.0},
         "profile": {"x1": 1, "x2": 2, "tau1": 10, "tau2": 33, "x0": 0},
         "sample_size": 520, "replicates": 500,
         "betas": [0, 0.2, 0.4, 0.6, 0.8, 1],
         "contamination_levels": [0, 0.06],   # proportions, or
         "contamination_counts": [0, 31],     # outliers per sample
         "seed": 0, "confidence": 0.95, "mission_time": 14,
         "shift": 31, "outlier_mttf": 0.5, "jobs": 1}

    Raises
    ------
    ConfigError
        Listing every problem found, from unknown keys to violated bounds.
    """
    if not isinstance(raw, dict):
        raise ConfigError("study config must be a JSON object")
    problems = []
    kwargs = {}
    allowed = set(_SCALAR_KEYS) | {"true_params", "profile", "betas", "contamination_levels", "contamination_counts"}
    for key in sorted(set(raw) - allowed):
        problems.append(f"unknown key {key!r}")

    for key, kind in _SCALAR_KEYS.items():
        if key not in raw:
            continue
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or (kind is int and value != int(value)):
            problems.append(f"{key} must be {'an integer' if kind is int else 'a number'}, got {value!r}")
        else:
            kwargs[key] = kind(value)

    def number_list(key):
        value = raw[key]
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            problems.append(f"{key} must be a list of numbers")
            return None
        return [float(v) for v in value]

    if "betas" in raw:
        betas = number_list("betas")
        if betas is not None:
            kwargs["betas"] = tuple(betas)
    if "contamination_levels" in raw and "contamination_counts" in raw:
        problems.append("give contamination_levels or contamination_counts, not both")
    elif "contamination_levels" in raw:
        levels = number_list("contamination_levels")
        if levels is not None:
            kwargs["contamination_levels"] = tuple(levels)
    elif "contamination_counts" in raw:
        counts = number_list("contamination_counts")
        if counts is not None:
            if any(c < 0 or c != int(c) for c in counts):
                problems.append("contamination_counts must be non-negative integers")
            n = kwargs.get("sample_size", StudyConfig.sample_size)
            kwargs["contamination_levels"] = tuple(c / n for c in counts)

    if "true_params" in raw:
        tp = raw["true_params"]
        try:
            kwargs["true_params"] = RegressionParams(float(tp["a0"]), float(tp["a1"]))
        except (TypeError, KeyError, ValueError):
            problems.append("true_params must be an object with numeric a0 and a1")
    if "profile" in raw:
        prof = raw["profile"]
        try:
            kwargs["profile"] = StressProfile(**{k: float(v) for k, v in prof.items()})
        except (TypeError, AttributeError):
            problems.append("profile must be an object with numeric x1, x2, tau1, tau2 and optional x0")
        except (ValueError, DomainError) as exc:
            problems.append(f"profile: {exc}")

    try:
        config = StudyConfig(**kwargs)
    except ConfigError as exc:
        problems.extend(exc.problems)
        config = None
    if problems:
        raise ConfigError(problems)
    return config


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))


def sample_experiment(
    rng: np.random.Generator,
    n: int,
    true_params: RegressionParams,
    profile: StressProfile,
    contamination: ContaminationSpec = ContaminationSpec(),
) -> ExperimentData:
    """Draw one Type-I censored experiment with ``n`` units.

    Every unit consumes three variates (lifetime uniform, outlier flag,
    outlier exponential) whatever the contamination level.
    """
    rates = rates_from_regression(true_params, profile)
    u = rng.random(n)
    flag = rng.random(n)
    extra = rng.exponential(contamination.outlier_mttf, n)
    times = inverse_cdf(u, rates, profile)
    times = np.where(flag < contamination.proportion, contamination.shift + extra, times)
    return ExperimentData.from_times(times, profile, n)


@dataclass
class StudyResult:
    """Long-format study output.

    Each row holds ``contamination``, ``beta``, ``metric`` and ``value``.
    ``failures`` maps ``(contamination, beta)`` to the number of replicates
    whose fit failed and were left out of the averages.
    """

    kind: str
    config: StudyConfig
    rows: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def value(self, metric: str, contamination: float, beta: float) -> float:
        for row in self.rows:
            if row["metric"] == metric and row["contamination"] == contamination and row["beta"] == beta:
                return row["value"]
        raise KeyError((metric, contamination, beta))

    @property
    def metrics(self) -> list:
        seen = []
        for row in self.rows:
            if row["metric"] not in seen:
                seen.append(row["metric"])
        return seen

    def matrix_csv(self, metric: str) -> str:
        """Rows: contamination level; columns: beta."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["contamination"] + [f"beta={b:g}" for b in self.config.betas])
        for nu in self.config.contamination_levels:
            w.writerow([repr(nu)] + [repr(self.value(metric, nu, b)) for b in self.config.betas])
        return buf.getvalue()

    def long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["contamination", "beta", "metric", "value", "failed_fits"])
        for row in self.rows:
            key = (row["contamination"], row["beta"])
            w.writerow([repr(row["contamination"]), repr(row["beta"]), row["metric"], repr(row["value"]), self.failures.get(key, 0)])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# replicate workers (module level so they can be pickled)


def _fit_replicate(config: StudyConfig, replicate: int, with_covariance: bool):
    """Estimates for every (contamination, beta) of one replicate.

    Returns an array of shape (levels, betas, 4): a0, a1 and, with
    ``with_covariance``, the two standard errors; NaN marks a failed fit.
    """
    out = np.full((len(config.contamination_levels), len(config.betas), 4), np.nan)
    for i, nu in enumerate(config.contamination_levels):
        rng = replicate_rng(config.seed, replicate)
        data = sample_experiment(rng, config.sample_size, config.true_params, config.profile, config.contamination(nu))
        try:
            data.check_existence()
        except NonexistenceError:
            continue
        for j, res in enumerate(fit_path(data, config.profile, config.betas, config.fit)):
            if not res.converged:
                continue
            out[i, j, :2] = res.params.a0, res.params.a1
            if with_covariance:
                try:
                    cov = sandwich_covariance(res.params, config.profile, res.beta, data.n_units)
                except (SSALTError, ArithmeticError):
                    out[i, j] = np.nan
                    continue
                out[i, j, 2:] = cov.std_errors
    return out


def _mse_task(args):
    config, replicate = args
    return _fit_replicate(config, replicate, with_covariance=False)


def _coverage_task(args):
    config, replicate = args
    return _fit_replicate(config, replicate, with_covariance=True)


def _run_replicates(task, config: StudyConfig) -> np.ndarray:
    args = [(config, r) for r in range(config.replicates)]
    if config.jobs == 1:
        results = [task(a) for a in args]
    else:
        chunk = max(1, config.replicates // (4 * config.jobs))
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(task, args, chunksize=chunk))
    return np.stack(results)  # (replicates, levels, betas, 4)


def _failure_counts(config, estimates):
    failed = np.isnan(estimates[..., 0]).sum(axis=0)
    return {
        (nu, b): int(failed[i, j])
        for i, nu in enumerate(config.contamination_levels)
        for j, b in enumerate(config.betas)
    }


def mse_study(config: StudyConfig) -> StudyResult:
    """Empirical MSE of the estimates and of the derived characteristics.

    Metrics: ``mse_a0``, ``mse_a1``, ``mse_mttf``, ``mse_median`` and
    ``mse_reliability`` (at ``mission_time``), all at the normal stress
    ``profile.x0``.
    """
    est = _run_replicates(_mse_task, config)
    truth = config.true_params
    x0, t = config.profile.x0, config.mission_time
    true_chars = (mttf(truth, x0), quantile(0.5, truth, x0), reliability(t, truth, x0))

    result = StudyResult("mse", config, failures=_failure_counts(config, est))
    for i, nu in enumerate(config.contamination_levels):
        for j, b in enumerate(config.betas):
            ok = ~np.isnan(est[:, i, j, 0])
            a0, a1 = est[ok, i, j, 0], est[ok, i, j, 1]
            lam0 = np.exp(a0 + a1 * x0)
            values = {
                "mse_a0": np.mean((a0 - truth.a0) ** 2),
                "mse_a1": np.mean((a1 - truth.a1) ** 2),
                "mse_mttf": np.mean((lam0 - true_chars[0]) ** 2),
                "mse_median": np.mean((math.log(2.0) * lam0 - true_chars[1]) ** 2),
                "mse_reliability": np.mean((np.exp(-t / lam0) - true_chars[2]) ** 2),
            }
            for metric, v in values.items():
                result.rows.append({"contamination": nu, "beta": b, "metric": metric, "value": float(v) if ok.any() else math.nan})
    return result


def coverage_study(config: StudyConfig) -> StudyResult:
    """Coverage, mean width and mean estimate of the direct parameter intervals.

    Each interval is ``a_hat +- z * se`` with the sandwich evaluated at the
    fitted parameters.  Metrics: ``coverage_a0``, ``width_a0``, ``mean_a0``
    and the same for ``a1``.
    """
    est = _run_replicates(_coverage_task, config)
    z = z_value(config.confidence)
    truth = config.true_params.as_array()

    result = StudyResult("coverage", config, failures=_failure_counts(config, est))
    for i, nu in enumerate(config.contamination_levels):
        for j, b in enumerate(config.betas):
            ok = ~np.isnan(est[:, i, j, 0])
            for k, name in enumerate(("a0", "a1")):
                a, se = est[ok, i, j, k], est[ok, i, j, 2 + k]
                covered = np.abs(a - truth[k]) <= z * se
                values = {
                    f"coverage_{name}": np.mean(covered),
                    f"width_{name}": np.mean(2.0 * z * se),
                    f"mean_{name}": np.mean(a),
                }
                for metric, v in values.items():
                    result.rows.append({"contamination": nu, "beta": b, "metric": metric, "value": float(v) if ok.any() else math.nan})
    return result
