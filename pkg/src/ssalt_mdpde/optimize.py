"""Nelder-Mead simplex minimizer.

Standard coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
Points where the objective is not finite are treated as +inf, which is how
the estimator enforces its parameter constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["SimplexResult", "nelder_mead"]

RHO, CHI, GAMMA, SIGMA = 1.0, 2.0, 0.5, 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    evaluations: int
    message: str


def _safe(fun: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x):
        try:
            value = float(fun(x))
        except (ArithmeticError, ValueError):
            return math.inf
        return value if math.isfinite(value) else math.inf

    return wrapped


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0,
    steps,
    tol_objective: float = 1e-10,
    tol_param: float = 1e-8,
    max_iterations: int = 5000,
) -> SimplexResult:
    """Minimize ``fun`` starting from the simplex ``x0, x0 + steps[i] * e_i``.

    Terminates once the simplex diameter (max-norm distance of every vertex to
    the best one) drops below ``tol_param``.  If the objective spread across
    the vertices is still above ``tol_objective`` at that point the result is
    flagged as a plateau in ``message`` but counted as converged.
    """
    f = _safe(fun)
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += steps[i]
    fsim = np.array([f(v) for v in sim])
    evaluations = n + 1
    if not math.isfinite(fsim[0]):
        return SimplexResult(x0, math.inf, False, 0, evaluations, "objective is not finite at the initial point")

    iterations = 0
    while True:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        diameter = np.max(np.abs(sim[1:] - sim[0]))
        if diameter <= tol_param:
            spread = fsim[-1] - fsim[0]
            if spread <= tol_objective:
                message = "converged"
            else:
                message = f"converged on a plateau (objective spread {spread:.3g} > {tol_objective:g})"
            return SimplexResult(sim[0].copy(), float(fsim[0]), True, iterations, evaluations, message)
        if iterations >= max_iterations:
            return SimplexResult(
                sim[0].copy(), float(fsim[0]), False, iterations, evaluations,
                f"maximum number of iterations ({max_iterations}) reached",
            )
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + RHO * (centroid - worst)
        fr = f(xr)
        evaluations += 1

        if fr < fsim[0]:
            xe = centroid + CHI * (xr - centroid)
            fe = f(xe)
            evaluations += 1
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
            continue

        if fr < fsim[-1]:
            xc = centroid + GAMMA * (xr - centroid)
            fc = f(xc)
            evaluations += 1
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
                continue
        else:
            xcc = centroid + GAMMA * (worst - centroid)
            fcc = f(xcc)
            evaluations += 1
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
                continue

        for i in range(1, n + 1):
            sim[i] = sim[0] + SIGMA * (sim[i] - sim[0])
            fsim[i] = f(sim[i])
        evaluations += n
