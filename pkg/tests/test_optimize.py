import math

import numpy as np
import pytest
from scipy.optimize import minimize, rosen

from ssalt_mdpde.optimize import nelder_mead


class TestNelderMead:
    def test_quadratic(self):
        res = nelder_mead(lambda x: (x[0] - 1.0) ** 2 + 3.0 * (x[1] + 2.0) ** 2, [0.0, 0.0], [0.5, 0.5])
        assert res.converged and res.message == "converged"
        np.testing.assert_allclose(res.x, [1.0, -2.0], atol=1e-7)

    @pytest.mark.parametrize("x0", [[-1.2, 1.0], [2.0, 2.0], [0.5, -0.5]])
    def test_rosenbrock_against_scipy(self, x0):
        x0 = np.asarray(x0)
        steps = 0.05 * np.where(x0 != 0, np.abs(x0), 1.0)
        ours = nelder_mead(rosen, x0, steps, tol_param=1e-10, tol_objective=1e-14, max_iterations=20000)
        sim0 = np.vstack([x0, x0 + np.diag(steps)])
        ref = minimize(rosen, x0, method="Nelder-Mead",
                       options=dict(initial_simplex=sim0, xatol=1e-10, fatol=1e-14, maxiter=20000))
        assert ours.converged and ref.success
        np.testing.assert_allclose(ours.x, [1.0, 1.0], atol=1e-7)
        np.testing.assert_allclose(ours.x, ref.x, atol=1e-7)

    def test_infinite_region_is_avoided(self):
        def f(x):
            return math.inf if x[1] >= 0 else (x[0] - 2.0) ** 2 + (x[1] + 1.0) ** 2

        res = nelder_mead(f, [0.0, -0.5], [0.1, 0.1])
        assert res.converged and res.x[1] < 0
        np.testing.assert_allclose(res.x, [2.0, -1.0], atol=1e-7)

    def test_exceptions_count_as_infinite(self):
        def f(x):
            if x[0] < 0:
                raise ValueError("outside")
            return (x[0] - 1.0) ** 2 + x[1] ** 2

        res = nelder_mead(f, [0.05, 0.3], [0.1, 0.1])
        np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-7)

    def test_infinite_start(self):
        res = nelder_mead(lambda x: math.inf, [0.0, 0.0], [1.0, 1.0])
        assert not res.converged and "initial point" in res.message

    def test_iteration_cap(self):
        res = nelder_mead(rosen, [-1.2, 1.0], [0.1, 0.1], max_iterations=5)
        assert not res.converged and res.iterations == 5
        assert "maximum number of iterations" in res.message

    def test_plateau_reported(self):
        # ripples finer than tol_param: the simplex collapses while vertex values still differ
        def f(x):
            return x[0] ** 2 + x[1] ** 2 + 1e-6 * (math.sin(3e9 * x[0]) + math.sin(3e9 * x[1]))

        res = nelder_mead(f, [0.3, 0.2], [0.1, 0.1], tol_param=1e-9)
        assert res.converged
        assert res.message.startswith("converged on a plateau")

    def test_reported_objective_is_best_vertex(self):
        f = lambda x: (x[0] - 0.3) ** 2 + (x[1] - 0.7) ** 4
        res = nelder_mead(f, [0.0, 0.0], [0.2, 0.2])
        assert res.fun == f(res.x)
