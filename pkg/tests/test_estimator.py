import math

import numpy as np
import pytest

from ssalt_mdpde.data import ExperimentData, electronic_components
from ssalt_mdpde.errors import DomainError, NonexistenceError
from ssalt_mdpde.estimator import (
    FitConfig,
    fit_mdpde,
    fit_mle_closed_form,
    fit_path,
    mle_stage_scales,
)
from ssalt_mdpde.loss import dpd_objective, neg_log_likelihood
from ssalt_mdpde.model import RegressionParams, StressProfile
from ssalt_mdpde.simulation import replicate_rng, sample_experiment

TABLE_MLE = (10.862, -0.03026)
BETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def simulated(seed, rep=0, n=520):
    from ssalt_mdpde.model import SIMULATION_PARAMS, SIMULATION_PROFILE

    return sample_experiment(replicate_rng(seed, rep), n, SIMULATION_PARAMS, SIMULATION_PROFILE)


def argmin_resolution(data, profile, params, beta):
    """Smallest parameter change the objective can resolve in double precision.

    sqrt(2 eps |f| / kappa) with kappa the smallest Hessian eigenvalue.
    """
    f = lambda x: dpd_objective(RegressionParams(*x), profile, data, beta)
    x = params.as_array()
    e = 1e-4 * np.maximum(np.abs(x), 1e-2)
    hess = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            di, dj = np.eye(2)[i] * e[i], np.eye(2)[j] * e[j]
            hess[i, j] = (f(x + di + dj) - f(x + di - dj) - f(x - di + dj) + f(x - di - dj)) / (4 * e[i] * e[j])
    kappa = np.linalg.eigvalsh(hess)[0]
    return math.sqrt(2 * np.finfo(float).eps * abs(f(x)) / kappa)


class TestFitConfig:
    def test_defaults(self):
        c = FitConfig()
        assert (c.tol_objective, c.tol_param, c.max_iterations, c.simplex_scale) == (1e-10, 1e-8, 5000, 0.1)

    @pytest.mark.parametrize("kwargs", [dict(beta=-0.1), dict(tol_param=0.0), dict(max_iterations=0), dict(simplex_scale=-1), dict(initial_point="mle")])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            FitConfig(**kwargs)


class TestClosedForm:
    def test_electronic_components_hand_values(self):
        ds = electronic_components()
        lam1, lam2 = mle_stage_scales(ds.data, ds.profile)
        assert lam1 == pytest.approx(75160 / 30, rel=1e-14)
        assert lam2 == pytest.approx(11638 / 20, rel=1e-14)
        est = fit_mle_closed_form(ds.data, ds.profile)
        assert est.a1 == pytest.approx(math.log(11638 / 20 / (75160 / 30)) / 50, rel=1e-13)
        # four-figure hand values
        assert est.a1 == pytest.approx(-0.029194, rel=2e-4)
        assert est.a0 == pytest.approx(10.746, abs=5e-4)

    def test_uncensored_single_stage_scale_is_sample_mean(self):
        prof = StressProfile(1.0, 2.0, 1e6, 2e6)
        t = np.random.default_rng(3).exponential(4.0, 50)
        lam1, lam2 = mle_stage_scales(ExperimentData(t, [], 50), prof)
        assert lam1 == pytest.approx(t.mean(), rel=1e-13)
        assert math.isnan(lam2)

    def test_maximizes_likelihood(self, profile):
        data = simulated(5)
        est = fit_mle_closed_form(data, profile)
        best = neg_log_likelihood(est, profile, data)
        rng = np.random.default_rng(1)
        for d in rng.uniform(-0.05, 0.05, size=(1000, 2)):
            assert neg_log_likelihood(RegressionParams(est.a0 + d[0], est.a1 + d[1]), profile, data) >= best

    def test_nonexistence(self, profile):
        with pytest.raises(NonexistenceError, match="stage 2"):
            fit_mle_closed_form(ExperimentData([1.0, 2.0], [], 5), profile)

    def test_time_rescaling_is_exact(self, profile):
        data = simulated(8)
        c = 3.7
        base = fit_mle_closed_form(data, profile)
        scaled = fit_mle_closed_form(data.scaled(c), profile.scaled(c))
        assert scaled.a0 == pytest.approx(base.a0 + math.log(c), abs=1e-12)
        assert scaled.a1 == pytest.approx(base.a1, abs=1e-12)


class TestFitMdpde:
    @pytest.mark.parametrize("seed", range(5))
    def test_beta_zero_matches_closed_form(self, profile, seed):
        data = simulated(100 + seed)
        res = fit_mdpde(data, profile)
        assert res.converged
        np.testing.assert_allclose(res.params.as_array(), fit_mle_closed_form(data, profile).as_array(), rtol=0, atol=1e-6)

    def test_electronic_components_mle(self):
        ds = electronic_components()
        res = fit_mdpde(ds.data, ds.profile)
        assert res.params.a0 == pytest.approx(TABLE_MLE[0], rel=0.05)
        assert res.params.a1 == pytest.approx(TABLE_MLE[1], rel=0.05)

    def test_mean_estimate_near_truth(self, profile, params):
        est = np.array([fit_mdpde(simulated(9, r), profile, FitConfig(beta=0.4)).params.as_array() for r in range(40)])
        mean, se = est.mean(axis=0), est.std(axis=0, ddof=1) / math.sqrt(len(est))
        assert np.all(np.abs(mean - params.as_array()) < 4 * se)

    @pytest.mark.parametrize("beta", [0.2, 0.6, 1.0])
    def test_minimizer_certificate(self, profile, beta):
        data = simulated(12)
        res = fit_mdpde(data, profile, FitConfig(beta=beta))
        rng = np.random.default_rng(2)
        for d in rng.uniform(-0.5, 0.5, size=(1000, 2)):
            a1 = res.params.a1 + d[1]
            if a1 < 0:
                assert dpd_objective(RegressionParams(res.params.a0 + d[0], a1), profile, data, beta) >= res.objective

    def test_objective_reported(self, profile):
        data = simulated(13)
        res = fit_mdpde(data, profile, FitConfig(beta=0.5))
        assert res.objective == dpd_objective(res.params, profile, data, 0.5)
        assert res.params.a1 < 0

    def test_time_rescaling_optimizer_at_beta_zero(self, profile):
        data = simulated(14)
        c = 2.5
        base = fit_mdpde(data, profile).params
        scaled = fit_mdpde(data.scaled(c), profile.scaled(c)).params
        assert scaled.a0 == pytest.approx(base.a0 + math.log(c), abs=1e-6)
        assert scaled.a1 == pytest.approx(base.a1, abs=1e-6)

    def test_positive_closed_form_slope_still_fits(self):
        # stage-2 units outlive stage-1 ones, so the closed form has a1 > 0
        prof = StressProfile(1.0, 2.0, 10.0, 30.0)
        data = ExperimentData([1.0, 2.0, 3.0, 4.0], [28.0], 6)
        assert fit_mle_closed_form(data, prof).a1 > 0
        res = fit_mdpde(data, prof, FitConfig(beta=0.5))
        assert res.params.a1 < 0

    def test_iteration_cap_is_not_an_exception(self, profile):
        res = fit_mdpde(simulated(15), profile, FitConfig(beta=0.5, max_iterations=3))
        assert not res.converged and res.iterations <= 3

    def test_nonexistence(self, profile):
        with pytest.raises(NonexistenceError, match="stage 1"):
            fit_mdpde(ExperimentData([], [12.0], 4), profile)

    def test_bad_initial_point(self, profile):
        with pytest.raises(DomainError):
            fit_mdpde(simulated(16), profile, FitConfig(initial_point=RegressionParams(3.0, 0.5)))


class TestFitPath:
    def test_electronic_components_grid(self):
        ds = electronic_components()
        path = fit_path(ds.data, ds.profile, BETAS)
        assert [r.beta for r in path] == list(BETAS)
        for r in path:
            assert r.converged
            assert r.params.a0 == pytest.approx(TABLE_MLE[0], rel=0.05)
            assert r.params.a1 == pytest.approx(TABLE_MLE[1], rel=0.05)

    def test_singleton(self, profile):
        data = simulated(17)
        (only,) = fit_path(data, profile, [0.0])
        assert only == fit_mdpde(data, profile)

    @pytest.mark.parametrize("source", ["simulated", "electronic"])
    def test_warm_start_matches_cold_start(self, profile, source):
        if source == "electronic":
            ds = electronic_components()
            data, prof = ds.data, ds.profile
        else:
            data, prof = simulated(18), profile
        for warm in fit_path(data, prof, BETAS):
            cold = fit_mdpde(data, prof, FitConfig(beta=warm.beta))
            assert abs(warm.objective - cold.objective) <= FitConfig().tol_objective
            bound = max(FitConfig().tol_param, 10 * argmin_resolution(data, prof, cold.params, warm.beta))
            np.testing.assert_allclose(warm.params.as_array(), cold.params.as_array(), rtol=0, atol=bound)

    def test_failures_do_not_abort(self, profile):
        data = ExperimentData([1.0], [], 3)
        path = fit_path(data, profile, [0.0, 0.5])
        assert [r.converged for r in path] == [False, False]
        assert all(math.isnan(r.params.a0) and "stage 2" in r.message for r in path)

    def test_empty(self, profile):
        with pytest.raises(DomainError):
            fit_path(simulated(19), profile, [])
