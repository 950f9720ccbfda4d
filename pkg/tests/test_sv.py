"""Stochastic volatility block: sweep correctness and forecasting."""

import math

import numpy as np
from scipy import stats

from sparsetvp import sv as svmod
from sparsetvp.priors import SigmaPrior

from helpers import geweke_z_scores, ks_pvalue


class TestSVSweep:
    def test_constant_volatility_recovered(self):
        rng = np.random.default_rng(1)
        T = 500
        resid = rng.standard_normal(T)  # sigma2_t = 1
        state = svmod.SVState.initial(T, 0.0)
        sp = SigmaPrior(kind="sv")
        keep = []
        for i in range(1500):
            svmod.sv_sweep(rng, state, resid, sp)
            if i >= 500:
                keep.append(np.exp(state.h[1:]))
        mean_var = np.mean(keep, axis=0)
        assert np.all(mean_var > 0.5) and np.all(mean_var < 2.0)

    def test_exp_h_positive_every_draw(self):
        rng = np.random.default_rng(2)
        resid = rng.standard_normal(80) * 0.3
        state = svmod.SVState.initial(80, math.log(0.09))
        sp = SigmaPrior(kind="sv")
        for _ in range(200):
            svmod.sv_sweep(rng, state, resid, sp)
            assert np.all(np.exp(state.h) > 0.0)
            assert np.isfinite(state.h).all()

    def test_geweke_joint_distribution(self):
        # successive-conditional check of (mu, phi, sigma2_eta, h); the data
        # are drawn from the auxiliary mixture model the sweep targets
        T = 30
        sp = SigmaPrior(kind="sv", var_mu=1.0)
        rng = np.random.default_rng(3)

        def track(st):
            return (
                st.mu, st.phi, st.sigma2_eta, st.h[0], st.h[-1],
                math.tanh(st.h[T // 2]), st.phi**2,
                float(np.mean(st.h[1:])),
            )

        n = 15_000
        prior_stats = np.array([track(svmod.sv_prior_draw(rng, T, sp)) for _ in range(n)])
        st = svmod.sv_prior_draw(rng, T, sp)
        chain_stats = []
        for _ in range(n):
            resid = svmod.sv_simulate_mixture_residuals(rng, st)
            svmod.sv_sweep(rng, st, resid, sp)
            chain_stats.append(track(st))
        z = geweke_z_scores(prior_stats, np.array(chain_stats),
                            names=["mu", "phi", "s2eta", "h0", "hT", "tanh_hmid", "phi2", "hbar"])
        assert max(abs(v) for v in z.values()) < 4.0, z


class TestSVForecast:
    def test_zero_innovation_is_deterministic(self):
        state = svmod.SVState(np.array([0.1, 0.2, 0.4]), mu=0.3, phi=0.5, sigma2_eta=1e-300,
                              indicators=np.zeros(2, dtype=np.int64))
        rng = np.random.default_rng(4)
        v = svmod.sv_forecast_variance(rng, state)
        assert abs(v - math.exp(0.3 + 0.5 * (0.4 - 0.3))) < 1e-12

    def test_phi_zero_is_lognormal(self):
        state = svmod.SVState(np.array([0.0, 0.0, 0.0]), mu=0.2, phi=0.0, sigma2_eta=0.5,
                              indicators=np.zeros(2, dtype=np.int64))
        rng = np.random.default_rng(5)
        draws = svmod.sv_forecast_variance(rng, state, size=200_000)
        logd = np.log(draws)
        assert abs(logd.mean() - 0.2) < 4.0 * logd.std() / math.sqrt(len(logd))
        assert abs(logd.var() - 0.5) < 0.01
        # lognormal mean check
        assert abs(draws.mean() - math.exp(0.2 + 0.25)) < 4.0 * draws.std() / math.sqrt(len(draws))

    def test_matches_direct_one_step_simulation(self):
        state = svmod.SVState(np.array([0.0, -0.3, 0.6]), mu=-0.1, phi=0.8, sigma2_eta=0.3,
                              indicators=np.zeros(2, dtype=np.int64))
        rng = np.random.default_rng(6)
        ours = svmod.sv_forecast_variance(rng, state, size=50_000)
        center = -0.1 + 0.8 * (0.6 + 0.1)
        direct = np.exp(center + math.sqrt(0.3) * rng.standard_normal(50_000))
        assert ks_pvalue(ours, direct) > 0.01


class TestOffsetContract:
    def test_offset_constant_shared(self):
        assert svmod.OFFSET == 1e-8

    def test_zero_residuals_handled(self):
        rng = np.random.default_rng(7)
        resid = np.zeros(40)
        state = svmod.SVState.initial(40, 0.0)
        sp = SigmaPrior(kind="sv")
        svmod.sv_sweep(rng, state, resid, sp)
        assert np.isfinite(state.h).all()
