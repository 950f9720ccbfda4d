"""Spike-and-slab selection: marginal likelihoods and model-space MCMC."""

import itertools
import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from sparsetvp import gibbs
from sparsetvp import spikeslab as sl
from sparsetvp import statespace as ss
from sparsetvp.priors import SigmaPrior, SpikeSlabPrior, log_indicator_prior_mass, validate
from sparsetvp.simulate import SimulationSpec, simulate_tvp

from helpers import chi2_uniform_pvalue, geweke_z_scores, run_geweke


def make_state(data, slab="gaussian", seed=0, **kw):
    prior = SpikeSlabPrior(slab=slab, **kw)
    state = sl.initial_spike_slab_state(data, prior, SigmaPrior(c0=2.0, C0=1.5, learn_C0=False))
    rng = np.random.default_rng(seed)
    state.path = np.cumsum(rng.standard_normal((data.p, data.T + 1)), axis=1)
    return state


class TestIndicatorTypes:
    def test_gamma_one_requires_delta_one(self):
        with pytest.raises(ValueError):
            sl.IndicatorVector(np.array([0, 1]), np.array([1, 0]))
        iv = sl.IndicatorVector(np.array([1, 1, 0]), np.array([1, 0, 0]))
        assert (iv.counts.p_d, iv.counts.p_f, iv.counts.p_0) == (1, 1, 1)

    def test_counts_sum_to_p(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            gamma = (rng.random(6) < 0.4).astype(int)
            delta = np.maximum(gamma, (rng.random(6) < 0.5).astype(int))
            c = sl.ModelCounts.from_indicators(delta, gamma)
            assert c.p_d + c.p_f + c.p_0 == 6


class TestConstrainedMarginalLikelihood:
    def test_empty_model_matches_quadrature(self):
        data = simulate_tvp(SimulationSpec(T=12, beta=(0.0, 0.0), theta=(0.0, 0.0), seed=2)).data
        state = make_state(data)
        cross = sl._CrossProducts(state, data)
        got = sl.constrained_marginal_likelihood((np.zeros(2, int), np.zeros(2, int)), cross, state)
        c0, C0 = 2.0, 1.5
        yy = float(data.y @ data.y)
        T = data.T

        def integrand(s2):
            return (
                stats.invgamma(c0, scale=C0).pdf(s2)
                * np.exp(-0.5 * yy / s2) * (2 * np.pi * s2) ** (-T / 2)
            )

        oracle, _ = quad(integrand, 0.0, np.inf, limit=400)
        assert abs(got - math.log(oracle)) < 1e-8

    def test_one_active_matches_2d_quadrature(self):
        data = simulate_tvp(SimulationSpec(T=10, beta=(0.4, 0.0), theta=(0.0, 0.0), seed=3)).data
        state = make_state(data, slab="gaussian", slab_scale_beta=0.7)
        cross = sl._CrossProducts(state, data)
        delta = np.array([1, 0])
        gamma = np.array([0, 0])
        got = sl.constrained_marginal_likelihood((delta, gamma), cross, state)
        c0, C0 = 2.0, 1.5
        w = data.X[:, 0]
        y = data.y
        T = data.T

        def inner(s2):
            def over_beta(b):
                return (
                    math.exp(-0.5 * float((y - w * b) @ (y - w * b)) / s2)
                    * (2 * math.pi * s2) ** (-T / 2)
                    * math.exp(-0.5 * b * b / (s2 * 0.7))
                    / math.sqrt(2 * math.pi * s2 * 0.7)
                )

            val, _ = quad(over_beta, -30, 30, limit=300)
            return val * stats.invgamma(c0, scale=C0).pdf(s2)

        oracle, _ = quad(inner, 1e-4, 60.0, limit=300)
        assert abs(got - math.log(oracle)) < 1e-6

    def test_fractional_scaling_shifts_all_models_equally(self):
        data = simulate_tvp(SimulationSpec(T=25, beta=(0.5, -0.3), theta=(0.01, 0.0), seed=4)).data
        state = make_state(data, slab="fractional")
        cross1 = sl._CrossProducts(state, data)
        data2 = ss.TimeSeriesData(2.0 * data.y, 2.0 * data.X, data.labels)
        state2 = make_state(data2, slab="fractional")
        state2.path = state.path.copy()
        cross2 = sl._CrossProducts(state2, data2)
        models = sl.enumerate_models(2)
        shifts = []
        vals1 = []
        for d, g in models:
            m1 = sl.constrained_marginal_likelihood((d, g), cross1, state)
            m2 = sl.constrained_marginal_likelihood((d, g), cross2, state2)
            shifts.append(m2 - m1)
            vals1.append(m1)
        # the automatic scale adaptation moves every model by the same
        # amount, so the model ordering is preserved exactly
        assert np.ptp(shifts) < 1e-8
        assert abs(shifts[0] - (-data.T / 2.0 * math.log(4.0))) < 1e-8
        order1 = np.argsort(vals1)
        vals2 = [sl.constrained_marginal_likelihood((d, g), cross2, state2) for d, g in models]
        assert np.array_equal(order1, np.argsort(vals2))

    def test_rank_deficient_design_reports_minus_inf(self):
        X = np.ones((15, 2))  # duplicated column
        rng = np.random.default_rng(5)
        data = ss.TimeSeriesData(rng.standard_normal(15), X)
        state = make_state(data, slab="fractional")
        cross = sl._CrossProducts(state, data)
        val = sl.constrained_marginal_likelihood((np.array([1, 1]), np.array([0, 0])), cross, state)
        assert val == -math.inf


class TestFullEnumeration:
    def test_probabilities_sum_to_one(self):
        data = simulate_tvp(SimulationSpec(T=20, beta=(0.4, 0.0), theta=(0.01, 0.0), seed=6)).data
        state = make_state(data)
        cross = sl._CrossProducts(state, data)
        models = sl.enumerate_models(2)
        logp = np.array([
            sl.constrained_marginal_likelihood((d, g), cross, state)
            + log_indicator_prior_mass(state.prior, d, g)
            for d, g in models
        ])
        prob = np.exp(logp - logp.max())
        prob /= prob.sum()
        assert len(models) == 9
        assert abs(prob.sum() - 1.0) < 1e-12

    def test_noise_data_prefers_empty_model(self):
        rng = np.random.default_rng(7)
        T = 60
        X = np.linalg.qr(rng.standard_normal((T, 2)))[0] * math.sqrt(T)
        data = ss.TimeSeriesData(rng.standard_normal(T), X)
        state = make_state(data, slab="gaussian")
        cross = sl._CrossProducts(state, data)
        vals = {tuple(d) + tuple(g): sl.constrained_marginal_likelihood((d, g), cross, state)
                for d, g in sl.enumerate_models(2)}
        empty = vals[(0, 0, 0, 0)]
        assert all(empty >= v for v in vals.values())

    def test_cap_exceeded_instructs_single_move(self):
        data = simulate_tvp(SimulationSpec(T=20, beta=(0.0,) * 4, theta=(0.0,) * 4, seed=8)).data
        state = make_state(data, enumeration_cap=3)
        with pytest.raises(ValueError, match="single_move"):
            sl.full_enumeration_step(np.random.default_rng(0), state, data)

    def test_prior_only_chain_dimension_uniform(self):
        # flat Beta hyperpriors with the likelihood silenced: the model
        # dimension is uniform on {0..p}
        data = simulate_tvp(SimulationSpec(T=10, beta=(0.0,) * 4, theta=(0.0,) * 4, seed=9)).data
        state = make_state(data, a0_gamma=1.0, b0_gamma=1.0, a0_delta=1.0, b0_delta=1.0)
        rng = np.random.default_rng(10)
        dims = []
        for i in range(30_000):
            sl.full_enumeration_step(rng, state, data, loglik_fn=lambda d, g: 0.0)
            sl._update_pis(rng, state)
            dims.append(int(state.gamma.sum()))
        assert chi2_uniform_pvalue(np.asarray(dims[200:]), 5) > 0.01


class TestSingleMove:
    def _frozen_posterior(self, state, data):
        cross = sl._CrossProducts(state, data)
        models = sl.enumerate_models(state.p)
        logp = np.array([
            sl.constrained_marginal_likelihood((d, g), cross, state)
            + log_indicator_prior_mass(state.prior, d, g)
            for d, g in models
        ])
        prob = np.exp(logp - logp.max())
        return models, prob / prob.sum(), cross

    def test_stationary_matches_enumeration(self):
        data = simulate_tvp(SimulationSpec(T=40, beta=(0.6, 0.0), theta=(0.02, 0.0), seed=11)).data
        state = make_state(data, slab="gaussian", seed=12)
        models, probs, cross = self._frozen_posterior(state, data)
        ml_cache = {}
        for (d, g) in models:
            ml_cache[(tuple(d), tuple(g))] = sl.constrained_marginal_likelihood((d, g), cross, state)
        loglik = lambda d, g: ml_cache[(tuple(d), tuple(g))]
        rng = np.random.default_rng(13)
        counts = {tuple(d) + tuple(g): 0 for d, g in models}
        n_scans = 200_000
        for _ in range(n_scans):
            sl.single_move_step(rng, state, data, loglik_fn=loglik)
            counts[tuple(state.delta) + tuple(state.gamma)] += 1
        freq = np.array([counts[tuple(d) + tuple(g)] for d, g in models]) / n_scans
        tv = 0.5 * np.abs(freq - probs).sum()
        assert tv < 0.05

    def test_detailed_balance_on_toy_model(self):
        # p = 1: three models with hand-set marginal likelihoods
        data = simulate_tvp(SimulationSpec(T=10, beta=(0.0,), theta=(0.0,), seed=14, intercept=True)).data
        state = make_state(data, pi_fixed=(0.5, 1.0 / 3.0))
        handset = {(0, 0): 0.0, (1, 0): 0.7, (1, 1): -0.4}
        loglik = lambda d, g: handset[(int(d[0]), int(g[0]))]
        prior_mass = {
            k: math.exp(log_indicator_prior_mass(state.prior, np.array([k[0]]), np.array([k[1]]),
                                                 pi=(0.5, 1.0 / 3.0)))
            for k in handset
        }
        target = {k: math.exp(handset[k]) * prior_mass[k] for k in handset}
        Z = sum(target.values())
        target = {k: v / Z for k, v in target.items()}
        rng = np.random.default_rng(15)
        trans = {(a, b): 0 for a in handset for b in handset}
        prev = (int(state.delta[0]), int(state.gamma[0]))
        n = 300_000
        for _ in range(n):
            sl.single_move_step(rng, state, data, loglik_fn=loglik)
            cur = (int(state.delta[0]), int(state.gamma[0]))
            trans[(prev, cur)] += 1
            prev = cur
        for a in handset:
            for b in handset:
                if a < b:
                    flow_ab = trans[(a, b)] / n
                    flow_ba = trans[(b, a)] / n
                    se = math.sqrt((flow_ab + flow_ba) / n) + 1e-9
                    assert abs(flow_ab - flow_ba) < 5.0 * se, (a, b, flow_ab, flow_ba)

    def test_fixed_to_dynamic_moves_rarely_accepted_from_prior_path(self):
        res = simulate_tvp(SimulationSpec(T=200, beta=(1.0, -0.5, 0.0), theta=(0.02, 0.0, 0.0), seed=16))
        prior = SpikeSlabPrior(slab="gaussian", enumeration_cap=0)  # force single-move
        store = gibbs.run_chain(res.data, prior, SigmaPrior(), n_burn=400, n_draws=600, seed=17)
        moves = store.meta["move_acceptance"]
        fd = moves.get("f->d")
        assert fd is not None and fd[1] > 0
        rates = [acc / max(tries, 1) for acc, tries in moves.values()]
        overall = sum(acc for acc, _ in moves.values()) / max(sum(t for _, t in moves.values()), 1)
        assert fd[0] / fd[1] <= overall + 1e-12


class TestSpikeSlabSweep:
    def test_inactive_coefficients_exactly_zero(self):
        data = simulate_tvp(SimulationSpec(T=40, beta=(0.8, 0.0), theta=(0.0, 0.0), seed=18)).data
        store = gibbs.run_chain(data, SpikeSlabPrior(slab="student-t"), SigmaPrior(),
                                n_burn=100, n_draws=400, seed=19)
        beta = store.draws["beta"]
        sq = store.draws["sqrt_theta"]
        delta = store.draws["delta"]
        gamma = store.draws["gamma"]
        assert np.all(beta[delta == 0] == 0.0)
        assert np.all(sq[gamma == 0] == 0.0)
        assert not np.any((delta == 0) & (gamma == 1))

    def test_student_t_slab_classifies_dgp(self):
        res = simulate_tvp(SimulationSpec(T=200, beta=(1.0, -0.5, 0.0), theta=(0.02, 0.0, 0.0), seed=20))
        store = gibbs.run_chain(res.data, SpikeSlabPrior(slab="student-t"), SigmaPrior(),
                                n_burn=1000, n_draws=2000, seed=21)
        gamma = store.draws["gamma"]
        delta = store.draws["delta"]
        p_dyn = gamma.mean(axis=0)
        p_fix = (delta * (1 - gamma)).mean(axis=0)
        p_zero = 1.0 - p_dyn - p_fix
        assert p_dyn[0] == max(p_dyn[0], p_fix[0], p_zero[0])
        assert p_fix[1] == max(p_dyn[1], p_fix[1], p_zero[1])
        assert p_zero[2] == max(p_dyn[2], p_fix[2], p_zero[2])

    def test_two_starts_concordance_student_t(self):
        # chains started at the full TVP model and at the static regression
        # sample overlapping model distributions under the Student-t slab
        res = simulate_tvp(SimulationSpec(T=80, beta=(0.7, 0.0), theta=(0.015, 0.0), seed=22))
        freqs = []
        for start_full, seed in ((True, 23), (False, 24)):
            prior = SpikeSlabPrior(slab="student-t")
            state = sl.initial_spike_slab_state(res.data, prior, SigmaPrior())
            if not start_full:
                state.delta[:] = 0
                state.gamma[:] = 0
            rng = np.random.default_rng(seed)
            counts = {}
            for i in range(4000):
                sl.spike_slab_sweep(rng, state, res.data)
                if i >= 1000:
                    key = tuple(state.delta) + tuple(state.gamma)
                    counts[key] = counts.get(key, 0) + 1
            total = sum(counts.values())
            freqs.append({k: v / total for k, v in counts.items()})
        keys = sorted(set(freqs[0]) | set(freqs[1]))
        top = sorted(keys, key=lambda k: -(freqs[0].get(k, 0) + freqs[1].get(k, 0)))[:10]
        tv = 0.5 * sum(abs(freqs[0].get(k, 0) - freqs[1].get(k, 0)) for k in top)
        assert tv < 0.1

    def test_geweke_student_t(self):
        data = simulate_tvp(SimulationSpec(T=20, beta=(0.5, -0.2), theta=(0.01, 0.0), seed=25)).data
        prior = SpikeSlabPrior(slab="student-t")
        sp = SigmaPrior(c0=0.5, C0=1.0, learn_C0=True)

        def make(rng):
            return sl.prior_spike_slab_state(rng, data, prior, sp)

        def redraw(rng, st):
            W = np.hstack([data.X, data.X * st.path[:, 1:].T])
            coef = np.concatenate([st.beta, st.sqrt_theta])
            return W @ coef + math.sqrt(st.sigma2) * rng.standard_normal(data.T)

        def track(st):
            s2b = st.sigma2 / (1.0 + st.sigma2)
            return (
                float(st.delta[0]), float(st.delta[1]), float(st.gamma[0]), float(st.gamma[1]),
                float(st.gamma.sum()), st.pi_delta, st.pi_gamma, s2b,
                math.tanh(st.beta[0]), math.tanh(st.sqrt_theta[1]),
                math.tanh(st.path[0, -1]), st.ss_tau2[0] / (1.0 + st.ss_tau2[0]),
                st.ss_lambda2 / (1.0 + st.ss_lambda2),
            )

        rng = np.random.default_rng(26)
        prior_stats, chain_stats = run_geweke(
            rng, data, make, sl.spike_slab_sweep, redraw, track,
            n_chain=15_000, n_prior=15_000,
        )
        z = geweke_z_scores(prior_stats, chain_stats,
                            names=["d1", "d2", "g1", "g2", "pd", "pid", "pig", "s2",
                                   "b1", "sq2", "path", "tau2", "lam2"])
        assert max(abs(v) for v in z.values()) < 4.0, z
