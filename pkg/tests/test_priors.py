"""Prior taxonomy: alias resolution, reductions, densities, implied dimension."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from sparsetvp import priors as pr
from sparsetvp.special import sample_shrinkage_hierarchy

from helpers import chi2_uniform_pvalue, ks_pvalue


class TestValidate:
    def test_horseshoe_alias(self):
        cfg = pr.validate("horseshoe")
        assert cfg.kind == "triple-gamma" and cfg.alias == "horseshoe"
        assert cfg.a_xi == 0.5 and cfg.c_xi == 0.5
        assert cfg.variance.learn_phi
        # the active hyperprior is BetaPrime(1/2, 1/2), i.e. phi ~ F(1,1)
        rng = np.random.default_rng(0)
        phi = rng.gamma(0.5, 1.0, 100_000) / rng.gamma(0.5, 1.0, 100_000)
        assert ks_pvalue(phi, stats.f(1, 1).cdf) > 0.01

    def test_lasso_alias_is_tagged_infinite_c(self):
        cfg = pr.validate("lasso")
        assert cfg.a_xi == 1.0
        assert math.isinf(cfg.c_xi)
        assert isinstance(cfg.c_xi, float)
        assert cfg.variance.learn_kappa and cfg.variance.d1 == 0.001 and cfg.variance.d2 == 0.001

    def test_triple_gamma_defaults_learn_everything(self):
        cfg = pr.validate("triple-gamma")
        b = cfg.variance
        assert b.learn_a and b.learn_c and b.learn_phi
        assert b.alpha_a == 5.0 and b.beta_a == 10.0

    def test_ridge_gamma_equivalence_round_trip(self):
        # sqrt_theta ~ N(0, tau) makes theta ~ Gamma(1/2, rate 1/(2 tau));
        # the rate-10 configuration therefore round-trips to tau = 0.05
        tau = 1.0 / (2.0 * 10.0)
        cfg = pr.validate({"kind": "ridge", "tau": tau})
        rng = np.random.default_rng(8)
        draws, _ = sample_shrinkage_hierarchy(rng, cfg, size=100_000)
        theta = draws**2
        assert ks_pvalue(theta, stats.gamma(0.5, scale=2.0 * tau).cdf) > 0.01

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            pr.validate({"kind": "triple-gamma", "variance": {"a": 0.1, "c": 0.1, "bogus": 2}})
        with pytest.raises(ValueError):
            pr.validate({"kind": "nonsense"})

    def test_inconsistent_combinations_rejected(self):
        with pytest.raises(ValueError):
            pr.ShrinkageBranch(a=1.0, c=math.inf, learn_phi=True)
        with pytest.raises(ValueError):
            pr.ShrinkageBranch(a=0.5, c=0.5, learn_kappa=True)
        with pytest.raises(ValueError):
            pr.ShrinkageBranch(a=0.5, c=0.5, learn_phi=True, learn_kappa=True)
        with pytest.raises(ValueError):
            pr.SpikeSlabPrior(slab="bogus")

    def test_deterministic(self):
        a = pr.validate({"kind": "ridge", "tau": 0.1})
        b = pr.validate({"kind": "ridge", "tau": 0.1})
        assert a == b


class TestLogPriorDensity:
    def test_ridge_equals_sum_of_normal_logpdfs(self):
        cfg = pr.validate({"kind": "ridge", "tau": 0.3, "tau_beta": 2.0})
        rng = np.random.default_rng(1)
        beta = rng.standard_normal(3)
        sq = rng.standard_normal(3)
        got = pr.log_prior_density(cfg, beta, sq)
        ref = stats.norm(0, math.sqrt(0.3)).logpdf(sq).sum() + stats.norm(0, math.sqrt(2.0)).logpdf(beta).sum()
        assert abs(got - ref) < 1e-10

    def test_double_gamma_layers_match_scipy(self):
        cfg = pr.validate({"kind": "double-gamma",
                           "variance": {"a": 0.4, "c": "inf", "kappa2": 1.7, "learn_kappa": False},
                           "mean": {"a": 0.6, "c": math.inf, "kappa2": 0.9, "learn_kappa": False}})
        rng = np.random.default_rng(2)
        xi2 = rng.gamma(1.0, 1.0, 2)
        lam = rng.gamma(1.0, 1.0, 2)
        beta = rng.standard_normal(2)
        sq = rng.standard_normal(2)
        got = pr.log_prior_density(cfg, beta, sq, scales={"xi2": xi2, "lam": lam})
        ref = (
            stats.norm(0, np.sqrt(xi2)).logpdf(sq).sum()
            + stats.gamma(0.4, scale=2.0 / (0.4 * 1.7)).logpdf(xi2).sum()
            + stats.norm(0, np.sqrt(lam)).logpdf(beta).sum()
            + stats.gamma(0.6, scale=2.0 / (0.6 * 0.9)).logpdf(lam).sum()
        )
        assert abs(got - ref) < 1e-9

    def test_double_gamma_marginal_matches_ancestral_histogram(self):
        # chi-square GOF of ancestral theta draws against bin masses from
        # quadrature of the conditional mixture Gamma(1/2, 1/(2 xi2)) over
        # the Gamma(a, a kB2/2) mixing law
        a, kB2 = 0.5, 2.0
        rng = np.random.default_rng(3)
        n = 100_000
        xi2 = rng.gamma(a, 2.0 / (a * kB2), n)
        theta = rng.standard_normal(n) ** 2 * xi2
        edges = np.quantile(theta, np.linspace(0.0, 1.0, 21))[1:-1]
        mix = stats.gamma(a, scale=2.0 / (a * kB2))

        def marginal_cdf(th):
            f = lambda x: stats.chi2(1).cdf(th / x) * mix.pdf(x)
            val = 0.0
            for lo, hi in ((0.0, th), (th, max(th, 50.0 / kB2))):
                piece, _ = quad(f, lo, hi, limit=300)
                val += piece
            return val

        cdf_edges = np.array([0.0] + [marginal_cdf(e) for e in edges] + [1.0])
        probs = np.diff(cdf_edges)
        counts = np.histogram(theta, np.concatenate([[0.0], edges, [np.inf]]))[0]
        p = stats.chisquare(counts, probs / probs.sum() * n).pvalue
        assert p > 0.01

    def test_out_of_support_is_minus_inf(self):
        cfg = pr.validate({"kind": "double-gamma", "variance": {"a": 0.4}, "mean": {"a": 0.4}})
        val = pr.log_prior_density(cfg, np.zeros(2), np.zeros(2),
                                   scales={"xi2": np.array([1.0, -1.0]), "lam": np.ones(2)})
        assert val == -math.inf

    def test_indicator_prior_mass_three_outcomes(self):
        cfg = pr.SpikeSlabPrior(pi_fixed=(0.3, 0.2))
        masses = []
        for d, g in [((0,), (0,)), ((1,), (0,)), ((1,), (1,))]:
            masses.append(math.exp(pr.log_indicator_prior_mass(cfg, d, g, pi=(0.3, 0.2))))
        assert abs(masses[0] - 0.7 * 0.8) < 1e-12
        assert abs(masses[1] - 0.3 * 0.8) < 1e-12
        assert abs(masses[2] - 0.2) < 1e-12
        assert abs(sum(masses) - 1.0) < 1e-12
        assert pr.log_indicator_prior_mass(cfg, (0,), (1,)) == -math.inf

    def test_hierarchical_indicator_mass_matches_monte_carlo(self):
        cfg = pr.SpikeSlabPrior(a0_delta=1.0, b0_delta=1.0, a0_gamma=1.0, b0_gamma=2.0)
        rng = np.random.default_rng(4)
        n = 400_000
        pi_d = rng.beta(1.0, 1.0, n)
        pi_g = rng.beta(1.0, 2.0, n)
        delta = np.array([1, 1, 0])
        gamma = np.array([1, 0, 0])
        # P(d,f,z pattern) integrated over both probabilities
        mc = np.mean(pi_g * (pi_d * (1 - pi_g)) * ((1 - pi_d) * (1 - pi_g)))
        se = np.std(pi_g * (pi_d * (1 - pi_g)) * ((1 - pi_d) * (1 - pi_g))) / math.sqrt(n)
        exact = math.exp(pr.log_indicator_prior_mass(cfg, delta, gamma))
        assert abs(exact - mc) < 4.0 * se


class TestReductions:
    def test_lasso_equals_triple_gamma_1_inf(self):
        rng = np.random.default_rng(5)
        n = 100_000
        # explicit construction: psi2 ~ Exp(1), sqrt_theta ~ N(0, tau psi2)
        tau = 0.8
        psi2 = rng.exponential(1.0, n)
        direct = rng.standard_normal(n) * np.sqrt(tau * psi2)
        branch = {"a": 1.0, "c": math.inf, "kappa2": 2.0 / tau,
                  "learn_a": False, "learn_c": False, "learn_phi": False}
        cfg = pr.validate({"kind": "triple-gamma", "variance": dict(branch), "mean": dict(branch)})
        hier, _ = sample_shrinkage_hierarchy(rng, cfg, size=n)
        assert ks_pvalue(direct, hier) > 0.01

    def test_symmetric_profile_gives_binomial_half_dimension(self):
        # phi = 1 and a = c: P(rho < 1/2) = 1/2 regardless of a, so the
        # implied model dimension is Binomial(p, 1/2) under thresholding
        rng = np.random.default_rng(6)
        p, n = 7, 50_000
        for a in (0.1, 0.4):
            u = rng.gamma(a, 1.0, (n, p)) / rng.gamma(a, 1.0, (n, p))  # BetaPrime(a,a), phi=1
            rho = 1.0 / (1.0 + u)
            p_d = (rho < 0.5).sum(axis=1)
            counts = np.bincount(p_d, minlength=p + 1)
            expected = stats.binom(p, 0.5).pmf(np.arange(p + 1)) * n
            assert stats.chisquare(counts, expected).pvalue > 0.01

    def test_betaprime_hyperprior_gives_uniform_dimension(self):
        # with phi ~ BetaPrime(c, a) the inclusion probability is U(0,1)
        # and the implied dimension is uniform on {0..p}
        rng = np.random.default_rng(7)
        p, n = 6, 50_000
        a = c = 0.3
        phi = rng.gamma(c, 1.0, n) / rng.gamma(a, 1.0, n)
        u = phi[:, None] * rng.gamma(a, 1.0, (n, p)) / rng.gamma(c, 1.0, (n, p))
        rho = 1.0 / (1.0 + u)
        p_d = (rho < 0.5).sum(axis=1)
        assert chi2_uniform_pvalue(p_d, p + 1) > 0.01
