"""Discrete spike-and-slab variance and variable selection.

Binary indicator pairs (delta_j, gamma_j) classify each coefficient as
zero (0,0), fixed (1,0) or dynamic (1,1); the combination (0,1) is
unrepresentable.  Conditional on the standardized latent path, the
marginal likelihood of the restricted regression has closed form under
the conjugate Gaussian slab (and under the fractional prior), which
drives either a full-enumeration Gibbs step over all 3^p models or a
random-scan single-move Metropolis-Hastings step.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from sparsetvp import statespace as ss
from sparsetvp.priors import SigmaPrior, SpikeSlabPrior, log_indicator_prior_mass, validate
from sparsetvp.special import sample_gig_raw

__all__ = [
    "IndicatorVector",
    "ModelCounts",
    "SpikeSlabState",
    "constrained_marginal_likelihood",
    "full_enumeration_step",
    "single_move_step",
    "spike_slab_sweep",
    "run_spike_slab_chain",
    "initial_spike_slab_state",
    "prior_spike_slab_state",
]

THETA_FLOOR = 1e-14


@dataclass(frozen=True)
class IndicatorVector:
    """Validated indicator pair; gamma_j = 1 forces delta_j = 1."""

    delta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=np.int64)
        gamma = np.asarray(self.gamma, dtype=np.int64)
        if delta.shape != gamma.shape:
            raise ValueError("delta and gamma must have equal length")
        if np.any((delta == 0) & (gamma == 1)):
            raise ValueError("gamma_j = 1 requires delta_j = 1")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def counts(self):
        return ModelCounts.from_indicators(self.delta, self.gamma)


@dataclass(frozen=True)
class ModelCounts:
    """Numbers of dynamic, fixed and zero coefficients; they sum to p."""

    p_d: int
    p_f: int
    p_0: int

    @classmethod
    def from_indicators(cls, delta, gamma):
        delta = np.asarray(delta)
        gamma = np.asarray(gamma)
        p_d = int(np.sum(gamma))
        p_f = int(np.sum(delta * (1 - gamma)))
        return cls(p_d, p_f, delta.shape[0] - p_d - p_f)


@dataclass
class SpikeSlabState:
    """MCMC state of the model-space sampler."""

    prior: SpikeSlabPrior
    sigma_prior: SigmaPrior
    path: np.ndarray
    beta: np.ndarray
    sqrt_theta: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    sigma2: float
    pi_delta: float = 0.5
    pi_gamma: float = 1.0 / 3.0
    C0: float = None
    ss_tau2: np.ndarray = None
    ss_xi2: np.ndarray = None
    ss_lambda2: float = 1.0
    ss_kappa2: float = 1.0
    path_sampler: str = "awol"
    move_stats: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.beta.shape[0]

    def sigma2_vec(self, T):
        return np.full(T, self.sigma2)


class _CrossProducts:
    """Cached cross-products of the full non-centered design for one path."""

    def __init__(self, state, data):
        F = np.hstack([data.X, data.X * state.path[:, 1:].T])
        self.G = F.T @ F
        self.Fy = F.T @ data.y
        self.yy = float(data.y @ data.y)
        self.T = data.T
        self.p = data.p


def _active_columns(delta, gamma, p):
    cols = [j for j in range(p) if delta[j]] + [p + j for j in range(p) if gamma[j]]
    return np.asarray(cols, dtype=np.int64)


def _slab_prior_variances(state, delta, gamma):
    """Slab prior variances (relative to sigma2) of the active coefficients."""
    prior = state.prior
    p = state.p
    out = []
    if prior.slab == "gaussian":
        out = [prior.slab_scale_beta] * int(np.sum(delta)) + [prior.slab_scale_theta] * int(np.sum(gamma))
    else:  # student-t, conditional on the current local scales
        out = [state.ss_lambda2 / state.ss_tau2[j] for j in range(p) if delta[j]]
        out += [state.ss_kappa2 / state.ss_xi2[j] for j in range(p) if gamma[j]]
    return np.asarray(out, dtype=float)


def constrained_marginal_likelihood(indicators, cross, state):
    """log p(y | delta, gamma, path): the restricted-regression marginal.

    Under a (conditionally) Gaussian slab, sigma2 is integrated against
    its inverse gamma prior; under the fractional prior the reference
    sigma2 prior is used, giving a scale-free expression.  Rank-deficient
    active designs are reported with -inf.
    """
    delta, gamma = indicators
    T = cross.T
    cols = _active_columns(delta, gamma, cross.p)
    k = cols.shape[0]
    prior = state.prior
    if prior.slab == "fractional":
        if k == 0:
            ssr = cross.yy
        else:
            G = cross.G[np.ix_(cols, cols)]
            lin = cross.Fy[cols]
            try:
                L = np.linalg.cholesky(G)
            except np.linalg.LinAlgError:
                return -math.inf
            piv2 = float(np.min(np.diagonal(L))) ** 2
            if piv2 <= 1e-10 * float(np.max(np.diagonal(G))):
                return -math.inf  # numerically rank-deficient active design
            half = np.linalg.solve(L, lin)
            ssr = cross.yy - float(half @ half)
        if ssr <= 0.0:
            return -math.inf
        b = prior.b_frac
        return (
            0.5 * k * math.log(b / (1.0 + b))
            + gammaln(0.5 * T)
            - 0.5 * T * math.log(math.pi * ssr)
        )
    sp = state.sigma_prior
    C0 = state.C0 if state.C0 is not None else sp.C0
    c0 = sp.c0
    if k == 0:
        CN = C0 + 0.5 * cross.yy
        logdet_term = 0.0
    else:
        A0 = _slab_prior_variances(state, delta, gamma)
        G = cross.G[np.ix_(cols, cols)] + np.diag(1.0 / A0)
        lin = cross.Fy[cols]
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return -math.inf
        half = np.linalg.solve(L, lin)
        CN = C0 + 0.5 * (cross.yy - float(half @ half))
        logdet_term = -float(np.sum(np.log(np.diagonal(L)))) - 0.5 * float(np.sum(np.log(A0)))
        if CN <= 0.0:
            return -math.inf
    return (
        c0 * math.log(C0)
        - (c0 + 0.5 * T) * math.log(CN)
        + gammaln(c0 + 0.5 * T)
        - gammaln(c0)
        - 0.5 * T * math.log(2.0 * math.pi)
        + logdet_term
    )


def _log_model_posterior(delta, gamma, cross, state):
    ml = constrained_marginal_likelihood((delta, gamma), cross, state)
    pi = (state.pi_delta, state.pi_gamma) if state.prior.pi_fixed is not None else None
    return ml + log_indicator_prior_mass(state.prior, delta, gamma, pi=pi)


_CATEGORIES = ((0, 0), (1, 0), (1, 1))  # zero, fixed, dynamic


def enumerate_models(p):
    """All 3^p valid indicator configurations as (delta, gamma) int arrays."""
    out = []
    for combo in itertools.product(_CATEGORIES, repeat=p):
        delta = np.array([c[0] for c in combo], dtype=np.int64)
        gamma = np.array([c[1] for c in combo], dtype=np.int64)
        out.append((delta, gamma))
    return out


def full_enumeration_step(rng, state, data, cross=None, loglik_fn=None):
    """Exact Gibbs draw of (delta, gamma) by enumerating all 3^p models.

    ``loglik_fn`` overrides the marginal-likelihood evaluation (tests use
    this to run the step prior-only); by default it is the closed-form
    constrained marginal likelihood given the current path.
    """
    p = state.p
    if p > state.prior.enumeration_cap:
        raise ValueError(
            f"p={p} exceeds the enumeration cap {state.prior.enumeration_cap}; "
            "use single_move_step instead"
        )
    if cross is None and loglik_fn is None:
        cross = _CrossProducts(state, data)
    models = enumerate_models(p)
    logp = np.empty(len(models))
    pi = None if state.prior.pi_fixed is None else (state.pi_delta, state.pi_gamma)
    for i, (d, g) in enumerate(models):
        if loglik_fn is None:
            ml = constrained_marginal_likelihood((d, g), cross, state)
        else:
            ml = loglik_fn(d, g)
        logp[i] = ml + log_indicator_prior_mass(state.prior, d, g, pi=pi)
    logp -= logp.max()
    prob = np.exp(logp)
    prob /= prob.sum()
    idx = int(rng.choice(len(models), p=prob))
    state.delta, state.gamma = (a.copy() for a in models[idx])
    return state.delta, state.gamma


def _category_of(dj, gj):
    return "d" if gj else ("f" if dj else "z")


def single_move_step(rng, state, data, cross=None, loglik_fn=None):
    """Random-scan single-move MH over the indicator pairs.

    For each j in random order, one of the two alternative categories is
    proposed with probability 1/2 and accepted by the marginal-likelihood
    times prior ratio (the proposal is symmetric).  Per-move acceptance
    counts are recorded in ``state.move_stats``.
    """
    p = state.p
    if cross is None and loglik_fn is None:
        cross = _CrossProducts(state, data)

    def logpost(d, g):
        if loglik_fn is None:
            ml = constrained_marginal_likelihood((d, g), cross, state)
        else:
            ml = loglik_fn(d, g)
        pi = None if state.prior.pi_fixed is None else (state.pi_delta, state.pi_gamma)
        return ml + log_indicator_prior_mass(state.prior, d, g, pi=pi)

    cur_lp = logpost(state.delta, state.gamma)
    for j in rng.permutation(p):
        cur_cat = (int(state.delta[j]), int(state.gamma[j]))
        alts = [c for c in _CATEGORIES if c != cur_cat]
        prop_cat = alts[int(rng.random() < 0.5)]
        d_new = state.delta.copy()
        g_new = state.gamma.copy()
        d_new[j], g_new[j] = prop_cat
        new_lp = logpost(d_new, g_new)
        key = f"{_category_of(*cur_cat)}->{_category_of(*prop_cat)}"
        rec = state.move_stats.setdefault(key, [0, 0])
        rec[1] += 1
        if cur_lp == -math.inf:
            accept = new_lp > -math.inf  # escape invalid states unconditionally
        else:
            accept = math.log(rng.random()) < new_lp - cur_lp
        if accept:
            state.delta, state.gamma = d_new, g_new
            cur_lp = new_lp
            rec[0] += 1
    return state.delta, state.gamma


def _draw_sigma2_and_coefs(rng, state, data, cross):
    """Steps (b-1) and (b-2): sigma2 and the active coefficients."""
    delta, gamma = state.delta, state.gamma
    cols = _active_columns(delta, gamma, state.p)
    k = cols.shape[0]
    T = data.T
    sp = state.sigma_prior
    prior = state.prior
    if prior.slab == "fractional":
        if k == 0:
            ssr = cross.yy
            state.sigma2 = max((0.5 * ssr) / rng.gamma(0.5 * T), ss.SIGMA2_FLOOR)
        else:
            G = cross.G[np.ix_(cols, cols)]
            lin = cross.Fy[cols]
            L = np.linalg.cholesky(G)
            half = np.linalg.solve(L, lin)
            ssr = max(cross.yy - float(half @ half), 1e-300)
            state.sigma2 = max((0.5 * ssr) / rng.gamma(0.5 * T), ss.SIGMA2_FLOOR)
            mean = np.linalg.solve(L.T, half)
            scale = math.sqrt(state.sigma2 / (1.0 + prior.b_frac))
            coef = mean + scale * np.linalg.solve(L.T, rng.standard_normal(k))
    else:
        C0 = state.C0 if state.C0 is not None else sp.C0
        if k == 0:
            CN = C0 + 0.5 * cross.yy
            state.sigma2 = max(CN / rng.gamma(sp.c0 + 0.5 * T), ss.SIGMA2_FLOOR)
        else:
            A0 = _slab_prior_variances(state, delta, gamma)
            G = cross.G[np.ix_(cols, cols)] + np.diag(1.0 / A0)
            lin = cross.Fy[cols]
            L = np.linalg.cholesky(G)
            half = np.linalg.solve(L, lin)
            CN = C0 + 0.5 * max(cross.yy - float(half @ half), 0.0)
            state.sigma2 = max(CN / rng.gamma(sp.c0 + 0.5 * T), ss.SIGMA2_FLOOR)
            mean = np.linalg.solve(L.T, half)
            coef = mean + math.sqrt(state.sigma2) * np.linalg.solve(L.T, rng.standard_normal(k))
        if sp.learn_C0:
            state.C0 = rng.gamma(sp.g1 + sp.c0, 1.0 / (sp.g2 + 1.0 / state.sigma2))
    state.beta = np.zeros(state.p)
    state.sqrt_theta = np.zeros(state.p)
    if k:
        n_delta = int(np.sum(delta))
        bcols = [j for j in range(state.p) if delta[j]]
        gcols = [j for j in range(state.p) if gamma[j]]
        state.beta[bcols] = coef[:n_delta]
        state.sqrt_theta[gcols] = coef[n_delta:]


def _update_slab_scales(rng, state):
    """Student-t slab: conjugate gamma locals and GIG globals.

    Local scales of inactive coefficients are refreshed from their priors
    so proposals to activate them integrate over the prior law.
    """
    prior = state.prior
    if prior.slab != "student-t":
        return
    p = state.p
    s2 = state.sigma2
    at, ax = prior.a_tau, prior.a_xi
    for j in range(p):
        if state.delta[j]:
            rate = at + state.beta[j] ** 2 / (2.0 * s2 * state.ss_lambda2)
            state.ss_tau2[j] = rng.gamma(at + 0.5, 1.0 / rate)
        else:
            state.ss_tau2[j] = rng.gamma(at, 1.0 / at)
        if state.gamma[j]:
            rate = ax + state.sqrt_theta[j] ** 2 / (2.0 * s2 * state.ss_kappa2)
            state.ss_xi2[j] = rng.gamma(ax + 0.5, 1.0 / rate)
        else:
            state.ss_xi2[j] = rng.gamma(ax, 1.0 / ax)
    nd = int(np.sum(state.delta))
    if nd:
        quad = float(np.sum(state.beta[state.delta == 1] ** 2 * state.ss_tau2[state.delta == 1])) / s2
        state.ss_lambda2 = sample_gig_raw(rng, prior.a_lambda - 0.5 * nd, 2.0 * prior.a_lambda, max(quad, THETA_FLOOR))
    else:
        state.ss_lambda2 = rng.gamma(prior.a_lambda, 1.0 / prior.a_lambda)
    ng = int(np.sum(state.gamma))
    if ng:
        quad = float(np.sum(state.sqrt_theta[state.gamma == 1] ** 2 * state.ss_xi2[state.gamma == 1])) / s2
        state.ss_kappa2 = sample_gig_raw(rng, prior.a_kappa - 0.5 * ng, 2.0 * prior.a_kappa, max(quad, THETA_FLOOR))
    else:
        state.ss_kappa2 = rng.gamma(prior.a_kappa, 1.0 / prior.a_kappa)


def _update_pis(rng, state):
    prior = state.prior
    if prior.pi_fixed is not None:
        state.pi_delta, state.pi_gamma = prior.pi_fixed
        return
    counts = ModelCounts.from_indicators(state.delta, state.gamma)
    state.pi_delta = rng.beta(prior.a0_delta + counts.p_f, prior.b0_delta + counts.p_0)
    state.pi_gamma = rng.beta(prior.a0_gamma + counts.p_d, prior.b0_gamma + counts.p_f + counts.p_0)


def spike_slab_sweep(rng, state, data):
    """One sweep of model-space MCMC.

    (a) indicators given the path and data only (the model parameters are
    integrated out, so the path draw must come last); (b) sigma2 and the
    active coefficients; (c) the path given everything; then the
    inclusion probabilities and, for the Student-t slab, its scale
    hierarchy.
    """
    cross = _CrossProducts(state, data)
    if state.p <= state.prior.enumeration_cap:
        full_enumeration_step(rng, state, data, cross=cross)
    else:
        single_move_step(rng, state, data, cross=cross)
    _draw_sigma2_and_coefs(rng, state, data, cross)
    params = ss.TVPParams(state.beta, state.sqrt_theta, state.sigma2)
    if state.path_sampler == "ffbs":
        state.path = ss.ffbs_draw(rng, params, data, "noncentered")
    else:
        state.path = ss.awol_draw(rng, params, data, "noncentered")
    _update_pis(rng, state)
    _update_slab_scales(rng, state)
    return state


def initial_spike_slab_state(data, prior, sigma_prior=None, path_sampler="awol"):
    prior = validate(prior)
    if prior.kind != "spike-slab":
        raise ValueError("expected a spike-and-slab prior")
    sigma_prior = sigma_prior or SigmaPrior()
    if sigma_prior.kind == "sv":
        raise ValueError("the spike-and-slab sampler requires a homoscedastic variance")
    p, T = data.p, data.T
    resid = data.y - data.X @ np.linalg.lstsq(data.X, data.y, rcond=None)[0]
    sig0 = max(float(resid @ resid) / max(T - p, 1), 10 * ss.SIGMA2_FLOOR)
    # the zero path makes every dynamic model degenerate, so the chain
    # starts at the static regression; run_spike_slab_chain replaces the
    # path with a prior draw before the first sweep
    st = SpikeSlabState(
        prior=prior,
        sigma_prior=sigma_prior,
        path=np.zeros((p, T + 1)),
        beta=np.zeros(p),
        sqrt_theta=np.zeros(p),
        delta=np.ones(p, dtype=np.int64),
        gamma=np.zeros(p, dtype=np.int64),
        sigma2=sig0,
        ss_tau2=np.ones(p),
        ss_xi2=np.ones(p),
        path_sampler=path_sampler,
    )
    if sigma_prior.learn_C0:
        st.C0 = sigma_prior.g1 / sigma_prior.g2
    if prior.pi_fixed is not None:
        st.pi_delta, st.pi_gamma = prior.pi_fixed
    return st


def prior_spike_slab_state(rng, data, prior, sigma_prior=None, path_sampler="awol"):
    """Ancestral draw of the full spike-and-slab state from its prior."""
    st = initial_spike_slab_state(data, prior, sigma_prior, path_sampler)
    prior = st.prior
    sp = st.sigma_prior
    p, T = data.p, data.T
    if prior.pi_fixed is None:
        st.pi_delta = rng.beta(prior.a0_delta, prior.b0_delta)
        st.pi_gamma = rng.beta(prior.a0_gamma, prior.b0_gamma)
    st.gamma = (rng.random(p) < st.pi_gamma).astype(np.int64)
    st.delta = np.where(st.gamma == 1, 1, (rng.random(p) < st.pi_delta).astype(np.int64))
    if sp.learn_C0:
        st.C0 = rng.gamma(sp.g1, 1.0 / sp.g2)
    C0 = st.C0 if st.C0 is not None else sp.C0
    st.sigma2 = max(C0 / rng.gamma(sp.c0), ss.SIGMA2_FLOOR)
    st.ss_tau2 = rng.gamma(prior.a_tau, 1.0 / prior.a_tau, size=p)
    st.ss_xi2 = rng.gamma(prior.a_xi, 1.0 / prior.a_xi, size=p)
    st.ss_lambda2 = rng.gamma(prior.a_lambda, 1.0 / prior.a_lambda)
    st.ss_kappa2 = rng.gamma(prior.a_kappa, 1.0 / prior.a_kappa)
    st.beta = np.zeros(p)
    st.sqrt_theta = np.zeros(p)
    for j in range(p):
        if st.delta[j]:
            if prior.slab == "gaussian":
                var = st.sigma2 * prior.slab_scale_beta
            else:
                var = st.sigma2 * st.ss_lambda2 / st.ss_tau2[j]
            st.beta[j] = rng.normal(0.0, math.sqrt(var))
        if st.gamma[j]:
            if prior.slab == "gaussian":
                var = st.sigma2 * prior.slab_scale_theta
            else:
                var = st.sigma2 * st.ss_kappa2 / st.ss_xi2[j]
            st.sqrt_theta[j] = rng.normal(0.0, math.sqrt(var))
    st.path = np.cumsum(rng.standard_normal((p, T + 1)), axis=1)
    return st


def run_spike_slab_chain(
    data,
    prior,
    sigma_prior=None,
    n_burn=1000,
    n_draws=1000,
    thin=1,
    seed=0,
    path_sampler="awol",
    store_paths=False,
    checkpoint_path=None,
):
    """Chain driver for the spike-and-slab sampler; mirrors run_chain."""
    from sparsetvp.gibbs import DrawsStore, fingerprint

    prior = validate(prior)
    sigma_prior = sigma_prior or SigmaPrior()
    cfg_hash = fingerprint(prior, sigma_prior, {"n_burn": n_burn, "n_draws": n_draws, "thin": thin,
                                                "path_sampler": path_sampler})
    rng = np.random.default_rng(seed)
    state = initial_spike_slab_state(data, prior, sigma_prior, path_sampler)
    p = data.p
    rec = {
        "beta": np.empty((n_draws, p)),
        "sqrt_theta": np.empty((n_draws, p)),
        "sigma2": np.empty(n_draws),
        "delta": np.empty((n_draws, p), dtype=np.uint8),
        "gamma": np.empty((n_draws, p), dtype=np.uint8),
        "pi_delta": np.empty(n_draws),
        "pi_gamma": np.empty(n_draws),
    }
    if store_paths:
        rec["path"] = np.empty((n_draws, p, data.T + 1))
    kept = 0
    total = n_burn + n_draws * thin
    try:
        for it in range(total):
            spike_slab_sweep(rng, state, data)
            if it < n_burn or (it - n_burn) % thin != thin - 1:
                continue
            rec["beta"][kept] = state.beta
            rec["sqrt_theta"][kept] = state.sqrt_theta
            rec["sigma2"][kept] = state.sigma2
            rec["delta"][kept] = state.delta
            rec["gamma"][kept] = state.gamma
            rec["pi_delta"][kept] = state.pi_delta
            rec["pi_gamma"][kept] = state.pi_gamma
            if store_paths:
                rec["path"][kept] = ss.centered_from_noncentered(
                    state.path, state.beta, state.sqrt_theta
                )
            kept += 1
    except Exception:
        if checkpoint_path is not None:
            import json

            with open(checkpoint_path, "w") as fh:
                json.dump({"sweep_index": it, "config_hash": cfg_hash,
                           "delta": state.delta.tolist(), "gamma": state.gamma.tolist()}, fh)
        raise
    meta = {
        "labels": list(data.labels),
        "prior_kind": "spike-slab",
        "slab": prior.slab,
        "move_acceptance": {k: list(v) for k, v in sorted(state.move_stats.items())},
    }
    return DrawsStore(rec, seed, cfg_hash, thin, n_burn, meta)
