"""MCMC samplers for TVP models under continuous priors.

Implements the two-block ridge sampler (path draw plus conjugate
regression), the three-block global-local sampler with GIG local-scale
updates, the ancillarity-sufficiency interweaving (ASIS) move that
re-draws (beta_j, theta_j) in the centered parametrization, hyperparameter
moves for the learned globals, the centered conjugate sampler for the
inverse gamma prior, and the chain driver with draw persistence.

All sweeps take and return a :class:`SamplerState`; arrays inside the
state are updated in place.  A chain is strictly sequential; concurrent
chains must use independent generators spawned from a master seed (see
:func:`spawn_rngs`).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np
from scipy.special import betaln, gammaln

from sparsetvp import statespace as ss
from sparsetvp import sv as svmod
from sparsetvp.priors import (
    InverseGammaPrior,
    RidgePrior,
    ShrinkageBranch,
    SigmaPrior,
    SpikeSlabPrior,
    TripleGammaPrior,
    validate,
)
from sparsetvp.special import sample_gig_raw

__all__ = [
    "BranchState",
    "SamplerState",
    "DrawsStore",
    "ridge_sweep",
    "shrinkage_sweep",
    "asis_interweave",
    "update_globals",
    "ig_sweep",
    "run_chain",
    "initial_state",
    "prior_ancestral_state",
    "simulate_given_state",
    "spawn_rngs",
    "fingerprint",
    "save_checkpoint",
    "load_checkpoint",
]

THETA_FLOOR = 1e-14
SQRT_THETA_BACKTRANSFORM_FLOOR = 1e-14
MH_TARGET_ACCEPT = 0.35


def spawn_rngs(seed, n):
    """Independent generators for concurrent chains, derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def fingerprint(*objects):
    """Deterministic hash of configuration objects (dataclasses, dicts, scalars)."""

    def norm(o):
        if is_dataclass(o) and not isinstance(o, type):
            d = asdict(o)
            d["__kind__"] = type(o).__name__
            return {k: norm(v) for k, v in sorted(d.items())}
        if isinstance(o, dict):
            return {str(k): norm(v) for k, v in sorted(o.items())}
        if isinstance(o, (list, tuple)):
            return [norm(v) for v in o]
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, float):
            if math.isinf(o):
                return "inf" if o > 0 else "-inf"
            return o
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        return o

    blob = json.dumps([norm(o) for o in objects], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Sampler state
# ---------------------------------------------------------------------------

@dataclass
class BranchState:
    """Mutable state of one shrinkage hierarchy during sampling.

    ``psi2`` holds the conditional-Gaussian prior variances of the
    coefficients (xi2_j for the variance branch, lambda_j for the mean
    branch); ``kappa2_local`` the third layer of the finite-c hierarchy.
    The adaptive Metropolis-Hastings step sizes are tuned toward a 0.35
    acceptance rate during burn-in and frozen afterwards.
    """

    config: ShrinkageBranch
    a: float
    c: float
    kappa2: float
    psi2: np.ndarray
    kappa2_local: np.ndarray = None
    step_a: float = 1.0
    step_c: float = 1.0
    step_phi: float = 1.0
    accepts: dict = field(default_factory=lambda: {"a": [0, 0], "c": [0, 0], "phi": [0, 0]})

    @property
    def phi(self):
        return 2.0 * self.c / (self.kappa2 * self.a)

    def set_phi(self, phi):
        self.kappa2 = 2.0 * self.c / (phi * self.a)


@dataclass
class SamplerState:
    """Full MCMC state for the continuous-prior samplers.

    ``path`` is the standardized (non-centered) state path for the ridge
    and shrinkage samplers and the centered coefficient path for the
    inverse gamma sampler.  Inactive layers are None.
    """

    prior: object
    sigma_prior: SigmaPrior
    path: np.ndarray
    beta: np.ndarray
    sqrt_theta: np.ndarray
    sigma2: float
    C0: float = None
    var_branch: BranchState = None
    mean_branch: BranchState = None
    sv: object = None
    adapting: bool = True
    asis_floor_hits: int = 0
    keep_sign: bool = False
    use_asis: bool = True
    path_sampler: str = "awol"

    @property
    def p(self):
        return self.beta.shape[0]

    def sigma2_vec(self, T):
        if self.sv is not None:
            return np.exp(self.sv.h[1:])
        return np.full(T, self.sigma2)


def _branch_state(branch, p_dim):
    psi2 = np.full(p_dim, 2.0 / branch.kappa2)
    k2 = None if math.isinf(branch.c) else np.full(p_dim, branch.kappa2)
    return BranchState(branch, branch.a, branch.c, branch.kappa2, psi2, k2)


def initial_state(data, prior, sigma_prior=None, keep_sign=False, path_sampler="awol"):
    """Deterministic starting state for a chain on the given data."""
    prior = validate(prior)
    sigma_prior = sigma_prior or SigmaPrior()
    p, T = data.p, data.T
    # ridge-regularized static fit as a neutral center
    G = data.X.T @ data.X + np.eye(p)
    beta0 = np.linalg.solve(G, data.X.T @ data.y)
    resid = data.y - data.X @ beta0
    sig0 = max(float(resid @ resid) / max(T - p, 1), 10 * ss.SIGMA2_FLOOR)
    st = SamplerState(
        prior=prior,
        sigma_prior=sigma_prior,
        path=np.zeros((p, T + 1)),
        beta=beta0,
        sqrt_theta=np.full(p, 0.1),
        sigma2=sig0,
        keep_sign=keep_sign,
        path_sampler=path_sampler,
    )
    if sigma_prior.kind == "inverse-gamma" and sigma_prior.learn_C0:
        st.C0 = sigma_prior.g1 / sigma_prior.g2
    if sigma_prior.kind == "sv":
        st.sv = svmod.SVState.initial(T, math.log(sig0))
        st.sigma2 = sig0
    if prior.kind == "triple-gamma":
        st.var_branch = _branch_state(prior.variance, p)
        st.mean_branch = _branch_state(prior.mean, p)
    if prior.kind == "inverse-gamma":
        st.path = np.tile(beta0[:, None], (1, T + 1))
        st.sqrt_theta = np.full(p, math.sqrt(prior.S0 / (prior.s0 + 1.0)))
    return st


# ---------------------------------------------------------------------------
# Shared update blocks
# ---------------------------------------------------------------------------

def _draw_path(rng, state, data):
    """Step (a): joint path draw given the model parameters."""
    params = ss.TVPParams(state.beta, state.sqrt_theta, state.sigma2_vec(data.T))
    parametrization = "centered" if state.prior.kind == "inverse-gamma" else "noncentered"
    if state.path_sampler == "ffbs":
        state.path = ss.ffbs_draw(rng, params, data, parametrization)
    else:
        state.path = ss.awol_draw(rng, params, data, parametrization)
    return state.path


def _design(state, data):
    """Regression design of the non-centered observation equation.

    y_t = x_t beta + (x_t * btil_t) sqrt_theta + eps_t, stacked over t.
    """
    W = np.hstack([data.X, data.X * state.path[:, 1:].T])
    return W


def _draw_sigma2_given_alpha(rng, state, data, W, alpha):
    sp = state.sigma_prior
    resid = data.y - W @ alpha
    ssr = float(resid @ resid)
    C0 = state.C0 if state.C0 is not None else sp.C0
    shape = sp.c0 + 0.5 * data.T
    rate = C0 + 0.5 * ssr
    state.sigma2 = max(1.0 / rng.gamma(shape, 1.0 / rate), ss.SIGMA2_FLOOR)
    if sp.learn_C0:
        state.C0 = rng.gamma(sp.g1 + sp.c0, 1.0 / (sp.g2 + 1.0 / state.sigma2))
    return state.sigma2


def _draw_alpha(rng, state, data, W, prior_var):
    """Step (b-2): alpha = (beta, sqrt_theta) from its Gaussian conditional."""
    w = 1.0 / state.sigma2_vec(data.T)
    Xw = W * w[:, None]
    prec = Xw.T @ W
    prec[np.diag_indices_from(prec)] += 1.0 / prior_var
    lin = Xw.T @ data.y
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        cond = np.linalg.cond(prec)
        raise RuntimeError(f"singular regression cross-product (condition number {cond:.3e})")
    mean = np.linalg.solve(L.T, np.linalg.solve(L, lin))
    alpha = mean + np.linalg.solve(L.T, rng.standard_normal(2 * data.p))
    state.beta = alpha[: data.p]
    state.sqrt_theta = alpha[data.p:]
    return alpha


def _draw_alpha_sigma2_conjugate(rng, state, data, W, prior_var_over_sigma2):
    """Joint (sigma2, alpha) draw when the prior scale carries sigma2."""
    sp = state.sigma_prior
    A0inv = 1.0 / prior_var_over_sigma2
    G = W.T @ W
    prec = G + np.diag(A0inv)
    L = np.linalg.cholesky(prec)
    lin = W.T @ data.y
    aN = np.linalg.solve(L.T, np.linalg.solve(L, lin))
    C0 = state.C0 if state.C0 is not None else sp.C0
    CN = C0 + 0.5 * float(data.y @ data.y - aN @ lin)
    shape = sp.c0 + 0.5 * data.T
    state.sigma2 = max(1.0 / rng.gamma(shape, 1.0 / CN), ss.SIGMA2_FLOOR)
    if sp.learn_C0:
        state.C0 = rng.gamma(sp.g1 + sp.c0, 1.0 / (sp.g2 + 1.0 / state.sigma2))
    alpha = aN + math.sqrt(state.sigma2) * np.linalg.solve(L.T, rng.standard_normal(2 * data.p))
    state.beta = alpha[: data.p]
    state.sqrt_theta = alpha[data.p:]
    return alpha


def _sv_step(rng, state, data, W=None):
    if state.sv is None:
        return
    if state.prior.kind == "inverse-gamma":
        resid = data.y - np.einsum("tp,pt->t", data.X, state.path[:, 1:])
    else:
        W = _design(state, data) if W is None else W
        resid = data.y - W @ np.concatenate([state.beta, state.sqrt_theta])
    svmod.sv_sweep(rng, state.sv, resid, state.sigma_prior)


# ---------------------------------------------------------------------------
# Ridge sampler
# ---------------------------------------------------------------------------

def ridge_sweep(rng, state, data):
    """One two-block sweep under the ridge prior.

    (a) path given parameters; (b-1) sigma2 from its inverse gamma
    conditional (marginalizing alpha when the ridge scale carries sigma2);
    (b-2) alpha = (beta, sqrt_theta) jointly from the conditional Gaussian
    of the 2p-dimensional regression.
    """
    prior = state.prior
    if prior.kind != "ridge":
        raise ValueError("ridge_sweep requires a ridge prior configuration")
    _draw_path(rng, state, data)
    W = _design(state, data)
    prior_var = np.concatenate([np.full(data.p, prior.tau_beta), np.full(data.p, prior.tau)])
    if prior.scale_by_sigma2:
        if state.sv is not None:
            raise ValueError("the sigma2-scaled ridge variant does not compose with SV")
        _draw_alpha_sigma2_conjugate(rng, state, data, W, prior_var)
    else:
        if state.sv is None:
            _draw_sigma2_given_alpha(rng, state, data, W, np.concatenate([state.beta, state.sqrt_theta]))
        else:
            _sv_step(rng, state, data, W)
        _draw_alpha(rng, state, data, W, prior_var)
    return state


# ---------------------------------------------------------------------------
# Global-local shrinkage sampler
# ---------------------------------------------------------------------------

def _update_local_scales(rng, state):
    """Step (c): GIG draws of the local scales given coefficients and globals."""
    for branch, coef in ((state.var_branch, state.sqrt_theta), (state.mean_branch, state.beta)):
        a = branch.a
        sq = np.maximum(coef**2, THETA_FLOOR)
        if math.isinf(branch.c):
            rate2 = np.full(coef.shape[0], branch.kappa2)
        else:
            rate2 = branch.kappa2_local
        for j in range(coef.shape[0]):
            branch.psi2[j] = sample_gig_raw(rng, a - 0.5, a * rate2[j], sq[j])
        if not math.isinf(branch.c):
            c = branch.c
            shape = a + c
            rate = 0.5 * a * branch.psi2 + c / branch.kappa2
            branch.kappa2_local = rng.gamma(shape, 1.0 / rate)


def asis_interweave(rng, state, data):
    """Interweaving move: re-draw (theta_j, beta_j) in the centered view.

    Maps the standardized path to the centered one, draws theta_j from its
    GIG conditional given the centered path and beta_j, then beta_j from
    its Gaussian conditional given the initial state, and maps back.  By
    default the sign of sqrt_theta_j is re-randomized (the posterior is
    sign-symmetric); set ``state.keep_sign`` to retain the previous sign.
    """
    T = data.T
    path_c = ss.centered_from_noncentered(state.path, state.beta, state.sqrt_theta)
    for j in range(state.p):
        dif = np.diff(path_c[j])
        s_j = float(dif @ dif) + (path_c[j, 0] - state.beta[j]) ** 2
        s_j = max(s_j, THETA_FLOOR)
        theta_new = sample_gig_raw(rng, -0.5 * T, 1.0 / state.var_branch.psi2[j], s_j)
        lam_j = state.mean_branch.psi2[j]
        prec = 1.0 / lam_j + 1.0 / theta_new
        mean = (path_c[j, 0] / theta_new) / prec
        beta_new = mean + rng.standard_normal() / math.sqrt(prec)
        if state.keep_sign:
            sign = math.copysign(1.0, state.sqrt_theta[j]) if state.sqrt_theta[j] != 0.0 else 1.0
        else:
            sign = 1.0 if rng.random() < 0.5 else -1.0
        sq_new = sign * math.sqrt(theta_new)
        if abs(sq_new) < SQRT_THETA_BACKTRANSFORM_FLOOR:
            # degenerate scale: resample from the prior layer and flag
            state.asis_floor_hits += 1
            sq_new = rng.normal(0.0, math.sqrt(state.var_branch.psi2[j]))
            if abs(sq_new) < SQRT_THETA_BACKTRANSFORM_FLOOR:
                sq_new = math.copysign(SQRT_THETA_BACKTRANSFORM_FLOOR, sq_new if sq_new != 0 else 1.0)
            state.beta[j] = beta_new
            state.sqrt_theta[j] = sq_new
            continue
        state.path[j] = (path_c[j] - beta_new) / sq_new
        state.beta[j] = beta_new
        state.sqrt_theta[j] = sq_new
    return state


def _make_branch_logtarget(branch):
    """Closure evaluating the scale-layer log density at trial globals.

    The local scales are fixed data inside one hyperparameter block, so
    their sufficient statistics are precomputed once and each evaluation
    is scalar arithmetic.
    """
    p = branch.psi2.shape[0]
    sum_log_psi = float(np.sum(np.log(branch.psi2)))
    sum_psi = float(np.sum(branch.psi2))
    if math.isinf(branch.c):

        def target(a, c, kappa2):
            rate = 0.5 * a * kappa2
            return p * (a * math.log(rate) - gammaln(a)) + (a - 1.0) * sum_log_psi - rate * sum_psi

        return target
    sum_log_k = float(np.sum(np.log(branch.kappa2_local)))
    sum_k = float(np.sum(branch.kappa2_local))
    sum_kpsi = float(np.sum(branch.kappa2_local * branch.psi2))
    learn_phi = branch.config.learn_phi

    def target(a, c, kappa2):
        half_a = 0.5 * a
        out = p * (a * math.log(half_a) - gammaln(a)) + a * sum_log_k
        out += (a - 1.0) * sum_log_psi - half_a * sum_kpsi
        rate_k = c / kappa2
        out += p * (c * math.log(rate_k) - gammaln(c)) + (c - 1.0) * sum_log_k - rate_k * sum_k
        if learn_phi:
            phi = 2.0 * c / (kappa2 * a)
            out += (c - 1.0) * math.log(phi) - (a + c) * math.log1p(phi) - float(betaln(c, a))
        return out

    return target


def _mh_step(rng, branch, which, adapting):
    """Random-walk MH on one transformed global; mutates the branch state.

    Shapes a and c move on the logit scale of 2a (2c); the support is
    (0, 1/2) under the Beta hyperprior.  phi moves on the log scale with
    kappa2 re-derived so the third-layer rates follow.  When phi carries
    the hyperprior, moves of a and c hold phi fixed; otherwise kappa2 is
    the fixed primal global.
    """
    cfg = branch.config
    finite = not math.isinf(branch.c)
    phi_primal = finite and cfg.learn_phi
    scales = _make_branch_logtarget(branch)

    def logit_half(v):
        return math.log(2.0 * v) - math.log1p(-2.0 * v)

    def from_logit(u):
        return 0.5 / (1.0 + math.exp(-u))

    if which == "a":
        step = branch.step_a
        cur = branch.a
        prop = from_logit(logit_half(cur) + step * rng.standard_normal())

        def target(aval):
            v = 2.0 * aval
            out = (cfg.alpha_a - 1.0) * math.log(v) + (cfg.beta_a - 1.0) * math.log1p(-v)
            out += math.log(v) + math.log1p(-v)  # logit-scale jacobian
            k2 = 2.0 * branch.c / (branch.phi * aval) if phi_primal else branch.kappa2
            return out + scales(aval, branch.c, k2)

    elif which == "c":
        step = branch.step_c
        cur = branch.c
        prop = from_logit(logit_half(cur) + step * rng.standard_normal())

        def target(cval):
            v = 2.0 * cval
            out = (cfg.alpha_c - 1.0) * math.log(v) + (cfg.beta_c - 1.0) * math.log1p(-v)
            out += math.log(v) + math.log1p(-v)
            k2 = 2.0 * cval / (branch.phi * branch.a) if phi_primal else branch.kappa2
            return out + scales(branch.a, cval, k2)

    else:  # phi on the log scale
        step = branch.step_phi
        cur = branch.phi
        prop = cur * math.exp(step * rng.standard_normal())

        def target(phival):
            k2 = 2.0 * branch.c / (phival * branch.a)
            return math.log(phival) + scales(branch.a, branch.c, k2)

    acc = math.log(rng.random()) < target(prop) - target(cur)
    rec = branch.accepts[which]
    rec[1] += 1
    rec[0] += int(acc)
    if acc:
        if which == "a":
            if phi_primal:
                phi = branch.phi
                branch.a = prop
                branch.set_phi(phi)
            else:
                branch.a = prop
        elif which == "c":
            if phi_primal:
                phi = branch.phi
                branch.c = prop
                branch.set_phi(phi)
            else:
                branch.c = prop
        else:
            branch.set_phi(prop)
    if adapting:
        rate = rec[0] / rec[1]
        scale = math.exp((rate - MH_TARGET_ACCEPT) / math.sqrt(1.0 + rec[1] / 10.0))
        new = min(max((branch.step_a if which == "a" else branch.step_c if which == "c" else branch.step_phi) * scale, 0.01), 10.0)
        if which == "a":
            branch.step_a = new
        elif which == "c":
            branch.step_c = new
        else:
            branch.step_phi = new


def update_globals(rng, state):
    """Hyperparameter block: conjugate gamma for the global scale of the
    infinite-c family, MH on transformed scales for a, c and phi."""
    for branch in (state.var_branch, state.mean_branch):
        if branch is None:
            continue
        cfg = branch.config
        if cfg.learn_kappa:
            shape = cfg.d1 + branch.psi2.shape[0] * branch.a
            rate = cfg.d2 + 0.5 * branch.a * float(np.sum(branch.psi2))
            branch.kappa2 = rng.gamma(shape, 1.0 / rate)
        if cfg.learn_a:
            _mh_step(rng, branch, "a", state.adapting)
        if cfg.learn_c:
            _mh_step(rng, branch, "c", state.adapting)
        if cfg.learn_phi:
            _mh_step(rng, branch, "phi", state.adapting)
    return state


def shrinkage_sweep(rng, state, data):
    """One sweep of the three-block global-local sampler with ASIS.

    (a) joint path draw; (b) sigma2 then alpha given the local scales;
    (c) GIG local-scale updates; then the ASIS interweaving move and the
    global-hyperparameter block.  With ``data=None`` the likelihood terms
    drop out and the sweep targets the prior (used by validation tests).
    """
    if state.prior.kind != "triple-gamma":
        raise ValueError("shrinkage_sweep requires a triple gamma family prior")
    if data is not None:
        _draw_path(rng, state, data)
        W = _design(state, data)
        prior_var = np.concatenate([state.mean_branch.psi2, state.var_branch.psi2])
        if state.sv is None:
            _draw_sigma2_given_alpha(rng, state, data, W, np.concatenate([state.beta, state.sqrt_theta]))
        else:
            _sv_step(rng, state, data, W)
        _draw_alpha(rng, state, data, W, prior_var)
    else:
        state.beta = rng.standard_normal(state.p) * np.sqrt(state.mean_branch.psi2)
        state.sqrt_theta = rng.standard_normal(state.p) * np.sqrt(state.var_branch.psi2)
    _update_local_scales(rng, state)
    if data is not None and state.use_asis:
        asis_interweave(rng, state, data)
    update_globals(rng, state)
    return state


# ---------------------------------------------------------------------------
# Inverse gamma sampler (centered parametrization)
# ---------------------------------------------------------------------------

def ig_sweep(rng, state, data):
    """Two-block sweep for the inverse gamma prior in the centered form.

    The prior is conditionally conjugate there: theta_j given its path is
    inverse gamma, beta_j given the initial state Gaussian, sigma2 given
    the path inverse gamma.
    """
    prior = state.prior
    if prior.kind != "inverse-gamma":
        raise ValueError("ig_sweep requires an inverse gamma prior configuration")
    _draw_path(rng, state, data)
    T = data.T
    for j in range(state.p):
        dif = np.diff(state.path[j])
        s_j = float(dif @ dif) + (state.path[j, 0] - state.beta[j]) ** 2
        shape = prior.s0 + 0.5 * (T + 1)
        rate = prior.S0 + 0.5 * s_j
        theta_j = rate / rng.gamma(shape)
        state.sqrt_theta[j] = math.sqrt(max(theta_j, THETA_FLOOR))
        prec = 1.0 / prior.beta_var + 1.0 / theta_j
        mean = (state.path[j, 0] / theta_j) / prec
        state.beta[j] = mean + rng.standard_normal() / math.sqrt(prec)
    resid = data.y - np.einsum("tp,pt->t", data.X, state.path[:, 1:])
    if state.sv is None:
        sp = state.sigma_prior
        C0 = state.C0 if state.C0 is not None else sp.C0
        rate = C0 + 0.5 * float(resid @ resid)
        state.sigma2 = max(1.0 / rng.gamma(sp.c0 + 0.5 * T, 1.0 / rate), ss.SIGMA2_FLOOR)
        if sp.learn_C0:
            state.C0 = rng.gamma(sp.g1 + sp.c0, 1.0 / (sp.g2 + 1.0 / state.sigma2))
    else:
        svmod.sv_sweep(rng, state.sv, resid, state.sigma_prior)
    return state


# ---------------------------------------------------------------------------
# Prior-ancestral simulation (used by Geweke-style validation and tests)
# ---------------------------------------------------------------------------

def prior_ancestral_state(rng, data, prior, sigma_prior=None, keep_sign=False, path_sampler="awol"):
    """Draw a full sampler state from the prior (globals down to the path)."""
    st = initial_state(data, prior, sigma_prior, keep_sign, path_sampler)
    prior = st.prior
    sp = st.sigma_prior
    p, T = data.p, data.T
    if prior.kind == "triple-gamma":
        for branch in (st.var_branch, st.mean_branch):
            cfg = branch.config
            if cfg.learn_a:
                branch.a = 0.5 * rng.beta(cfg.alpha_a, cfg.beta_a)
            if cfg.learn_c:
                branch.c = 0.5 * rng.beta(cfg.alpha_c, cfg.beta_c)
            if cfg.learn_kappa:
                branch.kappa2 = rng.gamma(cfg.d1, 1.0 / cfg.d2)
            if cfg.learn_phi:
                g1 = rng.gamma(branch.c)
                g2 = rng.gamma(branch.a)
                branch.set_phi(g1 / g2)
            if math.isinf(branch.c):
                branch.psi2 = rng.gamma(branch.a, 2.0 / (branch.a * branch.kappa2), size=p)
                branch.kappa2_local = None
            else:
                branch.kappa2_local = rng.gamma(branch.c, branch.kappa2 / branch.c, size=p)
                branch.psi2 = rng.gamma(branch.a, 1.0, size=p) * 2.0 / (branch.a * branch.kappa2_local)
        st.beta = rng.standard_normal(p) * np.sqrt(st.mean_branch.psi2)
        st.sqrt_theta = rng.standard_normal(p) * np.sqrt(st.var_branch.psi2)
    elif prior.kind == "ridge":
        st.beta = rng.standard_normal(p) * math.sqrt(prior.tau_beta)
        st.sqrt_theta = rng.standard_normal(p) * math.sqrt(prior.tau)
    elif prior.kind == "inverse-gamma":
        theta = prior.S0 / rng.gamma(prior.s0, size=p)
        st.sqrt_theta = np.sqrt(theta)
        st.beta = rng.standard_normal(p) * math.sqrt(prior.beta_var)
    if sp.kind == "inverse-gamma":
        if sp.learn_C0:
            st.C0 = rng.gamma(sp.g1, 1.0 / sp.g2)
        C0 = st.C0 if st.C0 is not None else sp.C0
        st.sigma2 = max(C0 / rng.gamma(sp.c0), ss.SIGMA2_FLOOR)
        if prior.kind == "ridge" and prior.scale_by_sigma2:
            st.beta = rng.standard_normal(p) * math.sqrt(prior.tau_beta * st.sigma2)
            st.sqrt_theta = rng.standard_normal(p) * math.sqrt(prior.tau * st.sigma2)
    else:
        st.sv = svmod.sv_prior_draw(rng, T, sp)
    # path from its prior random walk
    if prior.kind == "inverse-gamma":
        steps = np.sqrt(st.sqrt_theta**2)[:, None] * rng.standard_normal((p, T + 1))
        st.path = st.beta[:, None] + np.cumsum(steps, axis=1)
    else:
        steps = rng.standard_normal((p, T + 1))
        st.path = np.cumsum(steps, axis=1)
    return st


def simulate_given_state(rng, state, data):
    """Draw a response vector from the observation equation at the state."""
    T = data.T
    s2 = state.sigma2_vec(T)
    if state.prior.kind == "inverse-gamma":
        mean = np.einsum("tp,pt->t", data.X, state.path[:, 1:])
    else:
        path_c = ss.centered_from_noncentered(state.path, state.beta, state.sqrt_theta)
        mean = np.einsum("tp,pt->t", data.X, path_c[:, 1:])
    return mean + np.sqrt(s2) * rng.standard_normal(T)


# ---------------------------------------------------------------------------
# Chain driver and persistence
# ---------------------------------------------------------------------------

@dataclass
class DrawsStore:
    """Posterior draws with seed and configuration provenance.

    ``draws`` maps names to arrays whose first axis indexes the retained
    draws.  Saving writes one raw ``.npy`` per array plus a JSON sidecar,
    which keeps artifacts byte-identical across re-runs with equal inputs.
    """

    draws: dict
    seed: int
    config_hash: str
    thin: int = 1
    n_burn: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        k = next(iter(self.draws))
        return self.draws[k].shape[0]

    def save(self, outdir):
        ddir = os.path.join(outdir, "draws")
        os.makedirs(ddir, exist_ok=True)
        for k, v in sorted(self.draws.items()):
            np.save(os.path.join(ddir, f"{k}.npy"), v)
        side = {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "thin": self.thin,
            "n_burn": self.n_burn,
            "meta": self.meta,
            "arrays": sorted(self.draws),
        }
        with open(os.path.join(outdir, "meta.json"), "w") as fh:
            json.dump(side, fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, outdir):
        with open(os.path.join(outdir, "meta.json")) as fh:
            side = json.load(fh)
        draws = {
            k: np.load(os.path.join(outdir, "draws", f"{k}.npy")) for k in side["arrays"]
        }
        return cls(draws, side["seed"], side["config_hash"], side["thin"], side["n_burn"], side["meta"])

    def summary(self):
        """Posterior summaries (mean, median, sd, central 95% band) per array."""
        out = {}
        for k, v in sorted(self.draws.items()):
            if v.dtype.kind not in "fiu" or v.ndim > 2:
                continue
            q = np.quantile(v, [0.025, 0.5, 0.975], axis=0)
            out[k] = {
                "mean": np.mean(v, axis=0).tolist(),
                "sd": np.std(v, axis=0).tolist(),
                "q025": q[0].tolist(),
                "median": q[1].tolist(),
                "q975": q[2].tolist(),
            }
        return out


def save_checkpoint(state, path, sweep_index, config_hash):
    """Self-describing JSON snapshot of a sampler state for resumption."""
    def arr(x):
        return None if x is None else np.asarray(x).tolist()

    blob = {
        "sweep_index": sweep_index,
        "config_hash": config_hash,
        "prior_kind": state.prior.kind,
        "path": arr(state.path),
        "beta": arr(state.beta),
        "sqrt_theta": arr(state.sqrt_theta),
        "sigma2": state.sigma2,
        "C0": state.C0,
        "asis_floor_hits": state.asis_floor_hits,
    }
    for nm, branch in (("var", state.var_branch), ("mean", state.mean_branch)):
        if branch is not None:
            blob[nm] = {
                "a": branch.a,
                "c": "inf" if math.isinf(branch.c) else branch.c,
                "kappa2": branch.kappa2,
                "psi2": arr(branch.psi2),
                "kappa2_local": arr(branch.kappa2_local),
            }
    if state.sv is not None:
        blob["sv"] = state.sv.to_dict()
    with open(path, "w") as fh:
        json.dump(blob, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, data, prior, sigma_prior=None):
    """Rebuild a sampler state from a checkpoint written by save_checkpoint."""
    with open(path) as fh:
        blob = json.load(fh)
    st = initial_state(data, prior, sigma_prior)
    st.path = np.asarray(blob["path"], dtype=float)
    st.beta = np.asarray(blob["beta"], dtype=float)
    st.sqrt_theta = np.asarray(blob["sqrt_theta"], dtype=float)
    st.sigma2 = blob["sigma2"]
    st.C0 = blob["C0"]
    st.asis_floor_hits = blob["asis_floor_hits"]
    for nm, branch in (("var", st.var_branch), ("mean", st.mean_branch)):
        if branch is not None and nm in blob:
            sub = blob[nm]
            branch.a = sub["a"]
            branch.c = math.inf if sub["c"] == "inf" else sub["c"]
            branch.kappa2 = sub["kappa2"]
            branch.psi2 = np.asarray(sub["psi2"], dtype=float)
            if sub["kappa2_local"] is not None:
                branch.kappa2_local = np.asarray(sub["kappa2_local"], dtype=float)
    if "sv" in blob and st.sv is not None:
        st.sv = svmod.SVState.from_dict(blob["sv"])
    return st, blob["sweep_index"]


_SWEEPS = {
    "ridge": ridge_sweep,
    "triple-gamma": shrinkage_sweep,
    "inverse-gamma": ig_sweep,
}


def run_chain(
    data,
    prior,
    sigma_prior=None,
    n_burn=1000,
    n_draws=1000,
    thin=1,
    seed=0,
    path_sampler="awol",
    store_paths=False,
    keep_sign=False,
    use_asis=True,
    checkpoint_path=None,
):
    """Run one MCMC chain and collect draws.

    Deterministic in ``seed``.  On an unrecoverable error the current
    state is written to ``checkpoint_path`` (when given) before the
    exception propagates, so long runs are resumable.
    """
    prior = validate(prior)
    if prior.kind == "spike-slab":
        from sparsetvp.spikeslab import run_spike_slab_chain

        return run_spike_slab_chain(
            data, prior, sigma_prior, n_burn=n_burn, n_draws=n_draws, thin=thin, seed=seed,
            path_sampler=path_sampler, store_paths=store_paths, checkpoint_path=checkpoint_path,
        )
    sigma_prior = sigma_prior or SigmaPrior()
    cfg_hash = fingerprint(prior, sigma_prior, {"n_burn": n_burn, "n_draws": n_draws, "thin": thin,
                                                "path_sampler": path_sampler, "keep_sign": keep_sign,
                                                "use_asis": use_asis})
    rng = np.random.default_rng(seed)
    state = initial_state(data, prior, sigma_prior, keep_sign, path_sampler)
    state.use_asis = use_asis
    sweep = _SWEEPS[prior.kind]
    p = data.p
    rec = {
        "beta": np.empty((n_draws, p)),
        "sqrt_theta": np.empty((n_draws, p)),
        "sigma2": np.empty(n_draws),
    }
    if sigma_prior.kind == "sv":
        rec["sv_mu"] = np.empty(n_draws)
        rec["sv_phi"] = np.empty(n_draws)
        rec["sv_sigma2_eta"] = np.empty(n_draws)
        rec["sv_h_last"] = np.empty(n_draws)
        rec["sigma2_t"] = np.empty((n_draws, data.T))
    if prior.kind == "triple-gamma":
        rec["xi2"] = np.empty((n_draws, p))
        rec["lam"] = np.empty((n_draws, p))
        rec["a_xi"] = np.empty(n_draws)
        rec["kappa_B2"] = np.empty(n_draws)
        rec["a_tau"] = np.empty(n_draws)
        rec["lambda_B2"] = np.empty(n_draws)
        if not math.isinf(prior.variance.c):
            rec["c_xi"] = np.empty(n_draws)
        if not math.isinf(prior.mean.c):
            rec["c_tau"] = np.empty(n_draws)
    if store_paths:
        rec["path"] = np.empty((n_draws, p, data.T + 1))
    total = n_burn + n_draws * thin
    kept = 0
    try:
        for it in range(total):
            state.adapting = it < n_burn
            sweep(rng, state, data)
            if it < n_burn or (it - n_burn) % thin != thin - 1:
                continue
            rec["beta"][kept] = state.beta
            rec["sqrt_theta"][kept] = state.sqrt_theta
            rec["sigma2"][kept] = state.sigma2 if state.sv is None else math.exp(state.sv.mu)
            if state.sv is not None:
                rec["sv_mu"][kept] = state.sv.mu
                rec["sv_phi"][kept] = state.sv.phi
                rec["sv_sigma2_eta"][kept] = state.sv.sigma2_eta
                rec["sv_h_last"][kept] = state.sv.h[-1]
                rec["sigma2_t"][kept] = np.exp(state.sv.h[1:])
            if prior.kind == "triple-gamma":
                rec["xi2"][kept] = state.var_branch.psi2
                rec["lam"][kept] = state.mean_branch.psi2
                rec["a_xi"][kept] = state.var_branch.a
                rec["kappa_B2"][kept] = state.var_branch.kappa2
                rec["a_tau"][kept] = state.mean_branch.a
                rec["lambda_B2"][kept] = state.mean_branch.kappa2
                if "c_xi" in rec:
                    rec["c_xi"][kept] = state.var_branch.c
                if "c_tau" in rec:
                    rec["c_tau"][kept] = state.mean_branch.c
            if store_paths:
                if prior.kind == "inverse-gamma":
                    rec["path"][kept] = state.path
                else:
                    rec["path"][kept] = ss.centered_from_noncentered(
                        state.path, state.beta, state.sqrt_theta
                    )
            kept += 1
    except Exception:
        if checkpoint_path is not None:
            save_checkpoint(state, checkpoint_path, it, cfg_hash)
        raise
    meta = {"labels": list(data.labels), "prior_kind": prior.kind, "alias": getattr(prior, "alias", prior.kind),
            "asis_floor_hits": state.asis_floor_hits}
    if state.var_branch is not None:
        meta["mh_acceptance"] = {
            "var": {k: list(v) for k, v in state.var_branch.accepts.items()},
            "mean": {k: list(v) for k, v in state.mean_branch.accepts.items()},
        }
    return DrawsStore(rec, seed, cfg_hash, thin, n_burn, meta)
