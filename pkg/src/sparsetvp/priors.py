"""Prior taxonomy for TVP variance selection and its validation.

Four families are supported for the pair (beta_j, sqrt_theta_j):

* inverse gamma on theta_j (the traditional choice; no shrinkage to zero),
* ridge: Gaussian on sqrt_theta_j, optionally scaled by sigma2,
* the triple gamma hierarchy on theta_j, which contains the Lasso
  (a=1, c=inf), the double gamma (finite a, c=inf) and the horseshoe
  (a=c=1/2) as special or limiting cases, with optional hyperpriors on
  its shape and global-scale parameters,
* discrete spike-and-slab with Dirac spike and Gaussian, fractional or
  hierarchical Student-t slab.

``validate`` resolves user-facing aliases ("lasso", "horseshoe", ...)
into the canonical triple gamma parametrization; an infinite tail shape
c is represented explicitly and never approximated by a large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import betaln, gammaln

from sparsetvp.special import log_marginal_sqrt_theta_density

__all__ = [
    "ShrinkageBranch",
    "InverseGammaPrior",
    "RidgePrior",
    "TripleGammaPrior",
    "SpikeSlabPrior",
    "SigmaPrior",
    "validate",
    "log_prior_density",
]


@dataclass(frozen=True)
class ShrinkageBranch:
    """One triple gamma hierarchy: either the variance or the mean branch.

    ``a`` controls the spike at the origin, ``c`` the polynomial tail
    (``math.inf`` collapses the kappa2_j layer and yields the double
    gamma), and ``kappa2`` is the global shrinkage parameter (2/tau in
    terms of the prior expectation tau of theta_j).  The learn switches
    activate, respectively, Beta(alpha_a, beta_a) on 2a, Beta(alpha_c,
    beta_c) on 2c (both restricting support to (0, 1/2)), the
    BetaPrime(c, a) hyperprior on phi = 2c/(kappa2 * a), and a
    Gamma(d1, d2) hyperprior on kappa2 itself (infinite-c family only).
    """

    a: float
    c: float
    kappa2: float = 2.0
    learn_a: bool = False
    alpha_a: float = 5.0
    beta_a: float = 10.0
    learn_c: bool = False
    alpha_c: float = 5.0
    beta_c: float = 10.0
    learn_phi: bool = False
    learn_kappa: bool = False
    d1: float = 0.001
    d2: float = 0.001

    def __post_init__(self):
        if not (self.a > 0.0 and self.c > 0.0 and self.kappa2 > 0.0):
            raise ValueError("shape and scale parameters must be strictly positive")
        if self.learn_phi and math.isinf(self.c):
            raise ValueError("the phi hyperprior requires a finite tail shape c")
        if self.learn_kappa and not math.isinf(self.c):
            raise ValueError("the Gamma hyperprior on kappa2 belongs to the infinite-c family")
        if self.learn_phi and self.learn_kappa:
            raise ValueError("learn_phi and learn_kappa are mutually exclusive")
        if self.learn_a and not 0.0 < self.a < 0.5:
            raise ValueError("learned a must start inside (0, 0.5)")
        if self.learn_c and not 0.0 < self.c < 0.5:
            raise ValueError("learned c must start inside (0, 0.5)")

    @property
    def tau(self):
        """Prior expectation of theta_j given the global scale."""
        return 2.0 / self.kappa2

    @property
    def phi(self):
        """Global scale in the TPB parametrization, 2c/(kappa2*a)."""
        if math.isinf(self.c):
            raise ValueError("phi is undefined for infinite c")
        return 2.0 * self.c / (self.kappa2 * self.a)


@dataclass(frozen=True)
class InverseGammaPrior:
    """theta_j ~ InvGamma(s0, S0), conjugate in the centered parametrization."""

    s0: float = 0.001
    S0: float = 0.001
    beta_var: float = 10.0  # N(0, beta_var) on the initial expectations

    kind = "inverse-gamma"

    def __post_init__(self):
        if not (self.s0 > 0.0 and self.S0 > 0.0 and self.beta_var > 0.0):
            raise ValueError("inverse gamma hyperparameters must be positive")


@dataclass(frozen=True)
class RidgePrior:
    """sqrt_theta_j ~ N(0, tau [* sigma2]) and beta_j ~ N(0, tau_beta [* sigma2]).

    The sigma2-independent variant (default) composes with stochastic
    volatility; the sigma2-scaled variant is fully conjugate.
    """

    tau: float
    tau_beta: float = None
    scale_by_sigma2: bool = False

    kind = "ridge"

    def __post_init__(self):
        if self.tau_beta is None:
            object.__setattr__(self, "tau_beta", self.tau)
        if not (self.tau > 0.0 and self.tau_beta > 0.0):
            raise ValueError("ridge scales must be positive")


@dataclass(frozen=True)
class TripleGammaPrior:
    """Triple gamma hierarchies on the variance and initial-mean branches."""

    variance: ShrinkageBranch
    mean: ShrinkageBranch
    alias: str = "triple-gamma"

    kind = "triple-gamma"

    @property
    def a_xi(self):
        return self.variance.a

    @property
    def c_xi(self):
        return self.variance.c

    @property
    def kappa_B2(self):
        return self.variance.kappa2

    @property
    def a_tau(self):
        return self.mean.a

    @property
    def c_tau(self):
        return self.mean.c

    @property
    def lambda_B2(self):
        return self.mean.kappa2


@dataclass(frozen=True)
class SpikeSlabPrior:
    """Dirac spike and slab on (beta_j, sqrt_theta_j) with binary indicators.

    ``slab`` is one of "gaussian", "fractional", "student-t".  The
    indicator probabilities are either fixed via ``pi_fixed = (pi_delta,
    pi_gamma)`` or given Beta(a0, b0) hyperpriors.
    """

    slab: str = "student-t"
    slab_scale_beta: float = 1.0
    slab_scale_theta: float = 1.0
    b_frac: float = 1e-4
    a_tau: float = 0.5
    a_xi: float = 0.5
    a_lambda: float = 0.5
    a_kappa: float = 0.5
    pi_fixed: tuple = None
    a0_delta: float = 1.0
    b0_delta: float = 1.0
    a0_gamma: float = 1.0
    b0_gamma: float = 2.0
    enumeration_cap: int = 9

    kind = "spike-slab"

    def __post_init__(self):
        if self.slab not in ("gaussian", "fractional", "student-t"):
            raise ValueError(f"unknown slab kind {self.slab!r}")
        if self.pi_fixed is not None:
            pd, pg = self.pi_fixed
            if not (0.0 < pd < 1.0 and 0.0 < pg < 1.0):
                raise ValueError("fixed inclusion probabilities must lie in (0,1)")
        for nm in ("slab_scale_beta", "slab_scale_theta", "b_frac", "a_tau", "a_xi", "a_lambda", "a_kappa",
                   "a0_delta", "b0_delta", "a0_gamma", "b0_gamma"):
            if getattr(self, nm) <= 0.0:
                raise ValueError(f"{nm} must be positive")


@dataclass(frozen=True)
class SigmaPrior:
    """Observation-variance prior: inverse gamma (optionally hierarchical) or SV.

    With ``kind="inverse-gamma"``: sigma2 ~ InvGamma(c0, C0), and if
    ``learn_C0`` then C0 ~ Gamma(g1, g2) (shape/rate).  With
    ``kind="sv"`` the variance follows the AR(1) stochastic volatility
    block with the listed hyperparameters.
    """

    kind: str = "inverse-gamma"
    c0: float = 0.5
    C0: float = 1.0
    learn_C0: bool = True
    g1: float = 5.0
    g2: float = 10.0 / 3.0
    # sv hyperparameters
    mu0: float = 0.0
    var_mu: float = 100.0
    a_phi: float = 5.0
    b_phi: float = 1.5
    B_sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("inverse-gamma", "sv"):
            raise ValueError(f"unknown sigma prior kind {self.kind!r}")
        if self.kind == "inverse-gamma":
            if not (self.c0 > 0.0 and self.C0 > 0.0 and self.g1 > 0.0 and self.g2 > 0.0):
                raise ValueError("inverse gamma hyperparameters must be positive")


_ALIASES = ("ridge", "lasso", "double-gamma", "triple-gamma", "horseshoe", "inverse-gamma", "spike-slab")


def _branch_from_dict(d, alias):
    d = dict(d or {})
    if isinstance(d.get("c"), str):
        if d["c"] not in ("inf", ".inf"):
            raise ValueError(f"non-numeric tail shape {d['c']!r}")
        d["c"] = math.inf
    if alias == "lasso":
        base = dict(a=1.0, c=math.inf, learn_kappa=True)
    elif alias == "double-gamma":
        base = dict(a=0.1, c=math.inf, learn_kappa=True)
    elif alias == "horseshoe":
        base = dict(a=0.5, c=0.5, learn_phi=True)
    else:  # full triple gamma, hyperparameters learned by default
        base = dict(a=0.1, c=0.1, learn_a=True, learn_c=True, learn_phi=True)
    base.update(d)
    known = set(ShrinkageBranch.__dataclass_fields__)
    unknown = set(base) - known
    if unknown:
        raise ValueError(f"unknown shrinkage fields: {sorted(unknown)}")
    return ShrinkageBranch(**base)


def validate(config):
    """Normalize a prior specification to its canonical configuration object.

    Accepts an already-built prior object (returned as is after checks), a
    bare alias string, or a dict with a ``kind`` key plus family-specific
    fields.  Aliases resolve into the triple gamma parametrization:
    lasso = (a=1, c=inf) with a learned global, horseshoe = (1/2, 1/2)
    with the BetaPrime hyperprior on phi (so phi ~ F(1,1)), double gamma
    = finite a with c=inf.  Deterministic: equal inputs give equal
    outputs.
    """
    if isinstance(config, (InverseGammaPrior, RidgePrior, TripleGammaPrior, SpikeSlabPrior)):
        return config
    if isinstance(config, str):
        config = {"kind": config}
    if not isinstance(config, dict):
        raise ValueError(f"cannot validate prior specification of type {type(config)!r}")
    cfg = dict(config)
    kind = cfg.pop("kind", None)
    if kind not in _ALIASES:
        raise ValueError(f"unknown prior kind {kind!r}; expected one of {_ALIASES}")
    if kind == "inverse-gamma":
        return InverseGammaPrior(**cfg)
    if kind == "ridge":
        return RidgePrior(**cfg)
    if kind == "spike-slab":
        return SpikeSlabPrior(**cfg)
    var_cfg = cfg.pop("variance", None)
    mean_cfg = cfg.pop("mean", None)
    if cfg:
        raise ValueError(f"unknown fields for {kind!r}: {sorted(cfg)}")
    return TripleGammaPrior(
        variance=_branch_from_dict(var_cfg, kind),
        mean=_branch_from_dict(mean_cfg, kind),
        alias=kind,
    )


def _log_gamma_pdf(x, shape, rate):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        return -math.inf
    return float(np.sum(shape * math.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x))


def _log_normal_pdf(x, var):
    x = np.asarray(x, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(var <= 0.0):
        return -math.inf
    return float(np.sum(-0.5 * (np.log(2.0 * math.pi * var) + x * x / var)))


def _log_beta_pdf(x, a, b):
    if not 0.0 < x < 1.0:
        return -math.inf
    return float((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - betaln(a, b))


def _log_betaprime_pdf(x, a, b):
    if x <= 0.0:
        return -math.inf
    return float((a - 1.0) * math.log(x) - (a + b) * math.log1p(x) - betaln(a, b))


def _branch_log_density(branch, coef, psi2, kappa2_local):
    """Joint log density of one hierarchy: coef | psi2, psi2 | kappa2, kappa2.

    ``psi2`` is the conditional Gaussian variance layer (xi2_j or
    lambda_j), ``kappa2_local`` the third layer (absent when c = inf).
    """
    out = _log_normal_pdf(coef, psi2)
    if math.isinf(branch.c):
        out += _log_gamma_pdf(psi2, branch.a, branch.a * branch.kappa2 / 2.0)
    else:
        if kappa2_local is None:
            raise ValueError("finite-c hierarchy requires the kappa2_j layer")
        out += _log_gamma_pdf(psi2, branch.a, branch.a * np.asarray(kappa2_local) / 2.0)
        out += _log_gamma_pdf(kappa2_local, branch.c, branch.c / branch.kappa2)
    if branch.learn_a:
        out += _log_beta_pdf(2.0 * branch.a, branch.alpha_a, branch.beta_a)
    if branch.learn_c:
        out += _log_beta_pdf(2.0 * branch.c, branch.alpha_c, branch.beta_c)
    if branch.learn_phi:
        out += _log_betaprime_pdf(branch.phi, branch.c, branch.a)
    if branch.learn_kappa:
        out += _log_gamma_pdf(branch.kappa2, branch.d1, branch.d2)
    return out


def log_prior_density(config, beta, sqrt_theta, scales=None, sigma2=None, indicators=None, pi=None):
    """Joint log density of all active prior layers at the given point.

    ``scales`` is a dict of latent scale arrays: for the triple gamma
    family the keys are ``xi2``/``kappa2_xi`` (variance branch) and
    ``lam``/``kappa2_tau`` (mean branch); for the Student-t slab,
    ``ss_tau2``, ``ss_xi2``, ``ss_lambda2``, ``ss_kappa2``.  Values
    outside the support return -inf; numerical failures raise.
    """
    config = validate(config)
    beta = np.asarray(beta, dtype=float)
    sqrt_theta = np.asarray(sqrt_theta, dtype=float)
    scales = dict(scales or {})
    if config.kind == "ridge":
        var_b = config.tau * (sigma2 if config.scale_by_sigma2 else 1.0)
        var_t = config.tau_beta * (sigma2 if config.scale_by_sigma2 else 1.0)
        return _log_normal_pdf(sqrt_theta, var_b) + _log_normal_pdf(beta, var_t)
    if config.kind == "inverse-gamma":
        theta = sqrt_theta**2
        if np.any(theta <= 0.0):
            return -math.inf
        # density of theta_j; the signed square root carries a factor |2 sqrt_theta|
        out = float(
            np.sum(
                config.s0 * math.log(config.S0)
                - gammaln(config.s0)
                - (config.s0 + 1.0) * np.log(theta)
                - config.S0 / theta
            )
        )
        return out + _log_normal_pdf(beta, config.beta_var)
    if config.kind == "triple-gamma":
        out = _branch_log_density(config.variance, sqrt_theta, scales.get("xi2"), scales.get("kappa2_xi"))
        out += _branch_log_density(config.mean, beta, scales.get("lam"), scales.get("kappa2_tau"))
        return out
    # spike and slab
    if indicators is None:
        raise ValueError("spike-and-slab prior density requires indicators")
    delta, gamma = (np.asarray(v, dtype=int) for v in indicators)
    if np.any((delta == 0) & (gamma == 1)):
        return -math.inf
    if np.any(beta[delta == 0] != 0.0) or np.any(sqrt_theta[gamma == 0] != 0.0):
        return -math.inf
    out = log_indicator_prior_mass(config, delta, gamma, pi=pi)
    if config.slab == "gaussian":
        if sigma2 is None:
            raise ValueError("gaussian slab density requires sigma2")
        out += _log_normal_pdf(beta[delta == 1], sigma2 * config.slab_scale_beta)
        out += _log_normal_pdf(sqrt_theta[gamma == 1], sigma2 * config.slab_scale_theta)
    elif config.slab == "student-t":
        if sigma2 is None:
            raise ValueError("student-t slab density requires sigma2")
        lam2 = scales["ss_lambda2"]
        kap2 = scales["ss_kappa2"]
        tau2 = np.asarray(scales["ss_tau2"], dtype=float)
        xi2 = np.asarray(scales["ss_xi2"], dtype=float)
        out += _log_normal_pdf(beta[delta == 1], sigma2 * lam2 / tau2[delta == 1])
        out += _log_normal_pdf(sqrt_theta[gamma == 1], sigma2 * kap2 / xi2[gamma == 1])
        out += _log_gamma_pdf(tau2, config.a_tau, config.a_tau)
        out += _log_gamma_pdf(xi2, config.a_xi, config.a_xi)
        out += _log_gamma_pdf(lam2, config.a_lambda, config.a_lambda)
        out += _log_gamma_pdf(kap2, config.a_kappa, config.a_kappa)
    return out


def log_indicator_prior_mass(config, delta, gamma, pi=None):
    """Log prior mass of an indicator configuration.

    With fixed probabilities this is the product of the three-outcome
    masses; under the Beta hyperpriors the probabilities are integrated
    out in closed form, leaving Beta-function ratios of the category
    counts.
    """
    delta = np.asarray(delta, dtype=int)
    gamma = np.asarray(gamma, dtype=int)
    if np.any((delta == 0) & (gamma == 1)):
        return -math.inf
    n_d = int(np.sum(gamma))
    n_f = int(np.sum(delta * (1 - gamma)))
    n_0 = delta.shape[0] - n_d - n_f
    if pi is not None:
        pi_d, pi_g = pi
        return (
            n_f * math.log(pi_d) + n_0 * math.log1p(-pi_d)
            + n_d * math.log(pi_g) + (n_f + n_0) * math.log1p(-pi_g)
        )
    if config.pi_fixed is not None:
        pi_d, pi_g = config.pi_fixed
        return (
            n_f * math.log(pi_d) + n_0 * math.log1p(-pi_d)
            + n_d * math.log(pi_g) + (n_f + n_0) * math.log1p(-pi_g)
        )
    out = betaln(config.a0_delta + n_f, config.b0_delta + n_0) - betaln(config.a0_delta, config.b0_delta)
    out += betaln(config.a0_gamma + n_d, config.b0_gamma + n_f + n_0) - betaln(config.a0_gamma, config.b0_gamma)
    return float(out)


def marginal_scale_density(config, x):
    """Marginal prior density of sqrt_theta_j implied by a continuous config.

    For the triple gamma family with finite c this is the closed-form
    U-function density; for c = inf with fixed global scale it is the
    same expression evaluated through the double gamma limit via the
    F-representation equivalence (a finite-c density cannot represent it,
    so this raises for infinite c).
    """
    config = validate(config)
    if config.kind == "ridge":
        return math.exp(_log_normal_pdf(np.asarray([x]), config.tau))
    if config.kind != "triple-gamma" or math.isinf(config.c_xi):
        raise ValueError("closed-form marginal density requires a finite-c triple gamma")
    return math.exp(
        log_marginal_sqrt_theta_density(x, config.a_xi, config.c_xi, config.variance.phi)
    )
