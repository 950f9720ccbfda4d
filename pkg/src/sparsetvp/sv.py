"""AR(1) stochastic volatility block via the auxiliary mixture sampler.

The log variance h_t follows

    h_t | h_{t-1} ~ N(mu + phi (h_{t-1} - mu), sigma2_eta),   |phi| < 1,

with stationary initial h_0.  Residuals e_t from the host equation enter
through log(e_t^2 + OFFSET) = h_t + nu_t, where the log chi-square(1)
noise nu_t is replaced by its ten-component Gaussian mixture
approximation; conditional on the mixture indicators the whole h path is
drawn in one banded solve.  Parameter updates: mu conjugate Gaussian,
phi by Metropolis-Hastings from its near-conjugate Gaussian proposal
against the Beta prior on (phi+1)/2, sigma2_eta from a GIG conditional
under its gamma prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky_banded, solve_banded

from sparsetvp.special import sample_gig_raw

__all__ = [
    "SVState",
    "OFFSET",
    "MIX_PROBS",
    "MIX_MEANS",
    "MIX_VARS",
    "sv_sweep",
    "sv_prior_draw",
    "sv_forecast_variance",
    "sv_simulate_mixture_residuals",
]

OFFSET = 1e-8

# ten-component Gaussian mixture approximation of the log chi-square(1)
# distribution (Omori, Chib, Shephard and Nakajima, 2007)
MIX_PROBS = np.array(
    [0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115]
)
MIX_MEANS = np.array(
    [1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000]
)
MIX_VARS = np.array(
    [0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342]
)


@dataclass
class SVState:
    """Latent log-volatility path and AR(1) parameters."""

    h: np.ndarray              # (T+1,), includes h_0
    mu: float
    phi: float
    sigma2_eta: float
    indicators: np.ndarray     # (T,) mixture component per period
    phi_accepts: list = field(default_factory=lambda: [0, 0])

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise ValueError("phi must lie in (-1, 1)")
        if self.sigma2_eta <= 0.0:
            raise ValueError("sigma2_eta must be positive")

    @classmethod
    def initial(cls, T, log_sigma2):
        return cls(
            h=np.full(T + 1, float(log_sigma2)),
            mu=float(log_sigma2),
            phi=0.9,
            sigma2_eta=0.1,
            indicators=np.full(T, 4, dtype=np.int64),
        )

    def to_dict(self):
        return {
            "h": self.h.tolist(),
            "mu": self.mu,
            "phi": self.phi,
            "sigma2_eta": self.sigma2_eta,
            "indicators": self.indicators.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["h"], dtype=float),
            d["mu"],
            d["phi"],
            d["sigma2_eta"],
            np.asarray(d["indicators"], dtype=np.int64),
        )


def _draw_indicators(rng, ystar, h):
    resid = ystar - h[1:]
    # posterior component probabilities per period
    logp = (
        np.log(MIX_PROBS)[None, :]
        - 0.5 * np.log(MIX_VARS)[None, :]
        - 0.5 * (resid[:, None] - MIX_MEANS[None, :]) ** 2 / MIX_VARS[None, :]
    )
    logp -= logp.max(axis=1, keepdims=True)
    prob = np.exp(logp)
    prob /= prob.sum(axis=1, keepdims=True)
    u = rng.random(resid.shape[0])
    return (u[:, None] > np.cumsum(prob, axis=1)).sum(axis=1)


def _draw_h_path(rng, ystar, ind, mu, phi, s2, T):
    """Joint draw of (h_0..h_T) from the tridiagonal Gaussian conditional."""
    w_trans = 1.0 / s2
    diag = np.empty(T + 1)
    lin = np.empty(T + 1)
    diag[0] = (1.0 - phi**2) * w_trans + phi**2 * w_trans
    lin[0] = mu * (1.0 - phi**2) * w_trans - phi * mu * (1.0 - phi) * w_trans
    diag[1:T] = (1.0 + phi**2) * w_trans
    diag[T] = w_trans
    lin[1:] = mu * (1.0 - phi) * w_trans
    lin[1:T] -= phi * mu * (1.0 - phi) * w_trans
    v = MIX_VARS[ind]
    m = MIX_MEANS[ind]
    diag[1:] += 1.0 / v
    lin[1:] += (ystar - m) / v
    ab = np.zeros((2, T + 1))
    ab[0] = diag
    ab[1, :T] = -phi * w_trans
    cb = cholesky_banded(ab, lower=True)
    half = solve_banded((1, 0), cb, lin)
    # transpose solve for the mean and one more for the noise
    ub = np.zeros_like(cb)
    ub[1] = cb[0]
    ub[0, 1:] = cb[1, :T]
    mean = solve_banded((0, 1), ub, half)
    noise = solve_banded((0, 1), ub, rng.standard_normal(T + 1))
    return mean + noise


def sv_sweep(rng, state, residuals, sigma_prior):
    """One update of the SV block given host-equation residuals.

    Mutates and returns ``state``; the observation variances are
    exp(state.h[1:]).  The fixed offset in log(e^2 + OFFSET) guards
    exact-zero residuals.
    """
    resid = np.asarray(residuals, dtype=float)
    T = resid.shape[0]
    ystar = np.log(resid**2 + OFFSET)
    state.indicators = _draw_indicators(rng, ystar, state.h)
    state.h = _draw_h_path(
        rng, ystar, state.indicators, state.mu, state.phi, state.sigma2_eta, T
    )
    h = state.h
    x0 = h[0]
    # mu | phi, sigma2_eta, h  (Gaussian conjugate)
    phi = state.phi
    s2 = state.sigma2_eta
    one_m = 1.0 - phi
    prec = (1.0 - phi**2) / s2 + T * one_m**2 / s2 + 1.0 / sigma_prior.var_mu
    lin = (
        x0 * (1.0 - phi**2) / s2
        + one_m * float(np.sum(h[1:] - phi * h[:-1])) / s2
        + sigma_prior.mu0 / sigma_prior.var_mu
    )
    state.mu = lin / prec + rng.standard_normal() / math.sqrt(prec)
    # phi | mu, sigma2_eta, h: Gaussian kernel proposal, MH-corrected for the
    # Beta prior and the stationary initial-state term
    x = h - state.mu
    sxx = float(x[:-1] @ x[:-1])
    sxy = float(x[:-1] @ x[1:])
    var_q = s2 / sxx
    mean_q = sxy / sxx
    for _ in range(8):
        prop = mean_q + math.sqrt(var_q) * rng.standard_normal()
        if -1.0 < prop < 1.0:
            break
    else:
        prop = state.phi

    def log_extra(ph):
        return (
            (sigma_prior.a_phi - 1.0) * math.log1p(ph)
            + (sigma_prior.b_phi - 1.0) * math.log1p(-ph)
            + 0.5 * math.log1p(-ph**2)
            - 0.5 * (1.0 - ph**2) * x[0] ** 2 / s2
        )

    state.phi_accepts[1] += 1
    if math.log(rng.random()) < log_extra(prop) - log_extra(state.phi):
        state.phi = prop
        state.phi_accepts[0] += 1
    # sigma2_eta | mu, phi, h  (GIG under the gamma prior)
    phi = state.phi
    x = h - state.mu
    sse = (1.0 - phi**2) * x[0] ** 2 + float(np.sum((x[1:] - phi * x[:-1]) ** 2))
    state.sigma2_eta = sample_gig_raw(rng, -0.5 * T, 1.0 / sigma_prior.B_sigma, max(sse, 1e-14))
    return state


def sv_prior_draw(rng, T, sigma_prior):
    """Ancestral draw of the SV block from its prior."""
    mu = sigma_prior.mu0 + math.sqrt(sigma_prior.var_mu) * rng.standard_normal()
    phi = 2.0 * rng.beta(sigma_prior.a_phi, sigma_prior.b_phi) - 1.0
    sigma2_eta = rng.gamma(0.5, 2.0 * sigma_prior.B_sigma)
    h = np.empty(T + 1)
    h[0] = mu + math.sqrt(sigma2_eta / (1.0 - phi**2)) * rng.standard_normal()
    eta = math.sqrt(sigma2_eta) * rng.standard_normal(T)
    for t in range(1, T + 1):
        h[t] = mu + phi * (h[t - 1] - mu) + eta[t - 1]
    ind = (rng.random((T, 1)) > np.cumsum(MIX_PROBS)[None, :]).sum(axis=1)
    return SVState(h, mu, phi, sigma2_eta, ind)


def sv_simulate_mixture_residuals(rng, state):
    """Residuals drawn from the auxiliary mixture observation model.

    Used by sampler-validation harnesses: the sweep targets the mixture
    approximation of log chi-square(1), so exactness checks must generate
    data from the same auxiliary model.
    """
    T = state.h.shape[0] - 1
    ind = (rng.random((T, 1)) > np.cumsum(MIX_PROBS)[None, :]).sum(axis=1)
    ystar = state.h[1:] + MIX_MEANS[ind] + np.sqrt(MIX_VARS[ind]) * rng.standard_normal(T)
    sign = np.where(rng.random(T) < 0.5, -1.0, 1.0)
    return sign * np.sqrt(np.maximum(np.exp(ystar) - OFFSET, 1e-300))


def sv_forecast_variance(rng, state, size=None):
    """One-step-ahead observation-variance draw(s) exp(h_{T+1}).

    h_{T+1} = mu + phi (h_T - mu) + sigma_eta * noise; with sigma2_eta = 0
    the forecast is exactly exp(mu + phi (h_T - mu)).
    """
    center = state.mu + state.phi * (state.h[-1] - state.mu)
    sd = math.sqrt(state.sigma2_eta)
    if size is None:
        return math.exp(center + sd * rng.standard_normal())
    return np.exp(center + sd * rng.standard_normal(int(size)))
