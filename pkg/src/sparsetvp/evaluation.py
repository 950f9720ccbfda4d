"""Out-of-sample predictive scoring, coefficient classification, diagnostics.

The one-step log predictive density at time t is approximated by the
mixture of Gaussian one-step predictives obtained from the Kalman
prediction step at each posterior draw of the model parameters, averaged
in log-sum-exp form.  Rolling evaluation refits the posterior from
scratch for every window, which matches the definition of
p(y_t | y^{t-1}) exactly and is embarrassingly parallel across windows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.special import logsumexp

from sparsetvp import gibbs
from sparsetvp import statespace as ss
from sparsetvp.priors import SigmaPrior, validate

__all__ = [
    "PredictiveScore",
    "ClassificationTable",
    "lpds_one_step",
    "rolling_lpds",
    "multivariate_lpds",
    "classify_from_indicators",
    "classify_by_threshold",
    "effective_sample_size",
]


@dataclass(frozen=True)
class PredictiveScore:
    """Per-period log predictive density and its running cumulative sum."""

    t: int
    lpds: float
    cumulative: float
    equation: int = None


@dataclass
class ClassificationTable:
    """Per-coefficient posterior probabilities of zero / fixed / dynamic."""

    labels: list
    probs: np.ndarray  # (p, 3) columns ordered zero, fixed, dynamic

    COLUMNS = ("zero", "fixed", "dynamic")

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != 3:
            raise ValueError("probs must be (p, 3)")
        if np.any(probs < -1e-12) or np.any(probs > 1.0 + 1e-12):
            raise ValueError("probabilities out of range")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("classification rows must sum to one")
        self.probs = probs

    def argmax(self):
        return [self.COLUMNS[i] for i in np.argmax(self.probs, axis=1)]

    def rows(self):
        for label, row in zip(self.labels, self.probs):
            yield label, float(row[0]), float(row[1]), float(row[2])


def lpds_one_step(beta, sqrt_theta, sigma2, data, t):
    """Log of the draw-averaged Gaussian one-step predictive of y_t.

    ``beta`` and ``sqrt_theta`` are (M, p) posterior draws given
    y_{1:t-1}; ``sigma2`` is (M,) for homoscedastic draws or (M, t) with
    per-period variances whose last column is the variance forecast for
    period t.  Evaluated by log-sum-exp so simultaneous underflow of all
    mixture components cannot produce a premature -inf.
    """
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    sqrt_theta = np.atleast_2d(np.asarray(sqrt_theta, dtype=float))
    M = beta.shape[0]
    mean, var = ss.predictive_moments_batch(beta, sqrt_theta, np.asarray(sigma2, dtype=float), data.X, data.y, t)
    y_t = data.y[t - 1]
    logdens = -0.5 * (np.log(2.0 * math.pi * var) + (y_t - mean) ** 2 / var)
    return float(logsumexp(logdens) - math.log(M))


def _window_draws(data, t, prior, sigma_prior, n_burn, n_draws, thin, seed, path_sampler):
    sub = ss.TimeSeriesData(data.y[: t - 1], data.X[: t - 1], data.labels)
    store = gibbs.run_chain(
        sub, prior, sigma_prior, n_burn=n_burn, n_draws=n_draws, thin=thin, seed=seed,
        path_sampler=path_sampler,
    )
    return store


def _score_window(data, t, prior, sigma_prior, n_burn, n_draws, thin, seed, path_sampler):
    store = _window_draws(data, t, prior, sigma_prior, n_burn, n_draws, thin, seed, path_sampler)
    beta = store.draws["beta"]
    sqrt_theta = store.draws["sqrt_theta"]
    if "sigma2_t" in store.draws:
        M = beta.shape[0]
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        h_next = (
            store.draws["sv_mu"]
            + store.draws["sv_phi"] * (store.draws["sv_h_last"] - store.draws["sv_mu"])
            + np.sqrt(store.draws["sv_sigma2_eta"]) * rng.standard_normal(M)
        )
        sigma2 = np.hstack([store.draws["sigma2_t"], np.exp(h_next)[:, None]])
    else:
        sigma2 = store.draws["sigma2"]
    return lpds_one_step(beta, sqrt_theta, sigma2, data, t)


def rolling_lpds(
    data,
    prior,
    sigma_prior=None,
    t0=None,
    t_end=None,
    n_burn=300,
    n_draws=300,
    thin=1,
    seed=0,
    path_sampler="awol",
    n_jobs=1,
):
    """One-step predictive scores for t = t0+1 .. t_end with full refits.

    The first t0 observations form the training sample of the first
    window; each later window refits on all data before its target.
    Window seeds are spawned deterministically from ``seed``, so results
    are independent of scheduling order.  Failed windows are recorded as
    missing (NaN) and excluded from the cumulative sum, which is then
    flagged in the returned scores.
    """
    prior = validate(prior)
    sigma_prior = sigma_prior or SigmaPrior()
    T = data.T
    t0 = t0 if t0 is not None else T // 2
    t_end = t_end if t_end is not None else T
    if not 1 <= t0 < t_end <= T:
        raise ValueError("need 1 <= t0 < t_end <= T")
    targets = list(range(t0 + 1, t_end + 1))
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(targets))]

    def one(t, sd):
        try:
            return _score_window(data, t, prior, sigma_prior, n_burn, n_draws, thin, sd, path_sampler)
        except Exception as exc:  # failed window recorded as missing
            warnings.warn(f"window t={t} failed: {exc}")
            return math.nan

    values = Parallel(n_jobs=n_jobs)(delayed(one)(t, sd) for t, sd in zip(targets, seeds))
    out = []
    cum = 0.0
    for t, v in zip(targets, values):
        if not math.isnan(v):
            cum += v
        out.append(PredictiveScore(t=t, lpds=v, cumulative=cum))
    return out


def multivariate_lpds(per_equation_scores):
    """Per-period totals across a triangular system's equations.

    Input: an iterable of score lists, one per equation, each covering the
    same targets.  The total for a period is the sum over equations;
    a missing equation score makes the total missing.
    """
    by_t = {}
    for scores in per_equation_scores:
        for s in scores:
            by_t.setdefault(s.t, []).append(s.lpds)
    n_eq = len(per_equation_scores)
    out = []
    cum = 0.0
    for t in sorted(by_t):
        vals = by_t[t]
        if len(vals) != n_eq or any(math.isnan(v) for v in vals):
            total = math.nan
        else:
            total = float(sum(vals))
            cum += total
        out.append(PredictiveScore(t=t, lpds=total, cumulative=cum))
    return out


def classify_from_indicators(delta_draws, gamma_draws, labels=None):
    """Posterior zero/fixed/dynamic probabilities from indicator draws."""
    delta = np.asarray(delta_draws, dtype=float)
    gamma = np.asarray(gamma_draws, dtype=float)
    if delta.shape != gamma.shape:
        raise ValueError("delta and gamma draws must share a shape")
    p_dyn = gamma.mean(axis=0)
    p_fix = (delta * (1.0 - gamma)).mean(axis=0)
    p_zero = 1.0 - p_dyn - p_fix
    probs = np.column_stack([p_zero, p_fix, p_dyn])
    labels = labels if labels is not None else [f"x{j+1}" for j in range(probs.shape[0])]
    return ClassificationTable(list(labels), probs)


def classify_by_threshold(xi2_draws, lam_draws, labels=None, threshold=0.5):
    """Thresholded classification for continuous-shrinkage draws.

    The per-draw shrinkage profile of a coefficient scale is
    rho = 1/(1 + v) where v is the conditional prior variance implied by
    the local scales (xi2_j for sqrt_theta, lambda_j for beta); the
    coefficient counts as included when rho < threshold.  Two stages
    mirror the indicator taxonomy: dynamic if the variance scale is
    included, otherwise fixed if the mean scale is included, else zero.
    """
    xi2 = np.asarray(xi2_draws, dtype=float)
    lam = np.asarray(lam_draws, dtype=float)
    rho_xi = 1.0 / (1.0 + xi2)
    rho_tau = 1.0 / (1.0 + lam)
    dyn = rho_xi < threshold
    fix = ~dyn & (rho_tau < threshold)
    p_dyn = dyn.mean(axis=0)
    p_fix = fix.mean(axis=0)
    probs = np.column_stack([1.0 - p_dyn - p_fix, p_fix, p_dyn])
    labels = labels if labels is not None else [f"x{j+1}" for j in range(probs.shape[0])]
    return ClassificationTable(list(labels), probs)


def effective_sample_size(x):
    """Initial-monotone-sequence estimate of the effective sample size.

    A constant sequence is flagged with a warning and returns the draw
    count, since its autocorrelation is undefined.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 100:
        raise ValueError("need at least 100 draws")
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        warnings.warn("constant sequence; effective sample size equals the draw count")
        return float(n)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f))[:n].real / n
    rho = acov / acov[0]
    m_max = (n - 1) // 2
    tau = -rho[0]  # pairs below start at lag 0, so rho_0 enters twice
    prev = math.inf
    for m in range(m_max):
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)  # enforce monotone decrease
        tau += 2.0 * pair
        prev = pair
    tau = max(tau, 1.0 / n)
    return float(n / tau)
