"""Linear-Gaussian state-space primitives for random-walk TVP regressions.

The model, in its centered form, is

    beta_t = beta_{t-1} + w_t,      w_t ~ N(0, Q),   Q = diag(theta_1..theta_p)
    y_t    = x_t beta_t + eps_t,    eps_t ~ N(0, sigma2_t)

with beta_0 ~ N(beta, Q).  The non-centered form factors location and scale
out of the path,

    btil_t = btil_{t-1} + wtil_t,   wtil_t ~ N(0, I),   btil_0 ~ N(0, I)
    y_t    = x_t beta + x_t diag(sqrt_theta) btil_t + eps_t,

and the two are connected by beta_{jt} = beta_j + sqrt_theta_j * btil_{jt}.

This module provides the exact Kalman filter and smoother, one-step
predictive moments, and two exact joint samplers of the latent path:
forward-filtering backward-sampling (FFBS) and a one-shot banded-Cholesky
solve of the full path posterior (AWOL).  All covariance updates use the
Joseph form so that near-zero innovation variances stay numerically PSD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky_banded, solve_banded

__all__ = [
    "TimeSeriesData",
    "TVPParams",
    "FilterResult",
    "SmootherResult",
    "FilterDivergedError",
    "kalman_filter",
    "kalman_smoother",
    "ffbs_draw",
    "awol_draw",
    "one_step_predictive",
    "path_precision_banded",
    "centered_from_noncentered",
    "noncentered_from_centered",
]

SIGMA2_FLOOR = 1e-12
DIFFUSE_SCALE = 1e5

_PARAMETRIZATIONS = ("centered", "noncentered")


class FilterDivergedError(ArithmeticError):
    """Raised when a filter recursion produces a non-finite or invalid state.

    Carries the time index at which the recursion broke down and, for
    covariance failures, the offending matrix.
    """

    def __init__(self, message, t=None, matrix=None):
        super().__init__(message)
        self.t = t
        self.matrix = matrix


@dataclass(frozen=True)
class TimeSeriesData:
    """Observed univariate response and regressor matrix over T time points.

    Parameters
    ----------
    y : ndarray, shape (T,)
        Response series.  Missing values are rejected.
    X : ndarray, shape (T, p)
        Regressors; row t enters the observation equation at time t.  The
        first column may be an intercept but need not be.
    labels : list of str, optional
        One name per regressor column.
    """

    y: np.ndarray
    X: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"incompatible shapes y{y.shape}, X{X.shape}")
        if y.shape[0] < 2:
            raise ValueError("need at least T=2 observations")
        if X.shape[1] < 1:
            raise ValueError("need at least one regressor column")
        if not np.all(np.isfinite(y)):
            bad = int(np.flatnonzero(~np.isfinite(y))[0])
            raise ValueError(f"non-finite response at t={bad + 1} (missing data is not supported)")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise ValueError(f"non-finite regressor at t={bad[0] + 1}, column {bad[1] + 1}")
        labels = self.labels
        if labels is None:
            labels = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        else:
            labels = tuple(str(l) for l in labels)
            if len(labels) != X.shape[1]:
                raise ValueError(f"{len(labels)} labels for {X.shape[1]} regressors")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class TVPParams:
    """Static parameters of a TVP regression.

    ``sqrt_theta`` holds the signed scales; the innovation variances are
    their squares, so theta_j >= 0 always.  ``sigma2`` is either a scalar
    (homoscedastic) or a length-T vector of per-period variances.
    """

    beta: np.ndarray
    sqrt_theta: np.ndarray
    sigma2: object

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        sqrt_theta = np.atleast_1d(np.asarray(self.sqrt_theta, dtype=float))
        if beta.shape != sqrt_theta.shape or beta.ndim != 1:
            raise ValueError("beta and sqrt_theta must be 1-d and equally long")
        sigma2 = np.asarray(self.sigma2, dtype=float)
        if sigma2.ndim > 1:
            raise ValueError("sigma2 must be a scalar or a 1-d per-period vector")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(sqrt_theta)) and np.all(np.isfinite(sigma2))):
            raise ValueError("non-finite parameter value")
        if np.any(sigma2 < SIGMA2_FLOOR):
            raise ValueError(f"sigma2 below floor {SIGMA2_FLOOR:g}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sqrt_theta", sqrt_theta)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def p(self):
        return self.beta.shape[0]

    @property
    def theta(self):
        return self.sqrt_theta**2

    def sigma2_per_t(self, T):
        """Per-period observation variances as a length-T vector."""
        s = self.sigma2
        if s.ndim == 0:
            return np.full(T, float(s))
        if s.shape[0] != T:
            raise ValueError(f"sigma2 has length {s.shape[0]}, expected {T}")
        return s


@dataclass
class FilterResult:
    """Filtered moments, one-step predictive moments and the log-likelihood.

    ``means[t]`` and ``covs[t]`` are the moments of the state at time t
    given data up to t (row 0 holds the initial distribution).  The
    predictive arrays refer to y_t given data up to t-1.
    """

    means: np.ndarray
    covs: np.ndarray
    pred_mean: np.ndarray
    pred_var: np.ndarray
    log_likelihood: float
    parametrization: str = "centered"


@dataclass
class SmootherResult:
    """Marginal posterior moments of the state path given all data."""

    means: np.ndarray
    covs: np.ndarray
    parametrization: str = "centered"


def _check_parametrization(parametrization):
    if parametrization not in _PARAMETRIZATIONS:
        raise ValueError(f"parametrization must be one of {_PARAMETRIZATIONS}")


def _design_and_offset(params, data, parametrization):
    """Per-period design rows, observation offsets and state innovation diag."""
    if parametrization == "centered":
        H = data.X
        offset = np.zeros(data.T)
        q_diag = params.theta
        m0 = params.beta.copy()
        P0_diag = params.theta
    else:
        H = data.X * params.sqrt_theta[None, :]
        offset = data.X @ params.beta
        q_diag = np.ones(params.p)
        m0 = np.zeros(params.p)
        P0_diag = np.ones(params.p)
    return H, offset, q_diag, m0, P0_diag


def kalman_filter(params, data, parametrization="centered", diffuse_init=False):
    """Exact Kalman filter for the TVP regression in either parametrization.

    Returns a :class:`FilterResult` whose log-likelihood is the exact
    Gaussian log p(y | params).  The state prediction covariance at each
    step is P_{t-1|t-1} + Q.  The measurement update uses the Joseph form,
    which keeps covariances PSD even for innovation variances near zero.

    ``diffuse_init`` replaces the model-implied initial covariance with
    1e5 * I.  This is supported for completeness but not recommended when
    overfitting is a concern, and is off by default.
    """
    _check_parametrization(parametrization)
    if params.p != data.p:
        raise ValueError("parameter dimension does not match regressor count")
    T, p = data.T, data.p
    H, offset, q_diag, m0, P0_diag = _design_and_offset(params, data, parametrization)
    s2 = params.sigma2_per_t(T)

    means = np.empty((T + 1, p))
    covs = np.empty((T + 1, p, p))
    pred_mean = np.empty(T)
    pred_var = np.empty(T)

    m = m0
    P = np.diag(P0_diag.copy() if not diffuse_init else np.full(p, DIFFUSE_SCALE))
    means[0] = m
    covs[0] = P
    eye = np.eye(p)
    loglik = 0.0
    for t in range(1, T + 1):
        P_pred = P + np.diag(q_diag)
        h = H[t - 1]
        Ph = P_pred @ h
        S = float(h @ Ph) + s2[t - 1]
        yhat = float(h @ m) + offset[t - 1]
        if not (np.isfinite(S) and S > 0.0):
            raise FilterDivergedError(f"invalid predictive variance at t={t}", t=t)
        v = data.y[t - 1] - yhat
        K = Ph / S
        m = m + K * v
        IKH = eye - np.outer(K, h)
        P = IKH @ P_pred @ IKH.T + np.outer(K, K) * s2[t - 1]
        P = 0.5 * (P + P.T)
        if not np.all(np.isfinite(m)):
            raise FilterDivergedError(f"non-finite filtered mean at t={t}", t=t)
        dmin = P.diagonal().min()
        if not np.isfinite(dmin) or dmin < -1e-8:
            raise FilterDivergedError(
                f"filtered covariance lost positive semi-definiteness at t={t}", t=t, matrix=P.copy()
            )
        pred_mean[t - 1] = yhat
        pred_var[t - 1] = S
        loglik += -0.5 * (np.log(2.0 * np.pi * S) + v * v / S)
        means[t] = m
        covs[t] = P
    if not np.isfinite(loglik):
        raise FilterDivergedError("non-finite log-likelihood", t=T)
    return FilterResult(means, covs, pred_mean, pred_var, float(loglik), parametrization)


def _gain_and_cond_cov(filter_result, q_diag):
    """Backward quantities shared by the smoother and FFBS.

    For each t, the one-step state prediction is P_pred = P_t + Q and the
    backward gain is C_t = P_t P_pred^{-1}.  A pseudo-inverse fallback
    covers exactly singular predictions (theta_j = 0 in the centered form).
    """
    covs = filter_result.covs
    n = covs.shape[0]
    p = covs.shape[1]
    Q = np.diag(q_diag)
    gains = np.empty((n - 1, p, p))
    cond_covs = np.empty((n - 1, p, p))
    for t in range(n - 1):
        P = covs[t]
        P_pred = P + Q
        try:
            c, low = cho_factor(P_pred)
            C = cho_solve((c, low), P).T
        except np.linalg.LinAlgError:
            C = P @ np.linalg.pinv(P_pred, hermitian=True)
        gains[t] = C
        V = P - C @ P_pred @ C.T
        cond_covs[t] = 0.5 * (V + V.T)
    return gains, cond_covs


def kalman_smoother(params, data, parametrization="centered", diffuse_init=False):
    """Marginal posterior moments p(state_t | y_{1:T}) for all t = 0..T.

    Rauch-Tung-Striebel backward pass on top of :func:`kalman_filter`.
    """
    fr = kalman_filter(params, data, parametrization, diffuse_init)
    q_diag = params.theta if parametrization == "centered" else np.ones(params.p)
    gains, _ = _gain_and_cond_cov(fr, q_diag)
    n = fr.means.shape[0]
    means = fr.means.copy()
    covs = fr.covs.copy()
    Q = np.diag(q_diag)
    for t in range(n - 2, -1, -1):
        C = gains[t]
        P_pred = fr.covs[t] + Q
        means[t] = fr.means[t] + C @ (means[t + 1] - fr.means[t])
        V = fr.covs[t] + C @ (covs[t + 1] - P_pred) @ C.T
        covs[t] = 0.5 * (V + V.T)
    return SmootherResult(means, covs, parametrization)


def _psd_sqrt(V):
    """Matrix square root of a PSD matrix, tolerant of tiny negative eigs."""
    try:
        return np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        w, U = np.linalg.eigh(V)
        w = np.clip(w, 0.0, None)
        return U * np.sqrt(w)[None, :]


def ffbs_draw(rng, params, data, parametrization="centered", size=None, diffuse_init=False):
    """One exact joint draw of the state path by forward filter, backward sample.

    Returns an array of shape (p, T+1), column t holding the state at time
    t; with ``size=n`` an (n, p, T+1) stack of independent draws sharing
    one forward pass.
    """
    _check_parametrization(parametrization)
    fr = kalman_filter(params, data, parametrization, diffuse_init)
    q_diag = params.theta if parametrization == "centered" else np.ones(params.p)
    gains, cond_covs = _gain_and_cond_cov(fr, q_diag)
    n_draw = 1 if size is None else int(size)
    Tn = fr.means.shape[0]
    p = params.p
    out = np.empty((n_draw, Tn, p))
    L = _psd_sqrt(fr.covs[-1])
    out[:, -1, :] = fr.means[-1][None, :] + rng.standard_normal((n_draw, p)) @ L.T
    roots = [_psd_sqrt(cond_covs[t]) for t in range(Tn - 1)]
    for t in range(Tn - 2, -1, -1):
        C = gains[t]
        mean = fr.means[t][None, :] + (out[:, t + 1, :] - fr.means[t][None, :]) @ C.T
        out[:, t, :] = mean + rng.standard_normal((n_draw, p)) @ roots[t].T
    paths = np.swapaxes(out, 1, 2)
    return paths[0] if size is None else paths


def path_precision_banded(params, data, parametrization="noncentered"):
    """Banded posterior precision and linear term of the stacked state path.

    The path posterior given (params, y) is Gaussian with a block
    tridiagonal precision; blocks are p x p, so the matrix is banded with
    bandwidth p.  Returns ``(ab, b, active)`` where ``ab`` is the lower
    banded storage (p+1 rows) of the precision over the active state
    coordinates, ``b`` the linear term, and ``active`` the indices of
    active coordinates (in the centered form, coordinates with theta_j = 0
    are deterministic and excluded).
    """
    _check_parametrization(parametrization)
    T, p = data.T, data.p
    s2 = params.sigma2_per_t(T)
    if parametrization == "noncentered":
        active = np.arange(p)
        H = data.X * params.sqrt_theta[None, :]
        resid = data.y - data.X @ params.beta
        q_inv = np.ones(p)
        init_prec = np.ones(p)
        init_lin = np.zeros(p)
    else:
        active = np.flatnonzero(params.theta > 0.0)
        if active.size == 0:
            raise ValueError("centered path with all theta_j = 0 is deterministic")
        inactive = np.setdiff1d(np.arange(p), active)
        H = data.X[:, active]
        resid = data.y - data.X[:, inactive] @ params.beta[inactive]
        q_inv = 1.0 / params.theta[active]
        init_prec = q_inv
        init_lin = q_inv * params.beta[active]
    k = active.size
    n = k * (T + 1)
    ab = np.zeros((k + 1, n))
    b = np.zeros(n)
    abv = ab.reshape(k + 1, T + 1, k)
    bv = b.reshape(T + 1, k)
    # random-walk prior: diagonal blocks accumulate Q^{-1} from the initial
    # law and each adjacent transition; off-diagonal blocks are -Q^{-1}
    abv[0, 0] += init_prec
    bv[0] += init_lin
    abv[0, :T] += q_inv
    abv[0, 1:] += q_inv
    abv[k, :T] = -q_inv
    # observations: rank-one blocks H_t' H_t / sigma2_t on the diagonal
    w = 1.0 / s2
    Hw = H * w[:, None]
    for r in range(k):
        abv[r, 1:, : k - r] += Hw[:, r:] * H[:, : k - r]
    bv[1:] += Hw * resid[:, None]
    return ab, b, active


def _solve_lower_banded_T(cb, rhs):
    """Solve L' u = rhs for L given in lower banded Cholesky storage."""
    bw = cb.shape[0] - 1
    n = cb.shape[1]
    ub = np.zeros_like(cb)
    for m in range(bw + 1):
        ub[bw - m, m:] = cb[m, : n - m] if m else cb[0]
    return solve_banded((0, bw), ub, rhs)


def awol_draw(rng, params, data, parametrization="noncentered", size=None):
    """Joint path draw via one banded Cholesky solve of the path precision.

    Same distribution as :func:`ffbs_draw`; all T+1 states are drawn in a
    single all-without-a-loop (AWOL) linear solve, which is O(T p^3) and
    vectorizes well for long series.
    """
    _check_parametrization(parametrization)
    T, p = data.T, data.p
    ab, b, active = path_precision_banded(params, data, parametrization)
    cb = cholesky_banded(ab, lower=True)
    half = solve_banded((ab.shape[0] - 1, 0), cb, b)
    mean = _solve_lower_banded_T(cb, half)
    n_draw = 1 if size is None else int(size)
    noise = rng.standard_normal((b.shape[0], n_draw))
    dev = _solve_lower_banded_T(cb, noise)
    flat = mean[:, None] + dev
    k = active.size
    paths = np.empty((n_draw, p, T + 1))
    if parametrization == "centered":
        paths[:] = params.beta[None, :, None]
    sub = flat.reshape(T + 1, k, n_draw)
    for i, j in enumerate(active):
        paths[:, j, :] = sub[:, i, :].T
    return paths[0] if size is None else paths


def one_step_predictive(params, data, t):
    """Gaussian mean and variance of y_t given y_{1:t-1} under the model.

    ``t`` is 1-based; t=1 returns the prior-implied predictive.  Exactly
    the prediction-step moments of the Kalman filter, so summing the log
    densities over t recovers the filter log-likelihood.
    """
    if not 1 <= t <= data.T:
        raise ValueError(f"t must be in 1..{data.T}")
    mean, var = predictive_moments_batch(
        params.beta[None, :],
        params.sqrt_theta[None, :],
        params.sigma2_per_t(data.T)[None, :t],
        data.X,
        data.y,
        t,
    )
    return float(mean[0]), float(var[0])


def predictive_moments_batch(beta, sqrt_theta, sigma2, X, y, t):
    """One-step predictive moments of y_t for a batch of parameter draws.

    Vectorized centered Kalman filter over M parameter vectors sharing the
    same data; used by predictive-score evaluation.  ``beta`` and
    ``sqrt_theta`` are (M, p); ``sigma2`` is (M,) or (M, t).  Returns
    (mean, var), each (M,), of y_t given y_{1:t-1}.
    """
    beta = np.asarray(beta, dtype=float)
    sqrt_theta = np.asarray(sqrt_theta, dtype=float)
    M, p = beta.shape
    sigma2 = np.asarray(sigma2, dtype=float)
    if sigma2.ndim == 1:
        sigma2 = np.broadcast_to(sigma2[:, None], (M, t)).copy()
    theta = sqrt_theta**2
    m = beta.copy()
    P = np.zeros((M, p, p))
    idx = np.arange(p)
    P[:, idx, idx] = theta
    eye = np.eye(p)[None, :, :]
    for s in range(1, t + 1):
        P_pred = P.copy()
        P_pred[:, idx, idx] += theta
        h = X[s - 1]
        Ph = P_pred @ h
        S = Ph @ h + sigma2[:, s - 1]
        yhat = m @ h
        if s == t:
            return yhat, S
        v = y[s - 1] - yhat
        K = Ph / S[:, None]
        m = m + K * v[:, None]
        IKH = eye - K[:, :, None] * h[None, None, :]
        P = IKH @ P_pred @ np.swapaxes(IKH, 1, 2) + (
            K[:, :, None] * K[:, None, :] * sigma2[:, s - 1, None, None]
        )
        P = 0.5 * (P + np.swapaxes(P, 1, 2))
    raise AssertionError("unreachable")


def centered_from_noncentered(path_tilde, beta, sqrt_theta):
    """Map a standardized path to the centered one: beta_j + sqrt_theta_j * btil_jt."""
    return beta[:, None] + sqrt_theta[:, None] * path_tilde


def noncentered_from_centered(path, beta, sqrt_theta, floor=1e-14):
    """Invert the location-scale path map; scales below ``floor`` are rejected.

    Division by a vanishing sqrt_theta_j is reported via ValueError so the
    caller can resample the scale instead of propagating garbage.
    """
    small = np.abs(sqrt_theta) < floor
    if np.any(small):
        raise ValueError(f"sqrt_theta below back-transform floor for coordinates {np.flatnonzero(small)}")
    return (path - beta[:, None]) / sqrt_theta[:, None]
