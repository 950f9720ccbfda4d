"""Multivariate composition: TVP Cholesky-SV and TVP-VAR-SV models.

Both models decompose a q-variate system into q univariate TVP equations
through the triangular representation Sigma_t = A_t D_t A_t'.  In the
Cholesky-SV model, equation i regresses y_it on the observed responses of
equations 1..i-1 (no intercept) with its own SV block, so the equations
are independent given the data and can be fit concurrently.  In the
TVP-VAR-SV model all equations share the lagged-response design and
equation i additionally loads on the residuals of equations 1..i-1;
those residuals are recomputed from the latest earlier-equation states
within each sweep (systematic scan order 1..q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import solve_triangular

from sparsetvp import gibbs
from sparsetvp import statespace as ss
from sparsetvp import sv as svmod
from sparsetvp.priors import SigmaPrior, validate

__all__ = [
    "MultiTimeSeries",
    "fit_cholesky_sv",
    "fit_tvp_var",
    "fit_sv_only",
    "reconstruct_sigma_t",
    "var_design",
]


@dataclass(frozen=True)
class MultiTimeSeries:
    """q-variate response panel with optional VAR lag order."""

    Y: np.ndarray
    names: tuple = None
    lags: int = 0

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim != 2 or Y.shape[1] < 2:
            raise ValueError("Y must be (T, q) with q >= 2")
        if not np.all(np.isfinite(Y)):
            raise ValueError("non-finite entries in Y")
        if Y.shape[0] <= self.lags + 1:
            raise ValueError("need T > lags + 1")
        names = self.names or tuple(f"y{i+1}" for i in range(Y.shape[1]))
        if len(names) != Y.shape[1]:
            raise ValueError("one name per response column required")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "names", tuple(names))

    @property
    def T(self):
        return self.Y.shape[0]

    @property
    def q(self):
        return self.Y.shape[1]


def fit_sv_only(y, sigma_prior=None, n_burn=500, n_draws=500, thin=1, seed=0):
    """Pure stochastic-volatility fit for an equation with no regressors."""
    sigma_prior = sigma_prior or SigmaPrior(kind="sv")
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    rng = np.random.default_rng(seed)
    state = svmod.SVState.initial(T, math.log(max(float(np.var(y)), 1e-8)))
    rec = {
        "sv_mu": np.empty(n_draws),
        "sv_phi": np.empty(n_draws),
        "sv_sigma2_eta": np.empty(n_draws),
        "sv_h_last": np.empty(n_draws),
        "sigma2_t": np.empty((n_draws, T)),
    }
    kept = 0
    for it in range(n_burn + n_draws * thin):
        svmod.sv_sweep(rng, state, y, sigma_prior)
        if it < n_burn or (it - n_burn) % thin != thin - 1:
            continue
        rec["sv_mu"][kept] = state.mu
        rec["sv_phi"][kept] = state.phi
        rec["sv_sigma2_eta"][kept] = state.sigma2_eta
        rec["sv_h_last"][kept] = state.h[-1]
        rec["sigma2_t"][kept] = np.exp(state.h[1:])
        kept += 1
    cfg = gibbs.fingerprint(sigma_prior, {"n_burn": n_burn, "n_draws": n_draws, "thin": thin})
    return gibbs.DrawsStore(rec, seed, cfg, thin, n_burn, {"prior_kind": "sv-only"})


def fit_cholesky_sv(
    data,
    priors=None,
    n_burn=500,
    n_draws=500,
    thin=1,
    seed=0,
    path_sampler="awol",
    store_paths=True,
    n_jobs=1,
):
    """Fit the triangular Cholesky-SV system equation by equation.

    Equation i (1-based) regresses y_it on y_{1t}..y_{i-1,t} with no
    intercept and an SV error.  Row priors are independent, so equations
    run concurrently with generators spawned from the master seed; the
    result list holds one DrawsStore per equation (the first is the pure
    SV fit).
    """
    q = data.q
    priors = _per_row(priors, q, default="triple-gamma")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(q)]

    def fit_eq(i):
        if i == 0:
            return fit_sv_only(data.Y[:, 0], SigmaPrior(kind="sv"), n_burn, n_draws, thin, seeds[0])
        eq_data = ss.TimeSeriesData(
            data.Y[:, i],
            data.Y[:, :i],
            labels=[f"{data.names[i]}~{data.names[j]}" for j in range(i)],
        )
        return gibbs.run_chain(
            eq_data, priors[i], SigmaPrior(kind="sv"), n_burn=n_burn, n_draws=n_draws,
            thin=thin, seed=seeds[i], path_sampler=path_sampler, store_paths=store_paths,
        )
    return Parallel(n_jobs=n_jobs)(delayed(fit_eq)(i) for i in range(q))


def reconstruct_sigma_t(B, D):
    """Covariance draws Sigma = A D A' with A = (I - B)^{-1}.

    ``B`` is (..., q, q) strictly lower triangular and ``D`` (..., q)
    positive diagonal entries.  The triangular inversion is exact
    (forward substitution), and the product is symmetric positive
    definite by construction.
    """
    B = np.asarray(B, dtype=float)
    D = np.asarray(D, dtype=float)
    q = B.shape[-1]
    if np.any(np.triu(B) != 0.0):
        raise ValueError("B must be strictly lower triangular")
    if np.any(D <= 0.0):
        raise ValueError("D entries must be strictly positive")
    lead = B.shape[:-2]
    Bf = B.reshape((-1, q, q))
    Df = D.reshape((-1, q))
    out = np.empty_like(Bf)
    eye = np.eye(q)
    for i in range(Bf.shape[0]):
        A = solve_triangular(eye - Bf[i], eye, lower=True, unit_diagonal=True)
        out[i] = (A * Df[i][None, :]) @ A.T
        out[i] = 0.5 * (out[i] + out[i].T)
    return out.reshape(lead + (q, q))


def var_design(data):
    """Shared VAR regressors x_t = (1, y_{t-1}', ..., y_{t-r}').

    Returns (X, Y_eff): X has T-r rows of length q*r + 1, aligned with
    the responses in Y_eff.
    """
    r = data.lags
    if r < 1:
        raise ValueError("VAR design requires lags >= 1")
    T, q = data.T, data.q
    rows = T - r
    X = np.empty((rows, q * r + 1))
    X[:, 0] = 1.0
    for lag in range(1, r + 1):
        X[:, 1 + (lag - 1) * q: 1 + lag * q] = data.Y[r - lag: T - lag]
    return X, data.Y[r:]


@dataclass
class _VarEquation:
    state: object
    sweep: callable
    data_y: np.ndarray
    rng: np.random.Generator


def fit_tvp_var(
    data,
    priors=None,
    n_burn=500,
    n_draws=500,
    thin=1,
    seed=0,
    path_sampler="awol",
    store_paths=False,
    sigma_kind="sv",
):
    """Fit the TVP-VAR-SV model by triangular equation-wise estimation.

    Equation i's design is the shared x_t augmented with the residuals of
    equations 1..i-1, recomputed each sweep from their latest states.
    Row generators are spawned independently, so re-running with a
    different prior on row i reproduces rows < i draw for draw.
    """
    X, Yd = var_design(data)
    q = data.q
    rows = X.shape[0]
    priors = _per_row(priors, q, default="triple-gamma")
    sigma_prior = SigmaPrior(kind=sigma_kind) if sigma_kind == "sv" else SigmaPrior()
    rngs = gibbs.spawn_rngs(seed, q)
    eqs = []
    for i in range(q):
        design = np.hstack([X, np.zeros((rows, i))])
        labels = [f"{data.names[i]}~const"] + [
            f"{data.names[i]}~{data.names[j % q]}.l{j // q + 1}" for j in range(q * data.lags)
        ] + [f"{data.names[i]}~resid.{data.names[j]}" for j in range(i)]
        eq_data = ss.TimeSeriesData(Yd[:, i], design, labels=labels)
        prior = validate(priors[i])
        st = gibbs.initial_state(eq_data, prior, sigma_prior, path_sampler=path_sampler)
        eqs.append({"data_y": Yd[:, i], "prior": prior, "state": st, "labels": labels})
    p_common = X.shape[1]
    rec = [
        {
            "beta": np.empty((n_draws, p_common + i)),
            "sqrt_theta": np.empty((n_draws, p_common + i)),
            "sigma2": np.empty(n_draws),
            **({"path": np.empty((n_draws, p_common + i, rows + 1))} if store_paths else {}),
            **({"sigma2_t": np.empty((n_draws, rows))} if sigma_kind == "sv" else {}),
        }
        for i in range(q)
    ]
    resid = np.zeros((rows, q))
    kept = 0
    total = n_burn + n_draws * thin
    for it in range(total):
        for i in range(q):
            eq = eqs[i]
            design = np.hstack([X, resid[:, :i]])
            eq_data = ss.TimeSeriesData(eq["data_y"], design, labels=eq["labels"])
            st = eq["state"]
            st.adapting = it < n_burn
            gibbs._SWEEPS[eq["prior"].kind](rngs[i], st, eq_data)
            path_c = ss.centered_from_noncentered(st.path, st.beta, st.sqrt_theta) \
                if eq["prior"].kind != "inverse-gamma" else st.path
            fitted = np.einsum("tp,pt->t", design, path_c[:, 1:])
            resid[:, i] = eq["data_y"] - fitted
        if it >= n_burn and (it - n_burn) % thin == thin - 1:
            for i in range(q):
                st = eqs[i]["state"]
                rec[i]["beta"][kept] = st.beta
                rec[i]["sqrt_theta"][kept] = st.sqrt_theta
                rec[i]["sigma2"][kept] = st.sigma2 if st.sv is None else math.exp(st.sv.mu)
                if sigma_kind == "sv":
                    rec[i]["sigma2_t"][kept] = np.exp(st.sv.h[1:])
                if store_paths:
                    pc = ss.centered_from_noncentered(st.path, st.beta, st.sqrt_theta) \
                        if eqs[i]["prior"].kind != "inverse-gamma" else st.path
                    rec[i]["path"][kept] = pc
            kept += 1
    stores = []
    for i in range(q):
        cfg = gibbs.fingerprint(eqs[i]["prior"], sigma_prior, {"n_burn": n_burn, "n_draws": n_draws,
                                                               "thin": thin, "lags": data.lags})
        meta = {"labels": eqs[i]["labels"], "prior_kind": eqs[i]["prior"].kind,
                "equation": i, "lags": data.lags}
        stores.append(gibbs.DrawsStore(rec[i], seed, cfg, thin, n_burn, meta))
    return stores


def _per_row(priors, q, default):
    if priors is None:
        priors = default
    if isinstance(priors, (str, dict)) or not isinstance(priors, (list, tuple)):
        return [priors] * q
    if len(priors) != q:
        raise ValueError(f"expected {q} per-row priors")
    return list(priors)
