"""Shared statistical machinery for the test suite.

Everything here is an *oracle-side* tool: two-sample tests, goodness-of-fit
helpers, dense joint-Gaussian conditioning for state-space checks, and the
successive-conditional sampler-validation harness.  None of it reuses the
code paths it is meant to check.
"""

import math

import numpy as np
from scipy import stats

from sparsetvp import statespace as ss
from sparsetvp.evaluation import effective_sample_size


def dense_joint_posterior(params, data, parametrization):
    """Brute-force moments of the stacked state path given all data.

    Builds the full p(T+1)-dimensional prior covariance of the path from
    the random-walk structure, conditions on y by dense linear algebra,
    and returns (means (T+1, p), full covariance, log-likelihood).
    """
    T, p = data.T, data.p
    if parametrization == "centered":
        q = params.theta
        mu0 = params.beta
        H = data.X
        off = np.zeros(T)
    else:
        q = np.ones(p)
        mu0 = np.zeros(p)
        H = data.X * params.sqrt_theta
        off = data.X @ params.beta
    n = p * (T + 1)
    mu = np.tile(mu0, T + 1)
    Sig = np.zeros((n, n))
    for t in range(T + 1):
        for s in range(T + 1):
            Sig[t * p:(t + 1) * p, s * p:(s + 1) * p] = np.diag(q) * (1 + min(t, s))
    A = np.zeros((T, n))
    for t in range(1, T + 1):
        A[t - 1, t * p:(t + 1) * p] = H[t - 1]
    R = np.diag(params.sigma2_per_t(T))
    Sy = A @ Sig @ A.T + R
    Szy = Sig @ A.T
    resid = data.y - off - A @ mu
    K = np.linalg.solve(Sy, Szy.T).T
    mpost = mu + K @ resid
    Vpost = Sig - K @ Szy.T
    sign, logdet = np.linalg.slogdet(Sy)
    ll = -0.5 * (T * np.log(2 * np.pi) + logdet + resid @ np.linalg.solve(Sy, resid))
    return mpost.reshape(T + 1, p), Vpost, float(ll)


def energy_two_sample_test(X, Y, n_perm=199, seed=0, max_each=2000):
    """Permutation p-value of the two-sample energy statistic.

    Subsamples each side to ``max_each`` points, precomputes the pooled
    distance matrix once and evaluates every permutation through matrix
    products, so hundreds of permutations stay cheap.
    """
    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    if len(X) > max_each:
        X = X[rng.choice(len(X), max_each, replace=False)]
    if len(Y) > max_each:
        Y = Y[rng.choice(len(Y), max_each, replace=False)]
    n, m = len(X), len(Y)
    Z = np.vstack([X, Y])
    sq = np.sum(Z**2, axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T), 0.0))
    total = D.sum()

    def stat_from_mask(mask_x):
        ux = mask_x.astype(float)
        bx = float(ux @ D @ ux)
        by = float((1 - ux) @ D @ (1 - ux))
        cross = total - bx - by
        nn = ux.sum()
        mm = len(Z) - nn
        e = cross / (nn * mm) - bx / (nn * nn) - by / (mm * mm)
        return (nn * mm / (nn + mm)) * e

    base_mask = np.zeros(n + m, dtype=bool)
    base_mask[:n] = True
    observed = stat_from_mask(base_mask)
    count = 1
    for _ in range(n_perm):
        perm = rng.permutation(n + m)
        mask = np.zeros(n + m, dtype=bool)
        mask[perm[:n]] = True
        if stat_from_mask(mask) >= observed:
            count += 1
    return count / (n_perm + 1)


def ks_pvalue(x, y_or_cdf):
    """Two-sample or one-sample Kolmogorov-Smirnov p-value."""
    if callable(y_or_cdf):
        return float(stats.kstest(np.asarray(x, dtype=float), y_or_cdf).pvalue)
    return float(stats.ks_2samp(np.asarray(x, dtype=float), np.asarray(y_or_cdf, dtype=float)).pvalue)


def chi2_uniform_pvalue(values, n_cells):
    """Chi-square goodness of fit of integer draws against uniform {0..n-1}."""
    values = np.asarray(values, dtype=int)
    counts = np.bincount(values, minlength=n_cells)
    return float(stats.chisquare(counts).pvalue)


def geweke_z_scores(prior_stats, chain_stats, names=None):
    """Successive-conditional comparison: z-scores of tracked means.

    ``prior_stats`` holds iid prior-ancestral evaluations of the tracked
    functions (rows = replications); ``chain_stats`` the successive-
    conditional chain evaluations.  The chain-side standard error uses the
    initial-monotone-sequence effective sample size per component.
    """
    P = np.asarray(prior_stats, dtype=float)
    C = np.asarray(chain_stats, dtype=float)
    out = {}
    for j in range(P.shape[1]):
        mp = P[:, j].mean()
        vp = P[:, j].var(ddof=1) / P.shape[0]
        col = C[:, j]
        if np.allclose(col, col[0]):
            ess = len(col)
        else:
            ess = effective_sample_size(col)
        mc = col.mean()
        vc = col.var(ddof=1) / max(ess, 2.0)
        z = (mc - mp) / math.sqrt(vp + vc)
        name = names[j] if names is not None else f"g{j}"
        out[name] = float(z)
    return out


def run_geweke(
    rng,
    data_template,
    make_prior_state,
    sweep,
    redraw_data,
    track,
    n_chain=20000,
    n_prior=20000,
    thin=1,
):
    """Generic successive-conditional validation loop.

    ``make_prior_state(rng)`` draws a full state from the prior;
    ``redraw_data(rng, state)`` returns a fresh response vector given the
    state; ``sweep(rng, state, data)`` runs one transition; ``track``
    maps a state to a tuple of tracked scalars.
    """
    prior_stats = np.array([track(make_prior_state(rng)) for _ in range(n_prior)])
    st = make_prior_state(rng)
    chain_stats = []
    X = data_template.X
    labels = data_template.labels
    for i in range(n_chain):
        y = redraw_data(rng, st)
        data = ss.TimeSeriesData(y, X, labels)
        sweep(rng, st, data)
        if i % thin == 0:
            chain_stats.append(track(st))
    return prior_stats, np.array(chain_stats)


def iact(x):
    """Integrated autocorrelation time via the package ESS estimate."""
    x = np.asarray(x, dtype=float)
    return len(x) / effective_sample_size(x)


def marginal_scale_cdf(a, c, phi, xs):
    """CDF of the triple gamma marginal |scale| density at the points xs.

    Quadrature of the closed-form density with a substitution flattening
    the origin spike; values are for the folded (absolute-value) law.
    """
    from scipy.integrate import quad

    from sparsetvp.special import marginal_sqrt_theta_density

    dens = lambda x: marginal_sqrt_theta_density(x, a, c, phi)
    two_a = 2.0 * a
    spike = lambda s: dens(s ** (1.0 / two_a)) * (s ** (1.0 / two_a)) / (two_a * s)
    prev = 1e-9
    acc = quad(spike, 1e-300, prev**two_a, epsabs=0.0, epsrel=1e-9, limit=300)[0]
    out = []
    for x in np.sort(np.asarray(xs, dtype=float)):
        acc += quad(dens, prev, x, epsabs=0.0, epsrel=1e-9, limit=300)[0]
        out.append(acc)
        prev = x
    return 2.0 * np.asarray(out)


def folded_cdf_distance(draws, a, c, phi, n_quantiles=49):
    """Max |ECDF - CDF| of |draws| against the marginal scale law."""
    x = np.abs(np.asarray(draws, dtype=float))
    grid = np.quantile(x, np.linspace(0.02, 0.98, n_quantiles))
    cdf_vals = marginal_scale_cdf(a, c, phi, grid)
    ecdf = np.searchsorted(np.sort(x), grid, side="right") / x.shape[0]
    return float(np.abs(cdf_vals - ecdf).max())
