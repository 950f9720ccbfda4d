"""Synthetic data generation from the random-walk TVP regression model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sparsetvp.statespace import TimeSeriesData

__all__ = ["SimulationSpec", "SimulationResult", "simulate_tvp", "default_sparse_spec"]


@dataclass(frozen=True)
class SimulationSpec:
    """Configuration of a simulated TVP regression.

    ``theta`` are the innovation variances of the coefficient random
    walks; coefficients with theta_j = 0 stay constant at their drawn
    initial value.  ``sigma2`` may be a scalar or a dict
    ``{"sv": {"mu": ..., "phi": ..., "sigma2_eta": ...}}`` for a
    stochastic volatility error process.  ``intercept`` makes the first
    regressor the constant 1; the remaining regressors are iid standard
    normal.
    """

    T: int
    beta: tuple
    theta: tuple
    sigma2: object = 1.0
    intercept: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise ValueError("need T >= 2")
        if len(self.beta) != len(self.theta):
            raise ValueError("beta and theta must have equal length")
        if any(t < 0 for t in self.theta):
            raise ValueError("theta entries must be nonnegative")

    @property
    def p(self):
        return len(self.beta)


@dataclass
class SimulationResult:
    data: TimeSeriesData
    paths: np.ndarray          # (p, T+1) true coefficient paths
    sigma2_true: np.ndarray    # (T,) per-period observation variances
    spec: SimulationSpec


def simulate_tvp(spec):
    """Draw regressors, coefficient paths and responses; returns the truth.

    Deterministic in ``spec.seed``: paths are drawn with beta_0 ~
    N(beta, diag(theta)) followed by the random walk, and y_t = x_t
    beta_t + eps_t.
    """
    rng = np.random.default_rng(spec.seed)
    T, p = spec.T, spec.p
    X = rng.standard_normal((T, p))
    if spec.intercept:
        X[:, 0] = 1.0
    beta = np.asarray(spec.beta, dtype=float)
    theta = np.asarray(spec.theta, dtype=float)
    sd = np.sqrt(theta)
    paths = np.empty((p, T + 1))
    paths[:, 0] = beta + sd * rng.standard_normal(p)
    steps = sd[:, None] * rng.standard_normal((p, T))
    paths[:, 1:] = paths[:, 0:1] + np.cumsum(steps, axis=1)
    if isinstance(spec.sigma2, dict):
        sv = spec.sigma2["sv"]
        mu, phi, s2eta = float(sv["mu"]), float(sv["phi"]), float(sv["sigma2_eta"])
        h = np.empty(T + 1)
        h[0] = mu + math.sqrt(s2eta / (1.0 - phi**2)) * rng.standard_normal()
        for t in range(1, T + 1):
            h[t] = mu + phi * (h[t - 1] - mu) + math.sqrt(s2eta) * rng.standard_normal()
        sigma2_true = np.exp(h[1:])
    else:
        sigma2_true = np.full(T, float(spec.sigma2))
    y = np.einsum("tp,pt->t", X, paths[:, 1:]) + np.sqrt(sigma2_true) * rng.standard_normal(T)
    labels = ["const"] + [f"x{j}" for j in range(2, p + 1)] if spec.intercept else None
    data = TimeSeriesData(y, X, labels)
    return SimulationResult(data, paths, sigma2_true, spec)


def default_sparse_spec(seed=0):
    """The illustrative sparse configuration: one dynamic, one fixed, one zero."""
    return SimulationSpec(T=200, beta=(1.0, -0.5, 0.0), theta=(0.02, 0.0, 0.0), sigma2=1.0, seed=seed)
