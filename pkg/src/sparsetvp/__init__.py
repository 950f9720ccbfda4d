"""Sparse Bayesian time-varying-parameter models.

Shrinkage priors (ridge, Lasso, double/triple gamma, horseshoe) and
discrete spike-and-slab priors for variance selection in TVP regressions,
exact state-space samplers, stochastic volatility, multivariate
(Cholesky-SV and TVP-VAR-SV) composition, and out-of-sample predictive
scoring.
"""

from sparsetvp.statespace import (
    TimeSeriesData,
    TVPParams,
    FilterResult,
    FilterDivergedError,
    kalman_filter,
    kalman_smoother,
    ffbs_draw,
    awol_draw,
    one_step_predictive,
)
from sparsetvp.special import (
    GIGParams,
    TPBParams,
    sample_gig,
    conf_hypergeom_u,
    tpb_density,
    marginal_sqrt_theta_density,
    sample_shrinkage_hierarchy,
)
from sparsetvp.priors import (
    InverseGammaPrior,
    RidgePrior,
    TripleGammaPrior,
    SpikeSlabPrior,
    SigmaPrior,
    validate,
    log_prior_density,
)
from sparsetvp.gibbs import SamplerState, DrawsStore, run_chain
from sparsetvp.simulate import SimulationSpec, simulate_tvp

__version__ = "0.1.0"
