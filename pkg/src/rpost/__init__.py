"""Robust pseudo-posterior inference via density-power down-weighting.

The tuning parameter ``alpha`` interpolates between ordinary Bayes
(alpha = 0, exact branch) and increasingly outlier-resistant inference:
each observation's log-likelihood contribution is replaced by a bounded
power-transformed term, so a contaminated point can shift the posterior
only so far.

Functional layers: model families, priors, the down-weighted likelihood,
posterior engines (grid quadrature and importance sampling), point and
predictive-density estimators, divergence functionals, and a replication
harness. ``RobustBayesDensity`` and ``RobustBayesRegressor`` wrap the
stack in scikit-learn estimator conventions.
"""

from .alpha_likelihood import (
    AlphaConfig,
    AlphaLikValue,
    alpha_modified_model_logdensity,
    alpha_modified_prior_logdensity,
    log_obs_normalizer,
    q_iid,
    q_inh,
    q_regression_beta,
)
from .divergences import (
    GridDensity,
    d_alpha_modified,
    divergence_grid,
    hellinger_sq,
    kld,
    kld_normal_closed,
    l1,
    t_variation,
)
from .errors import GridCoverageError, NumericalError
from .estimator_api import RobustBayesDensity, RobustBayesRegressor
from .estimators import (
    DensityEstimate,
    amrpe_discrete,
    arpde,
    erpde,
    erpe,
    hrpde,
    mrpde,
)
from .families import NormalLinearRegression, NormalLocation
from .posterior import (
    ProposalSpec,
    WeightedPosterior,
    discrete_posterior,
    grid_posterior,
    importance_sample,
    log_unnorm_posterior,
    merging_statistic,
    posterior_expectation,
    r_marginal_logdensity,
)
from .priors import (
    DiscretePrior,
    ImproperUniform,
    Jeffreys,
    NormalConjugate,
    load_discrete_prior,
)
from .simulate import (
    ExperimentSpec,
    ResultRow,
    ResultTable,
    gen_normal_contaminated,
    gen_regression_data,
    run_merging_diagnostic,
    run_normal_mean_kld,
    run_regression_bias_mse,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaConfig",
    "AlphaLikValue",
    "DensityEstimate",
    "DiscretePrior",
    "ExperimentSpec",
    "GridCoverageError",
    "GridDensity",
    "ImproperUniform",
    "Jeffreys",
    "NormalConjugate",
    "NormalLinearRegression",
    "NormalLocation",
    "NumericalError",
    "ProposalSpec",
    "ResultRow",
    "ResultTable",
    "RobustBayesDensity",
    "RobustBayesRegressor",
    "WeightedPosterior",
    "alpha_modified_model_logdensity",
    "alpha_modified_prior_logdensity",
    "amrpe_discrete",
    "arpde",
    "d_alpha_modified",
    "discrete_posterior",
    "divergence_grid",
    "erpde",
    "erpe",
    "gen_normal_contaminated",
    "gen_regression_data",
    "grid_posterior",
    "hellinger_sq",
    "hrpde",
    "importance_sample",
    "kld",
    "kld_normal_closed",
    "l1",
    "load_discrete_prior",
    "log_obs_normalizer",
    "log_unnorm_posterior",
    "merging_statistic",
    "mrpde",
    "posterior_expectation",
    "q_iid",
    "q_inh",
    "q_regression_beta",
    "r_marginal_logdensity",
    "run_merging_diagnostic",
    "run_normal_mean_kld",
    "run_regression_bias_mse",
    "t_variation",
]
