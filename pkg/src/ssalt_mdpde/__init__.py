"""Robust minimum density power divergence estimation for simple step-stress tests.

Exponential lifetimes, a log-linear stress link, cumulative exposure between
the two stress levels and Type-I censoring at the end of the test.
"""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticCovariance,
    j_beta_a0,
    j_beta_a1,
    j_beta_cross,
    j_matrix,
    sandwich_covariance,
    xi_beta_a0,
    xi_beta_a1,
    xi_vector,
)
from .characteristics import (
    CharacteristicEstimate,
    characteristic_gradient,
    confidence_intervals,
    delta_variance,
    mttf,
    quantile,
    reliability,
)
from .data import (
    DatasetFile,
    ExperimentData,
    electronic_components,
    format_dataset,
    parse_dataset,
    read_dataset,
    write_dataset,
)
from .errors import (
    ConfigError,
    DomainError,
    NonexistenceError,
    NumericalError,
    OracleError,
    SingularMatrixError,
    SSALTError,
)
from .estimator import FitConfig, FitResult, fit_mdpde, fit_mle_closed_form, fit_path
from .loss import dpd_h1, dpd_h2, dpd_objective, neg_log_likelihood
from .model import (
    SIMULATION_PARAMS,
    SIMULATION_PROFILE,
    RateParams,
    RegressionParams,
    StressProfile,
    inverse_cdf,
    lifetime_cdf,
    lifetime_pdf,
    rates_from_regression,
    survival_at_end,
)
from .simulation import (
    ContaminationSpec,
    StudyConfig,
    StudyResult,
    coverage_study,
    mse_study,
    sample_experiment,
    study_config_from_dict,
)
