"""Exchange-rate risk adjustment of PDs and asset correlations."""
from .errors import (
    DegenerateThresholdError,
    DomainError,
    FxAdjustError,
    ModelValidityError,
    NoSolutionError,
)
from .model import (
    AdjustedPair,
    AssetProcess,
    BorrowerParams,
    DebtSpec,
    FxParams,
    PairParams,
    adjust_pair,
    adjusted_correlation,
    adjusted_pd,
    consistency_residual,
    default_threshold,
    fx_drift_for_unit_mean,
    homogeneous_adjusted_correlation,
    homogeneous_implied_pd,
    implied_vol_ratio,
    joint_default_probability,
    rho_star_gap,
    threshold_from_process,
)
from .numerics import (
    CorrMatrix3,
    bivariate_normal_cdf,
    cholesky3,
    make_stream,
    sample_std_normal_vec,
    std_normal_cdf,
    std_normal_quantile,
)
from .simulation import SimConfig, SimResult, simulate_gbm_paths, simulate_reduced, standard_error

__version__ = "0.1.0"
