"""Conway-Maxwell-Poisson distributions and executable checks of their characterizations."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CmpError,
    DivergenceError,
    ExistenceError,
    InfiniteInformationError,
    NumericRangeError,
    ParameterError,
    PseudoParametersError,
    RSPViolationError,
    TailTooHeavyError,
    WindowMassError,
    ZeroMassError,
)
from .pmf import DEFAULT_TOL, TruncatedPmf, point_mass  # noqa: E402
from .kernels import (  # noqa: E402
    CmbParams,
    CmnbParams,
    CmpParams,
    EcompParams,
    NormalizerResult,
    SeriesSpec,
    cmb_pmf,
    cmnb_pmf,
    cmp_moments,
    cmp_pmf,
    ecomp_pmf,
    geometric_pmf,
    hyper_poisson_series,
    lerch_series,
    log_normalizer_asymptotic,
    log_normalizer_series,
    normalizer_asymptotic,
    normalizer_series,
    poisson_pmf,
    power_series_pmf,
    rng,
    sample,
    zeta_series,
)
from .transform import ComTypeResult, PowerSum, com_expectation, com_moments, com_type, power_sum  # noqa: E402
from .characterizations import (  # noqa: E402
    ClosureReport,
    LimitCurve,
    SteinResidual,
    TvInterval,
    a_sequence,
    closure_test,
    conditional_given_sum,
    convolve,
    fit_lambda,
    limit_cmb_to_cmp,
    limit_cmnb_to_cmp,
    rao_rubin_gap,
    stein_residual,
    tv_distance,
)
from .information import (  # noqa: E402
    FisherReport,
    StamGap,
    com_fisher_info,
    com_fisher_info_direct,
    is_rsp,
    renyi_entropy,
    score_and_fisher,
    stam_gap,
    tsallis_entropy,
)
from .dpcp import SIGN_THRESHOLD, DpcpParams, MinModulus, dcp_sample, dpcp_reconstruct, dpcp_recover, pgf_eval, pgf_min_modulus  # noqa: E402
from .queue import CapSaturationWarning, QueueConfig, SteadyStateEstimate, queue_exact_steady_state, queue_simulate  # noqa: E402
