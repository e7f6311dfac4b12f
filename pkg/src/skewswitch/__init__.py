"""Markov-switching skewed stochastic-volatility processes.

The process pairs a hidden finite Markov chain Q_t with an observed value
X_t updated by regime-dependent trend, volatility and skew functions:

    X_t = m_k(X_{t-1}) + sigma_k(X_{t-1}) * eps_t + A_k(X_{t-1}) * iota_t^2

with k the active regime and eps, iota independent standardized
innovations. The package simulates the pair (Q_t, X_t), evaluates its
exact regime-conditional transition densities, and verifies the stability
assumptions (irreducibility, aperiodicity, moment bounds, the tail drift
condition) together with their measurable consequences: geometric decay
of the distance to stationarity, geometric autocovariance decay, and
root-n Monte Carlo standard errors.
"""

from .errors import (
    ConfigError,
    DegeneratePathError,
    DegenerateTargetWarning,
    FourthMomentUndefinedError,
    GridTooSmallError,
    InsufficientReplicationsError,
    InvalidInitError,
    NegativeEntryError,
    NoDriftRegionError,
    NonFiniteValueError,
    NonStochasticRowError,
    PeriodicChainError,
    QuadratureNonConvergenceError,
    ReducibleChainError,
    RegimeOutOfRangeError,
    SkewSwitchError,
    TooFewBatchesError,
    ZeroXError,
)
from .markov import (
    RegimeSequence,
    StationaryDistribution,
    TransitionMatrix,
    is_irreducible,
    period,
    regime_frequencies,
    sample_chain,
    seed_record,
    stationary_distribution,
    validate_transition_matrix,
)
from .model import (
    DriftReport,
    InnovationMoments,
    InnovationSpec,
    ModelSpec,
    Regime,
    RegimeFunction,
    affine,
    affine_abs,
    analytic_tail_limits,
    check_assumption8,
    constant,
    default_magnitudes,
    drift_ratio,
    drift_summand,
    eval_regime,
    innovation_moments,
    saturating,
    weighted_drift_sum,
)
from .simulate import (
    DIVERGENCE_THRESHOLD,
    Ensemble,
    Path,
    StreamBundle,
    simulate_ensemble,
    simulate_path,
    step,
    streams_from_seed,
    write_path_csv,
)
from .density import (
    DEFAULT_QUAD,
    QuadratureSpec,
    SmallSetReport,
    fbar,
    gbar,
    interval_probability,
    normalization_integral,
    small_set_lower_bound,
    transition_cdf,
    transition_density,
    two_step_density,
)
from .ergodicity import (
    AutocovReport,
    ConvergenceReport,
    DriftConstants,
    autocov_decay,
    batch_means_mcse,
    conditional_v_expectation,
    distance_decay,
    estimate_drift_constants,
    kolmogorov_distance,
    mc_v_expectation,
)
from .config import RunConfig, load_config

__version__ = "0.1.0"
