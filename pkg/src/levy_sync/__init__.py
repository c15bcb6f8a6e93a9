"""levy-sync: coupled dissipative SDEs under symmetric alpha-stable noise.

A simulation library and CLI for the slow-fast reformulation of coupled
systems, stochastic averaging, and synchronization-persistence diagnostics,
with a Monte Carlo harness tuned for heavy-tailed statistics.
"""

__version__ = "0.1.0"

from .errors import (
    DivergenceError,
    FitError,
    HypothesisViolation,
    LevySyncError,
    MomentOrderError,
    NotRelaxed,
    ParseError,
    SeedMismatchError,
    ValidationError,
)
from .stable_noise import (
    Convention,
    LevyConstants,
    SeedKey,
    StableLaw,
    c1_constant,
    char_exponent,
    empirical_char_function,
    increment,
    levy_measure_constant,
    make_stream,
    sample_standard,
)
from .sde import (
    DriftField,
    NoisePath,
    PathGrid,
    SamplePath,
    default_step,
    euler_maruyama,
    generate_noise_path,
    holder_increment_estimate,
    ou_exact_path,
)
from .synchro import (
    CoupledSpec,
    DRIFT_LIBRARY,
    HypothesisCertificate,
    SlowFastState,
    auxiliary_drift,
    averaged_drift_exact,
    coupled_drift,
    fast_intensity,
    from_slowfast,
    frozen_fast_drift,
    make_drift,
    slow_intensity,
    slowfast_drift,
    to_slowfast,
    validate_hypotheses,
)
from .averaging import (
    EmpiricalMeasure,
    MixingEstimate,
    averaged_drift_mc,
    estimate_invariant_measure,
    mixing_rate,
    stationary_lp_moment,
)
from .stats import Estimate, median_of_means
from .mc import (
    ExperimentReport,
    MCConfig,
    ReportRow,
    Role,
    StationaryEstimate,
    attractor_diameter,
    averaging_convergence,
    delta_schedule,
    lp_error_at_time,
    moment_uniformity,
    stationary_marginal,
    synchronization_persistence,
)
from .plots import emit_plot
