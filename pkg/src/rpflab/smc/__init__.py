from .bandwidth import (
    SCHEDULES,
    BandwidthSchedule,
    ExponentialDecay,
    Harmonic,
    NoJitter,
    RuleOfThumb,
    Silverman1d,
    WestShrinkage,
    compute_alpha,
    gaussian_kde_mise_exact,
    gaussian_kde_mise_mc,
    gaussian_mise_bandwidth,
    mise_optimal_bandwidth,
    regularize,
    rule_of_thumb_alpha,
)
from .ensemble import (
    ParticleEnsemble,
    effective_sample_size,
    evidence_variance,
    normalize_weights,
    weighted_mean_cov,
)
from .filter import (
    Always,
    EssThreshold,
    FilterTrace,
    Never,
    Periodic,
    ResamplingPolicy,
    StepDiagnostics,
    filter_step,
    policy_from_ratio,
    run_filter,
)
from .resampling import multinomial_resample, systematic_resample
from .streams import KeyedDraws, KeyedStream
