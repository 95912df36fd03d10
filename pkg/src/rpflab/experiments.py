"""Reproducible filtering scenarios and their CSV artifacts.

Every scenario is driven by an :class:`ExperimentConfig` and fans out over
replicates ``r = 0 .. replicates - 1`` with seed ``seed + r``. Within a
replicate the observation record and the filter draws come from separate
keyed streams of that seed, so all variants of a scenario filter the same
data and a run is a pure function of ``(config, seed)``.

Scenarios
---------
``exp_stationary``
    Constant hidden state observed in Gaussian noise; RPF, SIR and SIS
    traces with the exact Kalman curve and the bandwidth-induced
    saturation level as overlays. Optional noise quench.
``exp_shifted_prior``
    Same model with the prior mean shifted away from the data; measures
    how often the posterior variance collapses.
``exp_ess_spacing``
    Resampling times under an ESS threshold and the ratios of consecutive
    spacings.
``exp_logistic``
    Growth-rate estimation in the logistic map, noisy and oracle data.
``exp_lnas``
    Parameter estimation in the LNAS crop model, with a snapshot table.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .kalman import beta_crit, periodic_band, rpf_fixed_point
from .models import GaussianBelief, LnasModel, LogisticMapModel, StationaryLinearModel, simulate_observations
from .smc import (
    SCHEDULES,
    Always,
    EssThreshold,
    FilterTrace,
    Harmonic,
    KeyedStream,
    Never,
    NoJitter,
    Periodic,
    RuleOfThumb,
    Silverman1d,
    compute_alpha,
    run_filter,
)
from .weather import Weather, read_weather_csv, synthetic_weather

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ReplicateSummary",
    "SpacingReport",
    "Variant",
    "average_replicates",
    "exp_ess_spacing",
    "exp_lnas",
    "exp_logistic",
    "exp_shifted_prior",
    "exp_stationary",
    "kalman_reference",
    "load_weather",
    "plateau",
    "rmse_trace",
    "spacing_ratios",
    "synthetic_weather",
    "write_result",
    "write_summary_csv",
    "write_trace_csv",
]

POLICIES = ("always", "never", "ess", "periodic")
MODELS = ("stationary", "logistic", "lnas")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one scenario.

    Only the fields relevant to ``model`` are used. ``normalizer = None``
    means the RMSE is divided by the square root of the prior covariance
    trace of the estimated components.
    """

    model: str = "stationary"
    n_particles: int = 1000
    policy: str = "always"
    ess_crit: float = 0.5
    period: int = 2
    schedule: str = "rule-of-thumb"
    alpha_h: Optional[float] = None
    horizon: int = 1000
    replicates: int = 1
    seed: int = 0
    oracle_mode: bool = False
    normalizer: Optional[float] = None
    workers: int = 1
    # stationary model
    dim: int = 1
    ratio: float = 0.25
    prior_var: float = 1.0
    prior_shift: float = 1.0
    x0: float = 0.0
    quench_step: Optional[int] = None
    quench_ratio: Optional[float] = None
    # logistic map
    a_star: float = 3.33
    obs_noise: float = 0.1
    logistic_prior_mean: float = 3.0
    logistic_prior_var: float = 0.3
    # lnas
    weather: str = "synthetic"
    weather_seed: int = 0
    theta: tuple = (3.56, 0.625, 550.0)
    snapshot: int = 100
    benchmark_particles: Optional[int] = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}; choose from {', '.join(POLICIES)}")
        if self.schedule not in SCHEDULES:
            raise ConfigurationError(
                f"unknown schedule {self.schedule!r}; choose from {', '.join(sorted(SCHEDULES))}"
            )
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.n_particles < 2:
            raise ConfigurationError("n_particles must be >= 2")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.dim < 1 or self.prior_var <= 0 or self.ratio <= 0:
            raise ConfigurationError("dim, prior_var and ratio must be positive")
        if (self.quench_step is None) != (self.quench_ratio is None):
            raise ConfigurationError("quench_step and quench_ratio must be given together")
        if self.quench_ratio is not None and self.quench_ratio <= 0:
            raise ConfigurationError("quench_ratio must be positive")
        if not 0 < self.ess_crit < 1:
            raise ConfigurationError("ess_crit must lie strictly inside (0, 1)")
        if self.period < 1:
            raise ConfigurationError("period must be >= 1")
        if self.alpha_h is not None and not 0 < self.alpha_h < 1:
            raise ConfigurationError("alpha_h must lie in (0, 1)")
        if self.normalizer is not None and self.normalizer <= 0:
            raise ConfigurationError("normalizer must be positive")
        if len(self.theta) != 3:
            raise ConfigurationError("theta needs three values (RUE, gamma, mu_a)")
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        # constructing the policy validates its parameters
        self.policy_object()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def policy_object(self):
        if self.policy == "always":
            return Always()
        if self.policy == "never":
            return Never()
        if self.policy == "ess":
            return EssThreshold(self.ess_crit)
        return Periodic(self.period)

    def schedule_object(self):
        cls = SCHEDULES[self.schedule]
        if "alpha_h" in {f.name for f in dataclasses.fields(cls)}:
            return cls(alpha_h=self.alpha_h)
        return cls()

    def replicate_seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.replicates)]


@dataclass(frozen=True)
class Variant:
    """One filter configuration run on every replicate's data."""

    label: str
    policy: object
    schedule: object
    n_particles: Optional[int] = None


@dataclass
class ReplicateSummary:
    """Across-replicate statistics of one variant, per step (index 0 is step 1)."""

    rmse_mean: np.ndarray
    rmse_std: np.ndarray
    ess_mean: np.ndarray
    resampling_times: list = field(default_factory=list)
    mean_mean: Optional[np.ndarray] = None  # (n, d) average posterior mean
    sd_mean: Optional[np.ndarray] = None  # (n, d) average posterior sd
    rmse: Optional[np.ndarray] = None  # (replicates, n)

    @property
    def horizon(self) -> int:
        return len(self.rmse_mean)

    @property
    def plateau(self) -> float:
        return plateau(self.rmse_mean)


@dataclass
class SpacingReport:
    target: float  # 1 + beta_crit
    times: list  # resampling times per replicate
    ratios: list  # spacing ratios per replicate, index 0 is k = 2
    insufficient: list  # replicate indices with fewer than three events
    result: Optional["ExperimentResult"] = field(default=None, repr=False)

    def ratio_matrix(self, count: int) -> np.ndarray:
        """``(replicates, count)`` array of the first ``count`` ratios, NaN-padded."""
        out = np.full((len(self.ratios), count), np.nan)
        for i, r in enumerate(self.ratios):
            k = min(count, len(r))
            out[i, :k] = r[:k]
        return out


@dataclass
class ExperimentResult:
    name: str
    config: ExperimentConfig
    summaries: dict  # label -> ReplicateSummary
    traces: dict  # label -> list of FilterTrace
    truths: list  # per replicate, (n, d) or (d,)
    overlays: dict = field(default_factory=dict)  # name -> per-step array
    report: dict = field(default_factory=dict)
    table: list = field(default_factory=list)  # (parameter, statistic, value, std)
    components: Optional[tuple] = None
    normalizer: float = 1.0


# -- statistics ---------------------------------------------------------------


def rmse_trace(trace: FilterTrace, truth, normalizer: Optional[float] = None, components=None) -> np.ndarray:
    """Per-step ``sqrt(|mu_n - x_n|^2 + Tr Sigma_n)``.

    ``truth`` is either one state (broadcast over steps) or an ``(n, d)``
    trajectory. ``components`` restricts the error to a subset of
    coordinates, e.g. the static parameters of an augmented state.
    """
    idx = slice(None) if components is None else list(components)
    mean = trace.mean[:, idx]
    truth = np.asarray(truth, dtype=float)
    truth = truth[idx] if truth.ndim == 1 else truth[:, idx]
    if truth.shape[-1] != mean.shape[1] or (truth.ndim == 2 and len(truth) != len(mean)):
        raise ValueError(f"truth shape {truth.shape} does not match trace means {mean.shape}")
    cov = trace.cov[:, idx][:, :, idx]
    err = np.sum((mean - truth) ** 2, axis=1) + np.trace(cov, axis1=1, axis2=2)
    out = np.sqrt(err)
    return out if normalizer is None else out / normalizer


def plateau(values, fraction: float = 0.2) -> float:
    """Mean over the final ``fraction`` of the steps."""
    values = np.asarray(values, dtype=float)
    k = max(1, int(round(fraction * len(values))))
    return float(values[-k:].mean())


def average_replicates(traces, truths, normalizer=None, components=None) -> ReplicateSummary:
    """Pointwise mean and std of the RMSE (and ESS, posterior mean and sd)."""
    if len(traces) == 0:
        raise ValueError("no traces to average")
    if isinstance(truths, np.ndarray) and truths.ndim == 1 or len(truths) != len(traces):
        truths = [truths] * len(traces)
    horizons = {t.horizon for t in traces}
    if len(horizons) != 1:
        raise ValueError(f"traces have different lengths: {sorted(horizons)}")
    rmse = np.array([rmse_trace(t, x, normalizer, components) for t, x in zip(traces, truths)])
    ess = np.array([t.ess_norm for t in traces])
    means = np.array([t.mean for t in traces])
    sds = np.array([np.sqrt(np.clip(np.diagonal(t.cov, axis1=1, axis2=2), 0, None)) for t in traces])
    return ReplicateSummary(
        rmse_mean=rmse.mean(axis=0),
        rmse_std=rmse.std(axis=0),
        ess_mean=ess.mean(axis=0),
        resampling_times=[t.resampling_times for t in traces],
        mean_mean=means.mean(axis=0),
        sd_mean=sds.mean(axis=0),
        rmse=rmse,
    )


def kalman_reference(prior: GaussianBelief, observations, obs_covs):
    """Exact posteriors of the stationary model for every step.

    ``obs_covs`` is one ``(d, d)`` matrix per step. The posterior precision
    is the prior precision plus the running sum of observation precisions.
    Returns ``(means, covs)`` with shapes ``(n, d)`` and ``(n, d, d)``.
    """
    ys = np.asarray(observations, dtype=float).reshape(len(obs_covs), prior.dim)
    r_inv = np.linalg.inv(np.asarray(obs_covs, dtype=float))
    s0_inv = np.linalg.inv(prior.cov)
    info = s0_inv + np.cumsum(r_inv, axis=0)
    vec = s0_inv @ prior.mean + np.cumsum(np.einsum("nij,nj->ni", r_inv, ys), axis=0)
    covs = np.linalg.inv(info)
    covs = 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
    return np.einsum("nij,nj->ni", covs, vec), covs


def spacing_ratios(times) -> np.ndarray:
    """``(t_{k+1} - t_k) / (t_k - t_{k-1})`` for k = 2, 3, ..."""
    t = np.asarray(times, dtype=float)
    if len(t) < 3:
        return np.empty(0)
    gaps = np.diff(t)
    return gaps[1:] / gaps[:-1]


# -- replicate execution ------------------------------------------------------


def _data_seed(seed: int):
    return KeyedStream(seed).generator(0, "observations")


def _filter_job(job):
    model, obs, variant, n_particles, seed = job
    n = variant.n_particles or n_particles
    return run_filter(model, obs, n, variant.policy, variant.schedule, seed)


def _run_jobs(jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_filter_job, jobs))
    return [_filter_job(job) for job in jobs]


def _run_variants(config, models, observations, variants):
    """Run every variant on every replicate; results are folded in index order."""
    seeds = config.replicate_seeds()
    jobs = [
        (models[r], observations[r], v, config.n_particles, seeds[r]) for v in variants for r in range(len(seeds))
    ]
    results = _run_jobs(jobs, config.workers)
    out = {}
    for i, v in enumerate(variants):
        out[v.label] = results[i * len(seeds) : (i + 1) * len(seeds)]
    return out


def _summarize(traces_by_label, truths, normalizer, components=None):
    return {
        label: average_replicates(traces, truths, normalizer, components) for label, traces in traces_by_label.items()
    }


# -- stationary model ---------------------------------------------------------


def _stationary_model(config: ExperimentConfig) -> StationaryLinearModel:
    d = config.dim
    s0 = config.prior_var * np.eye(d)
    mu0 = np.full(d, config.x0 + config.prior_shift * np.sqrt(config.prior_var))
    R = config.ratio * config.prior_var * np.eye(d)
    quench_cov = None if config.quench_ratio is None else config.quench_ratio * config.prior_var * np.eye(d)
    return StationaryLinearModel(GaussianBelief(mu0, s0), R, config.quench_step, quench_cov)


def _stationary_variants(config: ExperimentConfig):
    policy = config.policy_object()
    schedule = config.schedule_object()
    if isinstance(schedule, NoJitter):
        schedule = RuleOfThumb()
    variants = [Variant("rpf", policy, schedule)]
    if config.policy != "never":
        variants.append(Variant("sir", policy, NoJitter()))
    variants.append(Variant("sis", Never(), NoJitter()))
    return variants


def _stationary_data(config: ExperimentConfig, model):
    x0 = np.full(config.dim, config.x0)
    obs = [
        simulate_observations(model, x0, config.horizon, _data_seed(s), config.oracle_mode).observations
        for s in config.replicate_seeds()
    ]
    return x0, obs


def _stationary_overlays(config, model, observations, x0, normalizer):
    obs_covs = np.array([model.obs_cov(n) for n in range(1, config.horizon + 1)])
    k_rmse, k_sd = [], []
    for ys in observations:
        means, covs = kalman_reference(model.prior, ys, obs_covs)
        tr = np.trace(covs, axis1=1, axis2=2)
        k_rmse.append(np.sqrt(np.sum((means - x0) ** 2, axis=1) + tr) / normalizer)
        k_sd.append(np.sqrt(tr))
    overlays = {
        "kalman_rmse": np.mean(k_rmse, axis=0),
        "kalman_sd": np.mean(k_sd, axis=0),
    }
    schedule = config.schedule_object()
    if not isinstance(schedule, (RuleOfThumb, Silverman1d)):
        return overlays
    alpha_h, _ = compute_alpha(schedule, 1, config.n_particles, config.dim)
    if config.policy == "always":
        level = []
        for R in obs_covs:
            cov, resid = rpf_fixed_point(alpha_h, R)
            level.append(np.sqrt(np.trace(cov) + np.trace(resid)))
        overlays["fixed_point_rmse"] = np.array(level) / normalizer
    elif config.policy == "periodic":
        lo, hi = zip(*(periodic_band(alpha_h, config.period, R) for R in obs_covs))
        overlays["band_lower"] = np.trace(np.array(lo), axis1=1, axis2=2)
        overlays["band_upper"] = np.trace(np.array(hi), axis1=1, axis2=2)
    return overlays


def exp_stationary(config: ExperimentConfig, variants=None) -> ExperimentResult:
    """RPF, SIR and SIS on the stationary model with analytic overlays.

    The default variants are ``rpf`` (configured policy and schedule),
    ``sir`` (same policy, no jitter) and ``sis`` (no resampling). Overlays
    are the replicate-averaged exact Kalman RMSE and posterior sd and,
    for a constant bandwidth, either the saturation level (policy
    ``always``) or the covariance-trace band (policy ``periodic``).
    """
    if config.model != "stationary":
        raise ConfigurationError("exp_stationary needs model = 'stationary'")
    model = _stationary_model(config)
    x0, observations = _stationary_data(config, model)
    normalizer = config.normalizer or float(np.sqrt(np.trace(model.prior.cov)))
    variants = variants or _stationary_variants(config)
    traces = _run_variants(config, [model] * config.replicates, observations, variants)
    truths = [x0] * config.replicates
    return ExperimentResult(
        name="stationary",
        config=config,
        summaries=_summarize(traces, truths, normalizer),
        traces=traces,
        truths=truths,
        overlays=_stationary_overlays(config, model, observations, x0, normalizer),
        normalizer=normalizer,
    )


def exp_shifted_prior(config: ExperimentConfig) -> ExperimentResult:
    """RPF versus SIR when the prior sits far from the data.

    Both use the configured policy; SIR drops the jitter. The report gives,
    per variant, the final posterior sd relative to the exact one and the
    fraction of replicates whose final sd fell below ``1e-3 sqrt(Sigma_0)``.
    """
    policy = config.policy_object()
    schedule = config.schedule_object()
    if isinstance(schedule, NoJitter):
        schedule = RuleOfThumb()
    variants = [Variant("rpf", policy, schedule), Variant("sir", policy, NoJitter())]
    result = exp_stationary(config, variants)
    result.name = "shifted-prior"
    # the exact posterior covariance does not depend on the data
    exact_sd = result.overlays["kalman_sd"][-1]
    floor = 1e-3 * np.sqrt(config.prior_var)
    for label, traces in result.traces.items():
        sd = np.sqrt(np.array([tr.cov_trace[-1] for tr in traces]))
        result.report[label] = {"sd_ratio_final": sd / exact_sd, "collapsed": sd < floor}
    return result


def exp_ess_spacing(config: ExperimentConfig) -> SpacingReport:
    """Resampling times of the configured filter and their spacing ratios.

    The target ratio is ``1 + beta_crit(ess_crit)`` for an ESS-threshold
    policy and 1 for ``always``.
    """
    if config.policy == "always":
        target = 1.0
    elif config.policy == "ess":
        target = 1.0 + beta_crit(config.ess_crit)
    else:
        raise ConfigurationError("exp_ess_spacing needs policy 'ess' or 'always'")
    result = exp_stationary(config, [Variant("rpf", config.policy_object(), config.schedule_object())])
    times = [tr.resampling_times for tr in result.traces["rpf"]]
    ratios = [spacing_ratios(t) for t in times]
    insufficient = [i for i, t in enumerate(times) if len(t) < 3]
    return SpacingReport(target, times, ratios, insufficient, result)


# -- logistic map -------------------------------------------------------------


def _logistic_variants(config: ExperimentConfig, names):
    alpha_h = config.alpha_h
    table = {
        "always": Variant("always", Always(), RuleOfThumb()),
        "ess": Variant("ess", EssThreshold(config.ess_crit), RuleOfThumb()),
        "harmonic": Variant("harmonic", Always(), Harmonic(alpha_h)),
    }
    out = []
    for v in names:
        if isinstance(v, Variant):
            out.append(v)
        elif v in table:
            out.append(table[v])
        else:
            raise ConfigurationError(f"unknown logistic variant {v!r}; choose from {', '.join(table)}")
    return out


def exp_logistic(config: ExperimentConfig, variants=("always", "ess", "harmonic"), include_oracle=True):
    """Growth-rate estimation on the logistic map.

    ``variants`` holds names from ``always``, ``ess`` and ``harmonic`` or
    explicit :class:`Variant` objects. Each runs on noisy data and, with ``include_oracle``, on
    the noiseless record of the same trajectory (labels prefixed with
    ``oracle-``). The RMSE is that of the parameter ``a`` alone, divided
    by the prior sd unless a normalizer is configured. An optional
    benchmark run with ``benchmark_particles`` is labelled ``benchmark``.
    """
    model = LogisticMapModel(config.obs_noise, config.logistic_prior_mean, config.logistic_prior_var)
    x_true = model.true_state(config.a_star)
    seeds = config.replicate_seeds()
    normalizer = config.normalizer or float(np.sqrt(config.logistic_prior_var))
    base = _logistic_variants(config, variants)
    if config.benchmark_particles:
        base.append(Variant("benchmark", EssThreshold(config.ess_crit), RuleOfThumb(), config.benchmark_particles))
    modes = [(False, "")] + ([(True, "oracle-")] if include_oracle else [])
    traces = {}
    for oracle, prefix in modes:
        obs = [simulate_observations(model, x_true, config.horizon, _data_seed(s), oracle).observations for s in seeds]
        labelled = [dataclasses.replace(v, label=prefix + v.label) for v in base]
        traces.update(_run_variants(config, [model] * len(seeds), obs, labelled))
    truths = [x_true] * len(seeds)
    return ExperimentResult(
        name="logistic",
        config=config,
        summaries=_summarize(traces, truths, normalizer, components=(0,)),
        traces=traces,
        truths=truths,
        components=(0,),
        normalizer=normalizer,
    )


# -- LNAS ---------------------------------------------------------------------


def load_weather(config: ExperimentConfig) -> Weather:
    """Synthetic weather, or a CSV path; must cover the horizon."""
    if config.weather == "synthetic":
        weather = synthetic_weather(max(config.horizon, 365), config.weather_seed)
    else:
        path = Path(config.weather)
        if not path.is_file():
            raise ConfigurationError(f"weather file {path} does not exist; pass a CSV or 'synthetic'")
        weather = read_weather_csv(path)
    if len(weather) < config.horizon:
        raise ConfigurationError(f"weather series has {len(weather)} days but the horizon is {config.horizon}")
    return weather


def exp_lnas(config: ExperimentConfig, weather: Optional[Weather] = None, variants=None) -> ExperimentResult:
    """Estimate (RUE, gamma, mu_a) of the LNAS model with four filters.

    Default variants: ``rpf-ess`` (threshold resampling with rule-of-thumb
    jitter), ``rpf-harmonic`` (resampling every step with a harmonically
    decaying bandwidth), ``sir-ess`` and ``sis``. ``result.table`` holds,
    for the snapshot step, the replicate-averaged posterior mean and sd of
    each parameter with the across-replicate std.
    """
    weather = weather if weather is not None else load_weather(config)
    if len(weather) < config.horizon:
        raise ConfigurationError(f"weather series has {len(weather)} days but the horizon is {config.horizon}")
    if not 1 <= config.snapshot <= config.horizon:
        raise ConfigurationError(f"snapshot step must lie in [1, {config.horizon}]")
    model = LnasModel(weather, obs_noise=config.obs_noise)
    x_true = model.true_state(config.theta)
    seeds = config.replicate_seeds()
    ess = EssThreshold(config.ess_crit)
    variants = list(variants) if variants is not None else [
        Variant("rpf-ess", ess, RuleOfThumb()),
        Variant("rpf-harmonic", Always(), Harmonic(config.alpha_h)),
        Variant("sir-ess", ess, NoJitter()),
        Variant("sis", Never(), NoJitter()),
    ]
    if config.benchmark_particles:
        variants.append(Variant("benchmark", ess, RuleOfThumb(), config.benchmark_particles))
    obs = [simulate_observations(model, x_true, config.horizon, _data_seed(s), config.oracle_mode).observations for s in seeds]
    traces = _run_variants(config, [model] * len(seeds), obs, variants)
    components = (0, 1, 2)
    normalizer = config.normalizer or float(np.sqrt(np.sum(model.prior_sd**2)))
    truths = [x_true] * len(seeds)
    result = ExperimentResult(
        name="lnas",
        config=config,
        summaries=_summarize(traces, truths, normalizer, components),
        traces=traces,
        truths=truths,
        components=components,
        normalizer=normalizer,
    )
    k = config.snapshot - 1
    for j, name in enumerate(model.param_names):
        for v in variants:
            mu = np.array([tr.mean[k, j] for tr in traces[v.label]])
            sd = np.array([np.sqrt(max(tr.cov[k, j, j], 0.0)) for tr in traces[v.label]])
            result.table.append((name, f"{v.label}:mean", mu.mean(), mu.std()))
            result.table.append((name, f"{v.label}:sd", sd.mean(), sd.std()))
    return result


# -- CSV output ---------------------------------------------------------------


def _fmt(x) -> str:
    return "%.17g" % x


def write_trace_csv(path, trace: FilterTrace, rmse) -> None:
    """One row per step: flags, ESS ratio, bandwidth, RMSE, evidence, mean, covariance trace."""
    d = trace.mean.shape[1]
    header = ["step", "resampled", "ess_norm", "alpha", "rmse", "log_marginal"]
    header += [f"mu_{i + 1}" for i in range(d)] + ["sigma_trace"]
    cov_tr = trace.cov_trace
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(trace.horizon):
            w.writerow(
                [str(k + 1), str(int(trace.resampled[k]))]
                + [_fmt(v) for v in (trace.ess_norm[k], trace.alpha[k], rmse[k], trace.log_marginal[k])]
                + [_fmt(v) for v in trace.mean[k]]
                + [_fmt(cov_tr[k])]
            )


def write_summary_csv(path, summary: ReplicateSummary) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "rmse_mean", "rmse_std", "ess_mean"])
        for k in range(summary.horizon):
            w.writerow(
                [str(k + 1), _fmt(summary.rmse_mean[k]), _fmt(summary.rmse_std[k]), _fmt(summary.ess_mean[k])]
            )


def write_result(result: ExperimentResult, out_dir) -> list[Path]:
    """Write every run's ``trace.csv``, each variant's ``summary.csv`` and any table.

    Layout: ``<out>/<label>/summary.csv``, ``<out>/<label>/r<seed>/trace.csv``,
    ``<out>/overlays.csv`` and ``<out>/table.csv`` when present. Returns the
    paths written.
    """
    out = Path(out_dir)
    written = []
    seeds = result.config.replicate_seeds()
    for label, traces in result.traces.items():
        vdir = out / label
        for seed, tr, truth in zip(seeds, traces, result.truths):
            rdir = vdir / f"r{seed}"
            rdir.mkdir(parents=True, exist_ok=True)
            write_trace_csv(rdir / "trace.csv", tr, rmse_trace(tr, truth, result.normalizer, result.components))
            written.append(rdir / "trace.csv")
        write_summary_csv(vdir / "summary.csv", result.summaries[label])
        written.append(vdir / "summary.csv")
    if result.overlays:
        names = sorted(result.overlays)
        path = out / "overlays.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step"] + names)
            for k in range(len(result.overlays[names[0]])):
                w.writerow([str(k + 1)] + [_fmt(result.overlays[n][k]) for n in names])
        written.append(path)
    if result.table:
        path = out / "table.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["parameter", "statistic", "value", "std"])
            for name, stat, value, std in result.table:
                w.writerow([name, stat, _fmt(value), _fmt(std)])
        written.append(path)
    return written
