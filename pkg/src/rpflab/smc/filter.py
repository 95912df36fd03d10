"""Particle filter loop: SIS, bootstrap SIR and the regularized particle filter.

Which algorithm runs is decided by the resampling policy and bandwidth
schedule: ``Never`` gives SIS, a resampling policy with ``NoJitter`` gives
SIR, and any other schedule gives the RPF.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, FilterDegeneracyError
from ..models import HmmModel
from .bandwidth import BandwidthSchedule, compute_alpha, regularize
from .ensemble import ParticleEnsemble, effective_sample_size, normalize_weights, weighted_mean_cov
from .resampling import systematic_resample
from .streams import KeyedStream


class ResamplingPolicy:
    name = "base"

    def triggers(self, step: int, ess_ratio: float) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Always(ResamplingPolicy):
    name = "always"

    def triggers(self, step, ess_ratio):
        return True


@dataclass(frozen=True)
class Never(ResamplingPolicy):
    name = "never"

    def triggers(self, step, ess_ratio):
        return False


@dataclass(frozen=True)
class Periodic(ResamplingPolicy):
    """Resample at steps ``p, 2p, ...``."""

    period: int
    name = "periodic"

    def __post_init__(self):
        if self.period < 1:
            raise ConfigurationError(f"resampling period must be >= 1, got {self.period}")

    def triggers(self, step, ess_ratio):
        return step % self.period == 0


@dataclass(frozen=True)
class EssThreshold(ResamplingPolicy):
    """Resample when ``ESS / N < ess_crit`` (strict)."""

    ess_crit: float
    name = "ess"

    def __post_init__(self):
        if not 0.0 < self.ess_crit < 1.0:
            raise ConfigurationError(
                f"ess_crit must lie in (0, 1), got {self.ess_crit}; use Always or Never for the endpoints"
            )

    def triggers(self, step, ess_ratio):
        return ess_ratio < self.ess_crit


def policy_from_ratio(ess_crit: float) -> ResamplingPolicy:
    """Map a resampling ratio to a policy: ``>= 1`` always, ``<= 0`` never."""
    if ess_crit >= 1.0:
        return Always()
    if ess_crit <= 0.0:
        return Never()
    return EssThreshold(ess_crit)


@dataclass
class StepDiagnostics:
    ess: float
    resampled: bool
    log_marginal_increment: float
    alpha_used: float
    degenerate: bool = False


@dataclass
class FilterTrace:
    """Per-step record of a filter run (index 0 is step 1)."""

    n_particles: int
    mean: np.ndarray  # (n, d) weighted posterior mean
    cov: np.ndarray  # (n, d, d) weighted posterior covariance
    ess: np.ndarray  # (n,) ESS before any resampling at that step
    resampled: np.ndarray  # (n,) bool
    alpha: np.ndarray  # (n,) bandwidth factor applied (0 if not resampled)
    log_marginal: np.ndarray  # (n,) cumulative log evidence estimate
    degenerate: np.ndarray = field(default=None)
    final: ParticleEnsemble = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return len(self.ess)

    @property
    def ess_norm(self) -> np.ndarray:
        return self.ess / self.n_particles

    @property
    def cov_trace(self) -> np.ndarray:
        return np.trace(self.cov, axis1=1, axis2=2)

    @property
    def resampling_times(self) -> np.ndarray:
        return np.flatnonzero(self.resampled) + 1


def filter_step(
    model: HmmModel,
    ensemble: ParticleEnsemble,
    y,
    step: int,
    policy: ResamplingPolicy,
    schedule: BandwidthSchedule,
    stream: KeyedStream,
):
    """Propagate, weight, normalise and (if the policy fires) resample + jitter.

    Returns ``(ensemble, diagnostics, belief)`` where ``belief`` is the
    weighted posterior estimate before any resampling.
    """
    n = ensemble.size
    x = model.transition_sample(ensemble.states, step, stream.draws(step, "transition"))
    log_like = model.log_likelihood(y, x, step)
    # importance weights relative to a uniform ensemble, so the increment is
    # log sum_i w_{i, prev} g(y | x_i)
    unnorm = ParticleEnsemble(x, ensemble.log_weights + np.log(n) + log_like)
    try:
        weighted, increment = normalize_weights(unnorm)
    except FilterDegeneracyError as exc:
        raise FilterDegeneracyError(str(exc), step=step) from None
    ess = effective_sample_size(weighted.weights)
    belief = weighted_mean_cov(weighted)
    degenerate = bool(np.all(belief.cov == 0))
    resampled = policy.triggers(step, ess / n)
    alpha = 0.0
    out = weighted
    if resampled:
        idx = systematic_resample(weighted.weights, stream.draws(step, "resample"))
        alpha, shrink = compute_alpha(schedule, step, n, ensemble.dim)
        selected = ParticleEnsemble.uniform(x[idx])
        out = regularize(selected, belief, alpha, shrink, stream.draws(step, "jitter"))
    diag = StepDiagnostics(ess, resampled, increment, alpha, degenerate)
    return out, diag, belief


def run_filter(
    model: HmmModel,
    observations,
    n_particles: int,
    policy: ResamplingPolicy,
    schedule: BandwidthSchedule,
    seed: int,
) -> FilterTrace:
    """Filter ``observations`` (shape ``(n, d_y)``) from the model prior.

    The run is a deterministic function of its arguments. A
    :class:`FilterDegeneracyError` carries the failing step index.
    """
    obs = np.asarray(observations, dtype=float)
    if obs.ndim == 1:
        obs = obs[:, None]
    horizon = len(obs)
    if horizon < 1:
        raise ConfigurationError("need at least one observation")
    if n_particles < 2:
        raise ConfigurationError("need at least two particles")
    stream = KeyedStream(seed)
    ens = ParticleEnsemble.uniform(model.prior_sample(n_particles, stream.draws(0, "prior")))
    d = ens.dim
    mean = np.empty((horizon, d))
    cov = np.empty((horizon, d, d))
    ess = np.empty(horizon)
    resampled = np.zeros(horizon, dtype=bool)
    degenerate = np.zeros(horizon, dtype=bool)
    alpha = np.zeros(horizon)
    log_marg = np.empty(horizon)
    total = 0.0
    for k in range(horizon):
        ens, diag, belief = filter_step(model, ens, obs[k], k + 1, policy, schedule, stream)
        total += diag.log_marginal_increment
        mean[k], cov[k] = belief.mean, belief.cov
        ess[k], resampled[k], alpha[k] = diag.ess, diag.resampled, diag.alpha_used
        degenerate[k] = diag.degenerate
        log_marg[k] = total
    return FilterTrace(n_particles, mean, cov, ess, resampled, alpha, log_marg, degenerate, ens)
