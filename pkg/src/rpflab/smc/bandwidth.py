"""Kernel bandwidth schedules and Gaussian-kernel regularization.

The kernel covariance at step ``n`` is ``alpha_n * Sigma^N`` where
``Sigma^N`` is the weighted covariance of the particles before selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from ..linalg import psd_sqrt
from ..models import GaussianBelief
from .ensemble import ParticleEnsemble


def rule_of_thumb_alpha(n_particles: int, dim: int) -> float:
    """MISE-optimal squared bandwidth factor for a Gaussian target and kernel."""
    return (4.0 / (n_particles * (dim + 2.0))) ** (2.0 / (dim + 4.0))


class BandwidthSchedule:
    name = "base"


@dataclass(frozen=True)
class RuleOfThumb(BandwidthSchedule):
    name = "rule-of-thumb"


@dataclass(frozen=True)
class Silverman1d(BandwidthSchedule):
    name = "silverman"


@dataclass(frozen=True)
class Harmonic(BandwidthSchedule):
    """``alpha_h / (1 + n alpha_h)``; ``alpha_h`` defaults to the rule of thumb."""

    alpha_h: Optional[float] = None
    name = "harmonic"


@dataclass(frozen=True)
class ExponentialDecay(BandwidthSchedule):
    alpha_h: Optional[float] = None
    name = "exp-decay"


@dataclass(frozen=True)
class WestShrinkage(BandwidthSchedule):
    """Shrink towards the weighted mean by ``sqrt(1 - alpha_h)`` before jittering."""

    alpha_h: Optional[float] = None
    name = "west"


@dataclass(frozen=True)
class NoJitter(BandwidthSchedule):
    name = "none"


SCHEDULES = {
    cls.name: cls for cls in (RuleOfThumb, Silverman1d, Harmonic, ExponentialDecay, WestShrinkage, NoJitter)
}


def compute_alpha(schedule: BandwidthSchedule, step: int, n_particles: int, dim: int):
    """Return ``(alpha_n, shrink)``; ``shrink`` is ``None`` except for West shrinkage."""
    if n_particles < 2 or dim < 1 or step < 1:
        raise ValueError(f"need N >= 2, d >= 1, n >= 1; got N={n_particles}, d={dim}, n={step}")
    base = getattr(schedule, "alpha_h", None)
    if base is None:
        base = rule_of_thumb_alpha(n_particles, dim)
    if isinstance(schedule, NoJitter):
        return 0.0, None
    if isinstance(schedule, RuleOfThumb):
        return base, None
    if isinstance(schedule, Silverman1d):
        return (4.0 / n_particles) ** (2.0 / 3.0), None
    if isinstance(schedule, Harmonic):
        return base / (1.0 + step * base), None
    if isinstance(schedule, ExponentialDecay):
        return base * np.exp(-step * base), None
    if isinstance(schedule, WestShrinkage):
        return base, float(np.sqrt(1.0 - base))
    raise TypeError(f"unknown bandwidth schedule {schedule!r}")


def regularize(ensemble: ParticleEnsemble, belief: GaussianBelief, alpha: float, shrink=None, rng=None):
    """Jitter each (already selected) particle with ``Normal(0, alpha * cov)``.

    With ``shrink = a`` particles are first moved to ``a x + (1 - a) mean``.
    Weights are reset to uniform. One normal per particle and coordinate is
    always consumed from ``rng`` so stream positions do not depend on
    ``alpha``.
    """
    x = ensemble.states
    if shrink is not None:
        x = shrink * x + (1.0 - shrink) * belief.mean
    z = rng.standard_normal(x.shape) if rng is not None else None
    if alpha > 0 and np.any(belief.cov != 0):
        x = x + z @ (np.sqrt(alpha) * psd_sqrt(belief.cov)).T
    return ParticleEnsemble.uniform(x)


def mise_optimal_bandwidth(kernel_l2: float, curvature_l2: float, kernel_second_moment: float, n: int) -> float:
    """``h`` minimising the asymptotic MISE of a 1-d kernel density estimate.

    ``kernel_l2`` is ``||K||^2``, ``curvature_l2`` is ``||p''||^2`` and
    ``kernel_second_moment`` is ``int z^2 K(z) dz``.
    """
    if min(kernel_l2, curvature_l2, kernel_second_moment, n) <= 0:
        raise ValueError("all inputs must be positive")
    return (kernel_l2 / (n * curvature_l2 * kernel_second_moment**2)) ** 0.2


def gaussian_mise_bandwidth(var: float, n: int) -> float:
    """Specialisation to Gaussian ``p`` (variance ``var``) and Gaussian kernel."""
    kernel_l2 = 1.0 / (2.0 * np.sqrt(np.pi))
    curvature_l2 = 3.0 / (8.0 * np.sqrt(np.pi) * var**2.5)
    return mise_optimal_bandwidth(kernel_l2, curvature_l2, 1.0, n)


def gaussian_kde_mise_exact(h: float, n: int) -> float:
    """Exact MISE of a Gaussian-kernel KDE for standard normal data."""
    c = 1.0 / (2.0 * np.sqrt(np.pi))
    return (
        c / (n * h)
        + (1.0 - 1.0 / n) * c / np.sqrt(1.0 + h * h)
        - 2.0 / np.sqrt(2.0 * np.pi * (2.0 + h * h))
        + c
    )


def gaussian_kde_mise_mc(h: float, n: int, rng, replicates: int = 100, grid=None) -> float:
    """Monte Carlo MISE of a Gaussian KDE on standard normal samples.

    The integrated squared error of each replicate is computed by the
    trapezoidal rule on ``grid`` (default 801 points on [-8, 8]).
    """
    grid = np.linspace(-8.0, 8.0, 801) if grid is None else grid
    truth = np.exp(-0.5 * grid**2) / np.sqrt(2 * np.pi)
    ise = np.empty(replicates)
    norm = 1.0 / (n * h * np.sqrt(2 * np.pi))
    for r in range(replicates):
        x = rng.standard_normal(n)
        dens = np.zeros_like(grid)
        for chunk in np.array_split(x, max(1, n // 2000)):
            dens += np.exp(-0.5 * ((grid[:, None] - chunk[None, :]) / h) ** 2).sum(axis=1)
        ise[r] = trapezoid((dens * norm - truth) ** 2, grid)
    return float(ise.mean())
