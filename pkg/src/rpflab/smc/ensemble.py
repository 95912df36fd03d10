"""Weighted particle ensembles and the statistics computed from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FilterDegeneracyError
from ..models import GaussianBelief


@dataclass(frozen=True)
class ParticleEnsemble:
    """``N`` particle states of dimension ``d`` with log-weights.

    Log-weights are kept normalised (``logsumexp == 0``) by the filter;
    :func:`normalize_weights` accepts arbitrary ones.
    """

    states: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        lw = np.asarray(self.log_weights, dtype=float)
        if states.ndim != 2 or lw.shape != (states.shape[0],):
            raise ValueError(f"shape mismatch: states {states.shape}, log_weights {lw.shape}")
        if states.shape[0] < 2:
            raise ValueError("an ensemble needs at least two particles")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def uniform(cls, states):
        states = np.asarray(states, dtype=float)
        n = states.shape[0]
        return cls(states, np.full(n, -np.log(n)))

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def normalize_weights(ensemble: ParticleEnsemble):
    """Normalise log-weights via log-sum-exp.

    Returns the normalised ensemble and ``log(mean(exp(log_weights)))``,
    the log marginal-likelihood increment when the incoming log-weights
    are importance weights relative to a uniform ensemble.
    """
    lw = ensemble.log_weights
    if not np.any(np.isfinite(lw)) or np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise FilterDegeneracyError("all particle weights are zero or invalid")
    top = np.max(lw)
    total = top + np.log(np.sum(np.exp(lw - top)))
    return ParticleEnsemble(ensemble.states, lw - total), float(total - np.log(ensemble.size))


def effective_sample_size(weights) -> float:
    """``1 / sum(w^2)`` for normalised weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def weighted_mean_cov(ensemble: ParticleEnsemble) -> GaussianBelief:
    """Weighted mean and ``N/(N-1)``-corrected weighted covariance."""
    w = ensemble.weights
    x = ensemble.states
    n = ensemble.size
    mean = w @ x
    dev = x - mean
    cov = n / (n - 1.0) * (dev.T * w) @ dev
    # PSD by construction; skip the eigenvalue validation
    return GaussianBelief.trusted(mean, 0.5 * (cov + cov.T))


def evidence_variance(likelihoods):
    """Empirical variance of the evidence estimate from raw likelihoods.

    Returns ``(Z, direct, via_ess)`` where ``direct`` is
    ``sum((L_i - Z)^2) / N^2`` and ``via_ess`` is ``Z^2 / ESS * (1 - ESS/N)``;
    the two agree identically.
    """
    like = np.asarray(likelihoods, dtype=float)
    n = like.size
    z = like.mean()
    direct = np.sum((like - z) ** 2) / n**2
    ess = effective_sample_size(like / like.sum())
    return z, direct, z**2 / ess * (1.0 - ess / n)
