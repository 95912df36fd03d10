"""Hidden Markov models used throughout the package.

All model methods are vectorised over particles: states are ``(N, d)``
arrays and :meth:`HmmModel.log_likelihood` returns one value per row.
Random inputs come from an ``rng`` object exposing ``random`` and
``standard_normal`` (a :class:`numpy.random.Generator` or a
:class:`rpflab.smc.streams.KeyedDraws`), and every method consumes a fixed
number of variates per particle regardless of the model's parameters.

Multiplicative observation noise
--------------------------------
The logistic and LNAS models observe ``y = x * eta`` with lognormal
``eta``. The noise level ``R`` is mapped to log-space as::

    log(eta) ~ Normal(0, s2),   s2 = log(1 + R)

so that ``eta`` has median one and ``Var[log eta]`` matches the
coefficient of variation ``R``. A zero log-mean keeps the noiseless
observation ``y = x`` at the centre of the likelihood, which is what makes
oracle-mode runs a favourable limit of noisy ones.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from .errors import ConfigurationError, DomainError
from .linalg import psd_sqrt, spd_inv, symmetrize
from .weather import Weather

_LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class GaussianBelief:
    """Mean vector and covariance matrix of a Gaussian distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float)).copy()
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"dimension mismatch: mean {mean.shape}, cov {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("belief contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        cov = symmetrize(cov)
        tr = float(np.trace(cov))
        if np.min(np.linalg.eigvalsh(cov)) < -1e-12 * max(abs(tr), 1e-300):
            raise ValueError("covariance is not positive semi-definite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def trusted(cls, mean, cov) -> "GaussianBelief":
        """Construct without validation, for values known to be well formed."""
        self = object.__new__(cls)
        object.__setattr__(self, "mean", np.atleast_1d(mean))
        object.__setattr__(self, "cov", np.atleast_2d(cov))
        return self

    @classmethod
    def scalar(cls, mean: float, var: float) -> "GaussianBelief":
        return cls(np.array([mean]), np.array([[var]]))


class HmmModel(ABC):
    """Contract for the filters: prior, transition and observation density."""

    state_dim: int
    obs_dim: int
    deterministic: bool = False

    @abstractmethod
    def prior_sample(self, n, rng): ...

    @abstractmethod
    def transition_sample(self, x, step, rng): ...

    @abstractmethod
    def log_likelihood(self, y, x, step): ...

    @abstractmethod
    def observe(self, x, step, rng, oracle=False):
        """Draw one observation of the single state ``x`` (shape ``(d,)``)."""


# -- linear Gaussian ---------------------------------------------------------


class GeneralLinearModel(HmmModel):
    """``x_n = A x_{n-1} + eps``, ``y_n = B x_n + eta`` with Gaussian noises."""

    def __init__(self, A, B, Q, R, prior: GaussianBelief):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.Q = symmetrize(np.atleast_2d(Q))
        self.R = symmetrize(np.atleast_2d(R))
        self.prior = prior
        d, dy = prior.dim, self.B.shape[0]
        if self.A.shape != (d, d) or self.B.shape != (dy, d) or self.Q.shape != (d, d) or self.R.shape != (dy, dy):
            raise ConfigurationError(
                f"inconsistent shapes A{self.A.shape} B{self.B.shape} Q{self.Q.shape} R{self.R.shape} for d={d}"
            )
        if np.min(np.linalg.eigvalsh(self.R)) <= 0:
            raise ConfigurationError("observation covariance R must be positive definite")
        self.state_dim, self.obs_dim = d, dy
        self._q_sqrt = psd_sqrt(self.Q)
        self._prior_sqrt = psd_sqrt(prior.cov)
        self._factor_cache = {}

    def obs_cov(self, step):
        return self.R

    def prior_sample(self, n, rng):
        z = rng.standard_normal((n, self.state_dim))
        return self.prior.mean + z @ self._prior_sqrt.T

    def transition_sample(self, x, step, rng):
        x = np.asarray(x, dtype=float)
        z = rng.standard_normal(x.shape)
        return x @ self.A.T + z @ self._q_sqrt.T

    def _obs_factors(self, step):
        R = self.obs_cov(step)
        key = id(R)
        if key not in self._factor_cache:
            self._factor_cache[key] = (spd_inv(R), np.linalg.slogdet(R)[1])
        return self._factor_cache[key]

    def log_likelihood(self, y, x, step):
        resid = np.asarray(y, dtype=float) - np.asarray(x, dtype=float) @ self.B.T
        r_inv, logdet = self._obs_factors(step)
        quad = np.einsum("ij,jk,ik->i", resid, r_inv, resid)
        return -0.5 * (quad + logdet + self.obs_dim * _LOG_2PI)

    def observe(self, x, step, rng, oracle=False):
        z = rng.standard_normal(self.obs_dim)
        signal = self.B @ np.asarray(x, dtype=float)
        if oracle:
            return signal
        return signal + psd_sqrt(self.obs_cov(step)) @ z


class StationaryLinearModel(GeneralLinearModel):
    """Constant hidden state observed directly: ``A = B = I``, ``Q = 0``.

    An optional quench replaces the observation covariance by
    ``quench_cov`` from step ``quench_step`` onwards.
    """

    def __init__(self, prior: GaussianBelief, R, quench_step=None, quench_cov=None):
        d = prior.dim
        super().__init__(np.eye(d), np.eye(d), np.zeros((d, d)), R, prior)
        if (quench_step is None) != (quench_cov is None):
            raise ConfigurationError("quench_step and quench_cov must be given together")
        self.quench_step = quench_step
        self.quench_cov = None if quench_cov is None else symmetrize(np.atleast_2d(quench_cov))

    def obs_cov(self, step):
        if self.quench_step is not None and step >= self.quench_step:
            return self.quench_cov
        return self.R


# -- scalar building blocks for the nonlinear models --------------------------


def logistic_step(a, x):
    """One iteration ``a * x * (1 - x)`` of the logistic map."""
    a_arr, x_arr = np.asarray(a, dtype=float), np.asarray(x, dtype=float)
    if np.any((a_arr < 0) | (a_arr > 4)) or np.any((x_arr < 0) | (x_arr > 1)):
        raise DomainError(f"logistic map needs a in [0, 4] and x in [0, 1], got a={a}, x={x}")
    out = a_arr * x_arr * (1.0 - x_arr)
    return float(out) if out.ndim == 0 else out


def lognormal_params(R):
    """Log-space ``(mean, variance)`` of the multiplicative noise for level ``R``."""
    if not np.all(np.asarray(R) > 0):
        raise ConfigurationError(f"lognormal noise level must be positive, got {R}")
    s2 = np.log1p(R)
    return 0.0, s2


def lognormal_log_likelihood(y, x, R):
    """Log-density of ``y`` given signal ``x`` under ``y = x * eta``.

    Returns ``-inf`` where ``x <= 0`` (the ratio is undefined) and ``y > 0``.
    """
    m, s2 = lognormal_params(R)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(y <= 0):
        raise DomainError("lognormal observations must be strictly positive")
    ok = x > 0
    log_ratio = np.log(y) - np.log(np.where(ok, x, 1.0)) - m
    out = -np.log(y) - 0.5 * (np.log(2 * np.pi * s2) + log_ratio**2 / s2)
    out = np.where(ok, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def beer_lambert_production(l, phi, rue, rho):
    """Daily biomass ``RUE * phi * (1 - exp(-l / rho))``."""
    l, phi, rue = (np.asarray(v, dtype=float) for v in (l, phi, rue))
    if np.any(l < 0) or np.any(phi < 0):
        raise DomainError("leaf mass and radiation must be non-negative")
    if np.any(rue <= 0) or rho <= 0:
        raise DomainError("RUE and rho must be positive")
    out = rue * phi * -np.expm1(-l / rho)
    return float(out) if out.ndim == 0 else out


def allocation_fraction(tau, gamma, mu_a, sigma_a):
    """Fraction of new biomass sent to leaves, as a function of thermal time.

    ``tau = 0`` is taken as the limit value ``gamma``.
    """
    tau, gamma, mu_a = (np.asarray(v, dtype=float) for v in (tau, gamma, mu_a))
    if np.any(tau < 0) or np.any(mu_a <= 0) or sigma_a <= 0:
        raise DomainError("allocation needs tau >= 0, mu_a > 0, sigma_a > 0")
    if np.any((gamma < 0) | (gamma > 1)):
        raise DomainError("gamma must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        z = np.log(tau / mu_a) / (np.sqrt(2.0) * sigma_a)
    out = 0.5 * gamma * special.erfc(z)  # erfc(-inf) = 2 handles tau = 0
    return float(out) if out.ndim == 0 else out


def lnas_step(state, temp, rad, theta, rho, sigma_a):
    """Advance ``(l, r, tau)`` by one day.

    Thermal time is updated first and the allocation is evaluated at the
    new thermal time; production uses the leaf mass of the previous day.
    ``state`` and ``theta = (RUE, gamma, mu_a)`` may carry a leading
    particle axis (shape ``(N, 3)``).
    """
    state = np.asarray(state, dtype=float)
    theta = np.asarray(theta, dtype=float)
    l, r, tau = state[..., 0], state[..., 1], state[..., 2]
    rue, gamma, mu_a = theta[..., 0], theta[..., 1], theta[..., 2]
    tau_new = tau + max(0.0, float(temp))
    q = beer_lambert_production(l, rad, rue, rho)
    a = allocation_fraction(tau_new, gamma, mu_a, sigma_a)
    return np.stack([l + a * q, r + (1.0 - a) * q, tau_new], axis=-1)


# -- nonlinear models ---------------------------------------------------------


class LogisticMapModel(HmmModel):
    """Logistic map with unknown growth rate; state is ``(a, x)``.

    The prior on ``a`` is ``Normal(prior_mean, prior_var)`` truncated to
    [0, 4], sampled by inverse CDF so each particle uses one uniform.
    """

    deterministic = True

    def __init__(self, obs_noise=0.1, prior_mean=3.0, prior_var=0.3, x0=0.5):
        lognormal_params(obs_noise)
        if prior_var <= 0:
            raise ConfigurationError("prior_var must be positive")
        if not 0 <= x0 <= 1:
            raise ConfigurationError("x0 must lie in [0, 1]")
        self.obs_noise = float(obs_noise)
        self.prior_mean = float(prior_mean)
        self.prior_var = float(prior_var)
        self.x0 = float(x0)
        self.state_dim, self.obs_dim = 2, 1
        sd = np.sqrt(prior_var)
        self._prior = stats.truncnorm((0 - prior_mean) / sd, (4 - prior_mean) / sd, loc=prior_mean, scale=sd)

    def true_state(self, a):
        return np.array([a, self.x0])

    def prior_sample(self, n, rng):
        a = self._prior.ppf(rng.random(n))
        return np.column_stack([a, np.full(n, self.x0)])

    def transition_sample(self, x, step, rng):
        x = np.asarray(x, dtype=float)
        a = np.clip(x[:, 0], 0.0, 4.0)
        pop = np.clip(x[:, 1], 0.0, 1.0)
        return np.column_stack([a, a * pop * (1.0 - pop)])

    def log_likelihood(self, y, x, step):
        return lognormal_log_likelihood(np.asarray(y, dtype=float)[0], np.asarray(x)[:, 1], self.obs_noise)

    def observe(self, x, step, rng, oracle=False):
        m, s2 = lognormal_params(self.obs_noise)
        eta = np.exp(m + np.sqrt(s2) * rng.standard_normal(1))
        return np.array([x[1]]) if oracle else x[1] * eta


class LnasModel(HmmModel):
    """Simplified sugar-beet growth model with parameters in the state.

    State layout: ``(RUE, gamma, mu_a, l, r, tau)``. Both leaf and root
    masses are observed every day with independent lognormal noise.
    Parameters pushed outside their domain by kernel jitter are reflected
    at zero, and ``gamma`` is clamped to [0, 1], before each transition.
    """

    deterministic = True
    param_names = ("RUE", "gamma", "mu_a")

    def __init__(
        self,
        weather: Weather,
        obs_noise=0.1,
        prior_mean=(3.8, 0.7, 500.0),
        prior_sd=(0.3, 0.05, 50.0),
        rho=100.0,
        sigma_a=0.3,
        l0=0.1,
    ):
        lognormal_params(obs_noise)
        if rho <= 0 or sigma_a <= 0 or l0 <= 0:
            raise ConfigurationError("rho, sigma_a and l0 must be positive")
        self.weather = weather
        self.obs_noise = float(obs_noise)
        self.prior_mean = np.asarray(prior_mean, dtype=float)
        self.prior_sd = np.asarray(prior_sd, dtype=float)
        self.rho, self.sigma_a, self.l0 = float(rho), float(sigma_a), float(l0)
        self.state_dim, self.obs_dim = 6, 2

    def true_state(self, theta):
        return np.concatenate([np.asarray(theta, dtype=float), [self.l0, 0.0, 0.0]])

    def prior_sample(self, n, rng):
        theta = self.prior_mean + self.prior_sd * rng.standard_normal((n, 3))
        init = np.tile([self.l0, 0.0, 0.0], (n, 1))
        return np.hstack([theta, init])

    def transition_sample(self, x, step, rng):
        x = np.abs(np.asarray(x, dtype=float))
        x[:, 1] = np.minimum(x[:, 1], 1.0)
        x[:, 2] = np.maximum(x[:, 2], 1e-12)
        temp, rad = self.weather.day(step)
        grown = lnas_step(x[:, 3:], temp, rad, x[:, :3], self.rho, self.sigma_a)
        return np.hstack([x[:, :3], grown])

    def log_likelihood(self, y, x, step):
        x = np.asarray(x)
        y = np.asarray(y, dtype=float)
        return lognormal_log_likelihood(y[0], x[:, 3], self.obs_noise) + lognormal_log_likelihood(
            y[1], x[:, 4], self.obs_noise
        )

    def observe(self, x, step, rng, oracle=False):
        m, s2 = lognormal_params(self.obs_noise)
        eta = np.exp(m + np.sqrt(s2) * rng.standard_normal(2))
        signal = np.asarray(x[3:5], dtype=float)
        return signal.copy() if oracle else signal * eta


class Simulation(NamedTuple):
    states: np.ndarray  # (n + 1, d), row 0 is the initial state
    observations: np.ndarray  # (n, d_y)


def simulate_observations(model: HmmModel, x0, horizon: int, rng, oracle_mode=False) -> Simulation:
    """Simulate a true trajectory from ``x0`` and its observations ``y_1..y_n``.

    Each step draws the transition noise then the observation noise, both
    unconditionally, so the random stream is consumed identically whatever
    the noise levels or ``oracle_mode``.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    x = np.asarray(x0, dtype=float).reshape(1, -1)
    states = [x[0]]
    obs = []
    for n in range(1, horizon + 1):
        x = model.transition_sample(x, n, rng)
        states.append(x[0])
        obs.append(np.atleast_1d(model.observe(x[0], n, rng, oracle=oracle_mode)))
    return Simulation(np.array(states), np.array(obs))
