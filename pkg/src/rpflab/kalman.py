"""Exact linear-Gaussian results used as oracles for the particle filters.

Covers the Kalman recursion (information and gain forms), the stationary
closed form, the bandwidth-perturbed recursion followed by a regularized
particle filter in the large-N limit together with its closed-form
solution, the resulting fixed points, and the asymptotic effective sample
size of importance sampling on the stationary model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError
from .linalg import spd_inv, symmetrize
from .models import GaussianBelief


def kalman_predict(belief: GaussianBelief, A, Q) -> GaussianBelief:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if A.shape != (belief.dim, belief.dim) or Q.shape != A.shape:
        raise ValueError(f"dimension mismatch: belief d={belief.dim}, A{A.shape}, Q{Q.shape}")
    return GaussianBelief(A @ belief.mean, symmetrize(A @ belief.cov @ A.T + Q))


def kalman_update(pred: GaussianBelief, y, B, R) -> GaussianBelief:
    """Information-form measurement update.

    Adds ``B^T R^-1 B`` to the precision and ``B^T R^-1 y`` to the
    information vector. Raises :class:`numpy.linalg.LinAlgError` when the
    posterior precision is singular.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r_inv = spd_inv(R)
    p_inv = spd_inv(pred.cov)
    info = p_inv + B.T @ r_inv @ B
    cov = spd_inv(info)
    mean = cov @ (p_inv @ pred.mean + B.T @ r_inv @ y)
    return GaussianBelief(mean, cov)


def kalman_update_gain(pred: GaussianBelief, y, B, R) -> GaussianBelief:
    """Gain-form update, ``K = P B^T (B P B^T + R)^-1``; works for singular ``P``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    P = pred.cov
    S = symmetrize(B @ P @ B.T + np.atleast_2d(R))
    K = np.linalg.solve(S, B @ P).T
    mean = pred.mean + K @ (y - B @ pred.mean)
    cov = (np.eye(pred.dim) - K @ B) @ P
    return GaussianBelief(mean, symmetrize(cov))


def kalman_filter(prior: GaussianBelief, ys, A, B, Q, R):
    """Run predict + update over ``ys``.

    Returns the list of posteriors and the exact log evidence
    ``log p(y_1..y_n)``.
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    belief = prior
    beliefs = []
    log_ev = 0.0
    for n, y in enumerate(np.atleast_2d(np.asarray(ys, dtype=float).T).T, start=1):
        R_n = R(n) if callable(R) else np.atleast_2d(R)
        pred = kalman_predict(belief, A, Q)
        S = symmetrize(B @ pred.cov @ B.T + R_n)
        resid = y - B @ pred.mean
        _, logdet = np.linalg.slogdet(2 * np.pi * S)
        log_ev += -0.5 * (logdet + resid @ np.linalg.solve(S, resid))
        belief = kalman_update_gain(pred, y, B, R_n)
        beliefs.append(belief)
    return beliefs, log_ev


def stationary_closed_form(n: int, prior: GaussianBelief, R, y_bar) -> GaussianBelief:
    """Exact posterior of the stationary model after ``n`` observations.

    ``y_bar`` is the running mean of the observations (the maximum
    likelihood estimate); it is ignored when ``n == 0``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return prior
    R = np.atleast_2d(np.asarray(R, dtype=float))
    s0 = prior.cov
    cov = symmetrize(R @ np.linalg.solve(R + n * s0, s0))
    gain = cov @ spd_inv(s0)
    mean = gain @ prior.mean + (np.eye(prior.dim) - gain) @ np.atleast_1d(y_bar)
    return GaussianBelief(mean, cov)


def perturbed_recursion_step(belief: GaussianBelief, y, R, alpha: float) -> GaussianBelief:
    """Stationary-model update followed by covariance inflation ``(1 + alpha)``.

    This is the large-N limit of one RPF step with Gaussian kernel
    bandwidth ``alpha * Sigma``; the mean is the plain Kalman mean.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    post = kalman_update(belief, y, np.eye(belief.dim), R)
    return GaussianBelief(post.mean, (1.0 + alpha) * post.cov)


# -- bandwidth sequences ------------------------------------------------------


class AlphaSequence:
    """Bandwidth factor ``alpha_n`` for steps ``n >= 1``."""

    def __call__(self, n: int) -> float:
        return float(self.values(n)[-1])

    def values(self, n_max: int) -> np.ndarray:
        """``alpha_1 .. alpha_{n_max}`` as an array."""
        return self._values(np.arange(1, n_max + 1))

    def _values(self, n):
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(AlphaSequence):
    def _values(self, n):
        return np.zeros(len(n))


@dataclass(frozen=True)
class Constant(AlphaSequence):
    alpha_h: float

    def _values(self, n):
        return np.full(len(n), float(self.alpha_h))


@dataclass(frozen=True)
class Periodic(AlphaSequence):
    """``alpha_h`` at multiples of ``period``, zero elsewhere."""

    alpha_h: float
    period: int

    def __post_init__(self):
        if self.period < 1:
            raise ConfigurationError("period must be >= 1")

    def _values(self, n):
        return np.where(n % self.period == 0, float(self.alpha_h), 0.0)


@dataclass(frozen=True)
class Harmonic(AlphaSequence):
    """``alpha_h / (1 + n alpha_h)``, i.e. ``1 / (n + 1/alpha_h)``."""

    alpha_h: float

    def _values(self, n):
        return self.alpha_h / (1.0 + n * self.alpha_h)


@dataclass(frozen=True)
class ExponentialDecay(AlphaSequence):
    alpha_h: float

    def _values(self, n):
        return self.alpha_h * np.exp(-n * self.alpha_h)


@dataclass(frozen=True)
class PowerLaw(AlphaSequence):
    """``n ** (eps - 1)``: decays too slowly for the optimal rate when ``eps > 0``."""

    eps: float

    def _values(self, n):
        return n.astype(float) ** (self.eps - 1.0)


class Explicit(AlphaSequence):
    """A finite, user-supplied sequence."""

    def __init__(self, alphas):
        self.alphas = np.asarray(alphas, dtype=float)
        if np.any(self.alphas < 0):
            raise ValueError("alpha values must be non-negative")

    def _values(self, n):
        if n[-1] > len(self.alphas):
            raise ValueError(f"sequence has only {len(self.alphas)} terms")
        return self.alphas[n - 1]


def _log_products(alphas):
    """``log prod_{j<=n}(1 + alpha_j)`` for n = 0..len(alphas)."""
    return np.concatenate([[0.0], np.cumsum(np.log1p(alphas))])


def lemma_closed_form(n: int, prior: GaussianBelief, R, ys, seq: AlphaSequence) -> GaussianBelief:
    """Closed-form solution of ``n`` perturbed recursion steps.

    With ``P_n = prod_{j<=n}(1 + alpha_j)`` and ``S_n = sum_{j<=n} P_{j-1}``::

        Sigma_n^-1 = (Sigma_0^-1 + S_n R^-1) / P_n
        mu_n = (Sigma_0^-1 + S_n R^-1)^-1 (Sigma_0^-1 mu_0 + R^-1 sum_j P_{j-1} y_j)

    Everything is scaled by ``P_n`` in log space so long constant-alpha
    runs do not overflow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ys = np.asarray(ys, dtype=float).reshape(-1, prior.dim)[:n]
    if len(ys) < n:
        raise ValueError(f"need {n} observations, got {len(ys)}")
    log_p = _log_products(seq.values(n))
    log_pn = log_p[-1]
    log_prev = log_p[:-1]  # log P_{j-1}, j = 1..n
    log_s = logsumexp(log_prev)
    weights = np.exp(log_prev - log_s)
    y_w = weights @ ys
    s_scaled = np.exp(log_s - log_pn)  # S_n / P_n
    p_inv = np.exp(-log_pn)  # 1 / P_n
    s0_inv = spd_inv(prior.cov)
    r_inv = spd_inv(R)
    info = p_inv * s0_inv + s_scaled * r_inv
    cov = spd_inv(info)
    mean = cov @ (p_inv * s0_inv @ prior.mean + s_scaled * r_inv @ y_w)
    return GaussianBelief(mean, cov)


def covariance_sequence(seq: AlphaSequence, n_max: int, prior_var: float, obs_var: float) -> np.ndarray:
    """Scalar ``Sigma_1 .. Sigma_{n_max}`` of the closed form (1-d, vectorised)."""
    log_p = _log_products(seq.values(n_max))
    log_s = np.logaddexp.accumulate(log_p[:-1])
    log_pn = log_p[1:]
    return 1.0 / (np.exp(-log_pn) / prior_var + np.exp(log_s - log_pn) / obs_var)


def rpf_fixed_point(alpha_h: float, R):
    """Asymptotic covariance ``alpha_h R`` and mean fluctuation ``alpha_h R / (2 + alpha_h)``."""
    if alpha_h <= 0:
        raise ValueError("alpha_h must be positive")
    R = np.atleast_2d(np.asarray(R, dtype=float))
    return alpha_h * R, alpha_h / (2.0 + alpha_h) * R


def periodic_fixed_point(alpha_h: float, p: int, q: int, R):
    """Fixed point at phase ``q`` when resampling every ``p`` steps."""
    if p < 1 or not 0 <= q < p:
        raise ValueError(f"need p >= 1 and 0 <= q < p, got p={p}, q={q}")
    if alpha_h <= 0:
        raise ValueError("alpha_h must be positive")
    R = np.atleast_2d(np.asarray(R, dtype=float))
    denom = p + alpha_h * q
    cov = alpha_h * R / denom
    resid = alpha_h / (2.0 + alpha_h) * (p + alpha_h * (2.0 + alpha_h) * q) / denom**2 * R
    return cov, resid


def periodic_band(alpha_h: float, p: int, R):
    """(lower, upper) limits of the asymptotic covariance over one period."""
    lower, _ = periodic_fixed_point(alpha_h, p, p - 1, R)
    upper, _ = periodic_fixed_point(alpha_h, p, 0, R)
    return lower, upper


def asymptotic_rmse(cov, resid) -> float:
    return float(np.sqrt(np.trace(np.atleast_2d(cov)) + np.trace(np.atleast_2d(resid))))


@dataclass
class RateReport:
    n: np.ndarray
    scaled_cov: np.ndarray  # n * Sigma_n / R
    sup: float
    final: float


def optimal_rate_check(seq: AlphaSequence, n_max: int, prior_var=1.0, obs_var=0.25) -> RateReport:
    """Evaluate ``n Sigma_n / R`` along the closed form (1-d) up to ``n_max``."""
    if n_max < 100:
        raise ValueError("n_max must be >= 100")
    n = np.arange(1, n_max + 1)
    scaled = n * covariance_sequence(seq, n_max, prior_var, obs_var) / obs_var
    return RateReport(n, scaled, float(np.max(scaled)), float(scaled[-1]))


def ess_asymptotic(n: int, mu0: float, sigma0: float, R: float, y_bar: float) -> float:
    """Large-N limit of ``ESS_n / N`` for importance sampling from the prior."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = R / (n * sigma0)
    return float(
        np.sqrt(g * (2.0 + g)) / (1.0 + g) * np.exp(-((mu0 - y_bar) ** 2) / (sigma0 * (1.0 + g) * (2.0 + g)))
    )


def beta_crit(ess_crit: float) -> float:
    """Relative spacing ``m / n`` after which the ESS ratio drops below ``ess_crit``.

    Only defined for ``0 < ess_crit < 1``; the endpoints correspond to the
    never/always resampling policies.
    """
    if not 0.0 < ess_crit < 1.0:
        raise ConfigurationError(f"ess_crit must lie strictly inside (0, 1), got {ess_crit}")
    c = np.sqrt(1.0 - ess_crit**2)
    return float(c / (1.0 - c))


def predicted_spacings(ess_crit: float, n: float, count: int) -> np.ndarray:
    """``m_k = beta (1 + beta)^(k - 1) n`` for k = 1..count."""
    b = beta_crit(ess_crit)
    return b * (1.0 + b) ** np.arange(count) * n
