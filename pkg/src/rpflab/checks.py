"""Self-contained invariant checks of the exact linear-Gaussian results.

Each check compares two independent routes to the same quantity (closed
form against recursion, information form against gain form, ...) on
seeded random instances, so the suite doubles as a smoke test of an
installation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import kalman
from .models import GaussianBelief
from .smc import rule_of_thumb_alpha


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def random_spd(rng, d: int, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random SPD matrix (eigenvalues in ``scale * [0.2, 2]``)."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return scale * (q * rng.uniform(0.2, 2.0, d)) @ q.T


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def check_update_forms(rng, instances: int = 100) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        d = int(rng.integers(1, 5))
        pred = GaussianBelief(rng.standard_normal(d), random_spd(rng, d))
        B = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        R = random_spd(rng, d, 0.5)
        y = rng.standard_normal(d)
        a = kalman.kalman_update(pred, y, B, R)
        b = kalman.kalman_update_gain(pred, y, B, R)
        worst = max(worst, _rel(a.mean, b.mean), _rel(a.cov, b.cov))
    return CheckResult("information vs gain update", bool(worst < 1e-10), f"max rel diff {worst:.2e}")


def check_lemma(rng, instances: int = 20, n_max: int = 1000) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, n_max + 1))
        prior = GaussianBelief(rng.standard_normal(d), random_spd(rng, d))
        R = random_spd(rng, d, 0.5)
        ys = rng.standard_normal((n, d))
        seq = kalman.Explicit(rng.uniform(0.0, 0.3, n))
        belief = prior
        for k in range(n):
            belief = kalman.perturbed_recursion_step(belief, ys[k], R, seq.alphas[k])
        closed = kalman.lemma_closed_form(n, prior, R, ys, seq)
        # covariances can be tiny, so compare them relative to their own scale
        cov_err = float(np.max(np.abs(closed.cov - belief.cov)) / np.max(np.abs(belief.cov)))
        worst = max(worst, _rel(closed.mean, belief.mean), cov_err)
    return CheckResult("closed form vs perturbed recursion", bool(worst < 1e-10), f"max rel diff {worst:.2e}")


def check_stationary(rng, n_max: int = 10_000) -> CheckResult:
    prior = GaussianBelief.scalar(0.7, 1.0)
    R = 0.25
    ys = 0.2 + np.sqrt(R) * rng.standard_normal(n_max)
    beliefs, _ = kalman.kalman_filter(prior, ys, 1.0, 1.0, 0.0, R)
    worst = 0.0
    for n in np.unique(np.geomspace(1, n_max, 40).astype(int)):
        closed = kalman.stationary_closed_form(int(n), prior, R, ys[:n].mean())
        b = beliefs[n - 1]
        worst = max(worst, _rel(closed.mean, b.mean), abs(closed.cov[0, 0] / b.cov[0, 0] - 1.0))
    crb = n_max * beliefs[-1].cov[0, 0] / R
    ok = bool(worst < 1e-10 and abs(crb - 1.0) < 1e-3)
    return CheckResult("stationary closed form and efficiency", ok, f"max rel diff {worst:.2e}, n Sigma/R = {crb:.6f}")


def check_fixed_points(n_particles: int = 1000) -> CheckResult:
    alpha_h = rule_of_thumb_alpha(n_particles, 1)
    R = 0.25
    const = kalman.covariance_sequence(kalman.Constant(alpha_h), 5000, 1.0, R)
    fixed, _ = kalman.rpf_fixed_point(alpha_h, R)
    per = kalman.covariance_sequence(kalman.Periodic(alpha_h, 2), 5000, 1.0, R)
    lo, hi = kalman.periodic_band(alpha_h, 2, R)
    e1 = abs(const[-1] / fixed[0, 0] - 1.0)
    e2 = max(abs(per[-2:].min() / lo[0, 0] - 1.0), abs(per[-2:].max() / hi[0, 0] - 1.0))
    ok = bool(e1 < 1e-10 and e2 < 1e-10)
    return CheckResult("constant and periodic fixed points", ok, f"rel err {e1:.1e} / {e2:.1e}")


def check_rates(n_particles: int = 1000) -> CheckResult:
    alpha_h = rule_of_thumb_alpha(n_particles, 1)
    harm = kalman.optimal_rate_check(kalman.Harmonic(alpha_h), 10_000)
    expo = kalman.optimal_rate_check(kalman.ExponentialDecay(alpha_h), 10_000)
    ok = bool(abs(harm.final / 2.0 - 1.0) < 0.05 and expo.sup <= 3.0)
    return CheckResult(
        "optimal-rate schedules", ok, f"harmonic n Sigma/R = {harm.final:.4f}, exp-decay sup = {expo.sup:.4f}"
    )


def check_beta() -> CheckResult:
    b = kalman.beta_crit(0.5)
    expected = np.sqrt(0.75) / (1.0 - np.sqrt(0.75))
    ok = bool(abs(b - expected) < 1e-12 and abs(b - 6.4641) < 1e-4)
    return CheckResult("critical spacing factor", ok, f"beta(0.5) = {b:.6f}")


def run_oracle_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_update_forms(rng),
        check_lemma(rng),
        check_stationary(rng),
        check_fixed_points(),
        check_rates(),
        check_beta(),
    ]
