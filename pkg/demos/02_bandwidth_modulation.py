"""
Restoring the optimal rate by shrinking the bandwidth
=====================================================

Letting the bandwidth factor decay like alpha_h / (1 + n alpha_h) keeps the
jitter from swamping the information gained at each step. The scaled
covariance n * Sigma_n / R then tends to 2 instead of diverging.
"""

import numpy as np

from rpflab import kalman
from rpflab.experiments import ExperimentConfig, Variant, exp_stationary
from rpflab.smc import Always, rule_of_thumb_alpha

alpha_h = rule_of_thumb_alpha(1000, 1)

# %%
# Exact evaluation of three schedules.
for name, seq in [
    ("constant", kalman.Constant(alpha_h)),
    ("harmonic", kalman.Harmonic(alpha_h)),
    ("exp-decay", kalman.ExponentialDecay(alpha_h)),
]:
    report = kalman.optimal_rate_check(seq, 10_000)
    print(f"{name:10s} n Sigma/R at 10^4 = {report.final:9.3f}   sup = {report.sup:9.3f}")

# %%
# The harmonic schedule inside a particle filter.
config = ExperimentConfig(n_particles=1000, horizon=1000, replicates=5, policy="always", schedule="harmonic")
result = exp_stationary(config, [Variant("rpf", Always(), config.schedule_object())])
ratio = result.summaries["rpf"].rmse_mean / result.overlays["kalman_rmse"]
print("RPF / exact RMSE at n = 10, 100, 1000:", np.round(ratio[[9, 99, 999]], 2))
