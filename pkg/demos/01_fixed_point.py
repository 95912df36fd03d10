"""
Why a constant bandwidth stalls the filter
==========================================

A scalar constant is observed in Gaussian noise. The exact posterior
shrinks like R/n, but a regularized filter that resamples at every step
and jitters with a fixed bandwidth factor settles at a covariance of
about alpha_h * R. This script runs both and prints the gap.
"""

import numpy as np

from rpflab import kalman
from rpflab.experiments import ExperimentConfig, Variant, exp_stationary
from rpflab.smc import Always, RuleOfThumb, rule_of_thumb_alpha

# %%
# The rule-of-thumb bandwidth for N = 1000 particles in one dimension.
alpha_h = rule_of_thumb_alpha(1000, 1)
cov, resid = kalman.rpf_fixed_point(alpha_h, 0.25)
print(f"alpha_h = {alpha_h:.4f}")
print(f"predicted saturation RMSE = {kalman.asymptotic_rmse(cov, resid):.4f}")

# %%
# Five replicates of the filter, resampling every step.
config = ExperimentConfig(n_particles=1000, horizon=1000, replicates=5, policy="always")
result = exp_stationary(config, [Variant("rpf", Always(), RuleOfThumb())])
rmse = result.summaries["rpf"].rmse_mean
exact = result.overlays["kalman_rmse"]

for n in (10, 100, 1000):
    print(f"n = {n:4d}   RPF RMSE {rmse[n - 1]:.4f}   exact {exact[n - 1]:.4f}")

# %%
# The closed form tells the same story without any sampling: n * Sigma_n / R
# keeps growing with a constant bandwidth.
seq = kalman.covariance_sequence(kalman.Constant(alpha_h), 10_000, 1.0, 0.25)
print("n * Sigma_n / R at n = 10^4:", round(10_000 * seq[-1] / 0.25, 1))
