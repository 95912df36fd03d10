"""
Resampling gets rarer over time
===============================

With an ESS threshold the filter resamples only when the weights have
degenerated enough. In the stationary model the waiting time between
resampling events grows geometrically, by a factor 1 + beta each time.
"""

from rpflab.experiments import ExperimentConfig, exp_ess_spacing
from rpflab.kalman import beta_crit

for e in (0.3, 0.5, 0.8):
    print(f"ess_crit = {e}: 1 + beta = {1 + beta_crit(e):.3f}")

# %%
# Noiseless data put the filter in its most favourable regime.
config = ExperimentConfig(n_particles=1000, horizon=1000, policy="ess", oracle_mode=True, replicates=3)
report = exp_ess_spacing(config)
for seed, times, ratios in zip(config.replicate_seeds(), report.times, report.ratios):
    print(f"seed {seed}: events {times.tolist()}  ratios {[round(float(r), 2) for r in ratios]}")
