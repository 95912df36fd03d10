"""
Calibrating a crop model
========================

Three parameters of the LNAS sugarbeet model (radiation use efficiency,
light extinction and the allocation midpoint) are appended to the state
and estimated from noisy biomass records driven by synthetic weather.
"""

from rpflab.experiments import ExperimentConfig, exp_lnas

config = ExperimentConfig(model="lnas", n_particles=1000, horizon=100, snapshot=100, replicates=3)
result = exp_lnas(config)

print("truth:", dict(zip(("RUE", "gamma", "mu_a"), config.theta)))
for name, stat, value, std in result.table:
    print(f"{name:6s} {stat:18s} {value:10.4f}  (+/- {std:.3g})")
