"""
Monte Carlo error curves
========================

Incidence MSE over a bandwidth grid and latency MISE over a second grid,
at a few covariate values, from repeated samples of one model.
"""

import numpy as np

from npcure import ExperimentPlan, mc_incidence_mse, mc_latency_mise

plan = ExperimentPlan(
    model=1, sample_sizes=(100,), replications=100, x_grid=(-10.0, 0.0, 10.0),
    h_grid=tuple(np.geomspace(1.2, 20, 12)), b_grid=(10.0, 15.01, 25.0, 40.0), seed=4,
)
mse = mc_incidence_mse(plan).mse
for x in plan.x_grid:
    rows = mse[mse[:, 1] == x]
    best = rows[np.nanargmin(rows[:, 3])]
    print(f"x={x:5.1f}: min MSE {best[3]:.4f} at h={best[2]:.2f}; failed cells {int(rows[:, 5].sum())}")

mise = mc_latency_mise(plan).mise
print("latency MISE at x=-10 by b:", np.round(mise[mise[:, 1] == -10.0][:, 3], 4))
