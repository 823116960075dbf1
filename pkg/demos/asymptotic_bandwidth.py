"""
Asymptotically optimal bandwidth
================================

With the true model in hand the AMSE of the cure-probability estimator
is available, and so is the bandwidth minimizing it.  A Monte Carlo run
shows how close the expansion is at a moderate sample size.
"""

from npcure import DegenerateCurvature, ExperimentPlan
from npcure.sim_engine import incidence_mse_at
from npcure.truth_oracle import amse_report, model1

truth = model1()
rep = amse_report(truth, 0.0, n=2000)
print(f"sigma^2 = {rep.sigma2:.4f}   mu = {rep.mu:.5f}   h_AMSE = {rep.h_amse:.3f}")

# the bandwidth shrinks like n^(-1/5)
for n in (500, 2000, 8000):
    print(n, round(amse_report(truth, 0.0, n).h_amse, 3))

# Monte Carlo MSE at h_AMSE (200 samples of size 2000)
plan = ExperimentPlan(sample_sizes=(2000,), replications=200, seed=11)
mc = incidence_mse_at(plan, 2000, 0.0, rep.h_amse)
print(f"AMSE {rep(rep.h_amse):.2e}   Monte Carlo MSE {mc:.2e}")

# where p'' vanishes the squared bias is of higher order and h_AMSE is infinite
try:
    amse_report(truth, -1.3296089385474859, 2000)
except DegenerateCurvature as exc:
    print("no finite optimum:", exc)
