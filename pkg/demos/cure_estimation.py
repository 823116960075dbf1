"""
Cure probability and latency along the covariate
=================================================

The cure probability at x is the Beran curve evaluated at the largest
uncensored time; the latency rescales the curve to the uncured subjects.
"""

import numpy as np

from npcure import CuredSlice, cure_fit, identifiability_diagnostic
from npcure.sim_engine import gen_sample
from npcure.truth_oracle import model2, true_incidence, true_latency

truth = model2()
sample = gen_sample(truth, 500, seed=3)

# the latency support ends before the censoring support, so censored
# subjects remain beyond the last event
report = identifiability_diagnostic(sample)
print("T1max = %.3f, censored beyond it: %d, warning: %s"
      % (report.largest_uncensored_time, report.n_censored_beyond, report.warning))

print("   x   cure est  cure true   S0(0.8) est  S0(0.8) true")
for x in np.linspace(-15, 15, 7):
    try:
        fit = cure_fit(sample, x, h=5.0, b=8.0)
        s0 = fit.latency_curve(0.8)
    except CuredSlice:  # everybody estimated cured at this x
        s0 = np.nan
    print(f"{x:5.1f}   {fit.cure_probability:.3f}     {true_incidence(truth, x):.3f}"
          f"       {s0:.3f}        {true_latency(truth, x, 0.8):.3f}")
