"""Nonparametric estimation of mixture cure models.

Kernel (Beran-type) estimators of the cure probability and of the latency
as functions of a continuous covariate, a weighted-bootstrap bandwidth
selector, closed-form truth for two benchmark models with an AMSE
oracle, and Monte Carlo tooling.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    CuredSlice,
    DegenerateCovariate,
    DegenerateCurvature,
    DomainError,
    EmptyNeighborhood,
    GridTooSmall,
    NpcureError,
    QuadratureFailure,
)
from .kernel_weights import Kernel, WeightVector, kernel_constants, kernel_eval, nw_weights  # noqa: E402
from .beran import (  # noqa: E402
    BeranCurve,
    Observation,
    SurvivalSample,
    beran_fit,
    conditional_empirical,
    cumulative_hazard,
    subdistribution_estimates,
)
from .cure_estimators import (  # noqa: E402
    CureFit,
    cure_fit,
    hazard_jumps,
    identifiability_diagnostic,
    incidence,
    latency,
    local_loglikelihood,
)
from .bandwidth_select import (  # noqa: E402
    BandwidthGrid,
    BandwidthSearch,
    BootstrapConfig,
    PilotRule,
    bootstrap_mse,
    bootstrap_resample,
    pilot_global,
    pilot_local,
    select_bandwidth,
    smooth_bandwidths,
)
from .truth_oracle import (  # noqa: E402
    ModelTruth,
    amse,
    amse_optimal_bandwidth,
    amse_report,
    get_model,
    model1,
    model2,
    true_incidence,
    true_latency,
    true_subdistributions,
)
from .sim_engine import (  # noqa: E402
    ExperimentPlan,
    MonteCarloReport,
    gen_sample,
    mc_bootstrap_bandwidth_study,
    mc_incidence_mse,
    incidence_mse_at,
    mc_latency_mise,
)

__all__ = [
    "amse",
    "amse_optimal_bandwidth",
    "amse_report",
    "BandwidthGrid",
    "BandwidthSearch",
    "beran_fit",
    "BeranCurve",
    "bootstrap_mse",
    "bootstrap_resample",
    "BootstrapConfig",
    "conditional_empirical",
    "cumulative_hazard",
    "cure_fit",
    "CuredSlice",
    "CureFit",
    "DegenerateCovariate",
    "DegenerateCurvature",
    "DomainError",
    "EmptyNeighborhood",
    "ExperimentPlan",
    "gen_sample",
    "get_model",
    "GridTooSmall",
    "hazard_jumps",
    "identifiability_diagnostic",
    "incidence",
    "incidence_mse_at",
    "Kernel",
    "kernel_constants",
    "kernel_eval",
    "latency",
    "local_loglikelihood",
    "mc_bootstrap_bandwidth_study",
    "mc_incidence_mse",
    "mc_latency_mise",
    "model1",
    "model2",
    "ModelTruth",
    "MonteCarloReport",
    "NpcureError",
    "nw_weights",
    "Observation",
    "pilot_global",
    "pilot_local",
    "PilotRule",
    "QuadratureFailure",
    "select_bandwidth",
    "smooth_bandwidths",
    "subdistribution_estimates",
    "SurvivalSample",
    "true_incidence",
    "true_latency",
    "true_subdistributions",
    "WeightVector",
]
