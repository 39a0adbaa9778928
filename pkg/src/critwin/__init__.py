"""critwin: critical-window epidemic/random-graph simulation and verification.

Samples the discrete objects (ER graph explorations, the height-profile
chain, cousin statistics), simulates their continuum limits (parabolic-drift
Brownian motion, the absorbed square-root SDE, deterministic curves), and
grades the two layers against each other statistically.
"""
from .analysis import (
    ComparisonReport,
    RescaledPath,
    fit_loglog_slope,
    ks_statistic,
    ks_two_sample,
    rescale,
    scale_pair,
    sup_distance,
)
from .chain import (
    EpidemicTrace,
    KernelExact,
    K_at_indices,
    csn_at_indices,
    exact_kernel,
    exact_profile_distribution,
    q_prob,
    simulate_trace,
    step,
)
from .continuum import (
    DeterministicLimit,
    HittingSample,
    ParabolicBMPath,
    SdePath,
    eval_deterministic,
    hitting_ensemble,
    lamperti_marginals,
    lamperti_route,
    sample_hitting_time,
    sample_parabolic_bm,
    sde_ensemble,
    self_similarity_test,
    simulate_sde,
)
from .core import (
    AldousWindow,
    ConfigError,
    CriticalWindow,
    CritwinError,
    GeneralWindow,
    InvalidWindowError,
    RngStream,
    RunConfig,
    derive_k,
    edge_probability,
    make_stream,
    parse_config_file,
)
from .graph import (
    CousinSeries,
    Exploration,
    GraphSample,
    WalkPath,
    breadth_first_walk,
    cousin_series,
    explore,
    explore_from_roots,
    infected_total,
    sample_graph,
)
from .moments import BoundSweep, MomentTriple, bound_sweep, kappa_oracle, moment_triple
from .verify import SUITES, run_suite

__version__ = "0.1.0"
