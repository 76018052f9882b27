"""Spatial random-graph sampling, couplings, and Monte Carlo bound checks."""

from .errors import BudgetError, DomainError
from .kernels import (
    BoundConstants,
    EnvelopeParams,
    KernelVariant,
    ModelParams,
    alpha_reduced_params,
    connection_prob,
    delta_exponent,
    envelope_G_log,
    pareto_quantile,
    shape_radii,
    tail_bound_fpp_log,
    tail_bound_lrp,
    tail_bound_sfp,
    tau_prime_max,
)
from .sampler import (
    BoxSpec,
    CffpRealization,
    CostMap,
    Model,
    RateModel,
    SampledGraph,
    edge_uniform,
    load_graph,
    sample_cffp_costs,
    sample_fpp_costs,
    sample_graph,
    sample_weights,
    save_graph,
    vertex_uniform,
)
from .metrics import (
    BallKind,
    BallSeries,
    ball_series,
    brute_force_cost_distance,
    brute_force_distance,
    cost_distance,
    graph_distance,
    k_ball,
    t_ball,
)
from .couplings import (
    BlowupSpec,
    CouplingKind,
    CouplingReport,
    aggregate_weight,
    blowup_box_map,
    blowup_lrp,
    couple_alpha,
    fpp_cffp_edge_check,
    min_exp_inequality,
    path_stitch_bound,
    weight_dominance_test,
)
from .estimators import (
    ComplianceReport,
    GrowthSeries,
    ModelConfig,
    TailEstimate,
    bk_brute_force,
    bk_brute_force_k,
    bound_compliance,
    calibrate_sum_exp_constant,
    fit_distance_exponent,
    fit_shape_constant,
    fkt_h_functional,
    mc_ball_growth,
    mc_tail,
    mc_tail_grid,
    shape_containment,
    sum_exp_tail,
    wilson_interval,
)

__version__ = "0.1.0"
