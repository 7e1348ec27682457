"""Online Euclidean matching under smooth request distributions.

Library plus batch CLI: sigma-smooth request sampling, the dyadic HST
embedding, the random-subtree online algorithm, the one-sample-per-
distribution reduction, exact offline optima, and exact evaluators for the
proven cost bounds and lower-bound diagnostics.
"""

from .assignment import BACKEND as ASSIGNMENT_BACKEND
from .embedding import (
    ContractViolation,
    DyadicEmbedding,
    choose_height,
    dyadic_leaf,
    lift_algorithm,
    translate_cost,
)
from .hst import HstTopology, NodeCounts, NodeId, expected_counts, subtree_counts
from .metric_core import (
    SmoothDistribution,
    binomial_mad_bound_check,
    euclid_dist,
    majorizes,
    mean_abs_dev,
    poisson_binomial_pmf,
    subcube_histogram,
)
from .offline_opt import (
    Matching,
    crossing_count,
    hst_opt_cost,
    lb_reference,
    min_cost_matching,
    nearest_neighbor_mean,
    obstacle_integral_d1,
    sorted_matching_cost_1d,
    window_expected_mass,
    window_mass_integral,
)
from .online_algorithms import (
    BoundParams,
    GreedyMatcher,
    OnlineState,
    RandomSubtreeMatcher,
    bbgn_theorem_bound,
    corollary_bounds,
    greedy_serve,
    harmonic,
    lifted_rs_matcher,
    make_state,
    rs_instance_bound,
    rs_serve,
    rs_theorem_bound,
    run_online,
)
from .reduction import ProxyMap, ReducedMatcher, build_proxy, reduced_serve
from .rng import stream

__version__ = "0.1.0"
