"""Equilibrium computation for transmission-constrained networked Cournot
electricity markets with a strategic market maker."""

from .equilibrium import (
    CycleInfo,
    GneResult,
    ScanCell,
    ScanReport,
    SearchConfig,
    SearchStatus,
    VerificationReport,
    brute_force_gne_scan,
    gne_search,
    rebalance_bound,
    search_box,
    verify_gne,
)
from .model import (
    MarketOutcome,
    MarketParams,
    NetworkModel,
    Objective,
    generator_profit,
    is_feasible_rebalance,
    load_instance,
    market_outcome,
    merchandising_surplus,
    price,
    shift_factors_from_susceptances,
    welfare,
)
from .polytope import (
    DimensionLimitError,
    PolytopeEmptyError,
    RebalancePolytope,
    SeparableQuadratic,
    build_polytope,
    enumerate_vertices,
    maximize_concave_quadratic,
    maximize_convex_quadratic_on_vertices,
)
from .responses import (
    ResponseReport,
    generator_best_response,
    generator_best_responses,
    market_maker_quadratic,
    market_maker_response,
)
from .twonode import (
    ExistenceVerdict,
    TwoNodeParams,
    classify_existence,
    from_instance,
    point_to_vectors,
    threshold_f0,
    threshold_f1,
    thresholds,
    two_node_instance,
    unconstrained_equilibrium,
)

__version__ = "0.1.0"

__all__ = [
    "CycleInfo",
    "DimensionLimitError",
    "ExistenceVerdict",
    "GneResult",
    "MarketOutcome",
    "MarketParams",
    "NetworkModel",
    "Objective",
    "PolytopeEmptyError",
    "RebalancePolytope",
    "ResponseReport",
    "ScanCell",
    "ScanReport",
    "SearchConfig",
    "SearchStatus",
    "SeparableQuadratic",
    "TwoNodeParams",
    "VerificationReport",
    "brute_force_gne_scan",
    "build_polytope",
    "classify_existence",
    "enumerate_vertices",
    "from_instance",
    "generator_best_response",
    "generator_best_responses",
    "generator_profit",
    "gne_search",
    "is_feasible_rebalance",
    "load_instance",
    "market_maker_quadratic",
    "market_maker_response",
    "market_outcome",
    "maximize_concave_quadratic",
    "maximize_convex_quadratic_on_vertices",
    "merchandising_surplus",
    "point_to_vectors",
    "price",
    "rebalance_bound",
    "search_box",
    "shift_factors_from_susceptances",
    "threshold_f0",
    "threshold_f1",
    "thresholds",
    "two_node_instance",
    "unconstrained_equilibrium",
    "verify_gne",
    "welfare",
]
