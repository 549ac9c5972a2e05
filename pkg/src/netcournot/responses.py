"""Best-response maps for the generators and the market maker.

Given the re-balancing quantities, each generator's profit depends only
on its own production, so its best response has a closed form. The
market maker's problem is a separable quadratic over the re-balancing
polytope: concave for social and residual welfare, convex for consumer
surplus (where the maximizers sit on vertices and may tie).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MarketParams, NetworkModel, Objective, welfare
from .polytope import (
    DEFAULT_TIE_TOL,
    SeparableQuadratic,
    build_polytope,
    maximize_concave_quadratic,
    maximize_convex_quadratic_on_vertices,
)

MARKET_MAKER = "market_maker"


@dataclass(frozen=True)
class ResponseReport:
    """Outcome of one player's optimization against fixed opponents.

    ``alternatives`` lists near-optimal maximizers (consumer-surplus
    market maker only, where vertex ties are possible); it always
    contains ``argmax`` itself in that case.
    """

    player: int | str
    argmax: np.ndarray | float
    payoff_at_argmax: float
    alternatives: tuple = ()


def generator_best_response(params: MarketParams, k: int, r_k: float) -> float:
    """Unique profit maximizer of generator k for a fixed r_k.

    The profit ``q*(a_k - b_k*(q + r_k)) - c_k*q**2`` is strictly concave
    in q, so the stationary point clamped at zero is the argmax:
    ``max(0, (a_k - b_k*r_k) / (2*(b_k + c_k)))``.
    """
    if not 0 <= k < params.n:
        raise IndexError(f"node index {k} out of range for n={params.n}")
    stationary = (params.a[k] - params.b[k] * r_k) / (2.0 * (params.b[k] + params.c[k]))
    return float(max(0.0, stationary))


def generator_best_responses(params: MarketParams, r) -> np.ndarray:
    """Vectorized best responses of all generators against r."""
    r = np.asarray(r, dtype=float)
    stationary = (params.a - params.b * r) / (2.0 * (params.b + params.c))
    return np.maximum(0.0, stationary)


def market_maker_quadratic(
    params: MarketParams, q, objective: Objective
) -> SeparableQuadratic:
    """The r-dependent part of the selected payoff, as a separable quadratic.

    Constant-in-r terms are dropped; use :func:`netcournot.model.welfare`
    for actual payoff values.
    """
    q = np.asarray(q, dtype=float)
    if objective is Objective.SOCIAL_WELFARE:
        return SeparableQuadratic(linear=params.a - params.b * q, curvature=-params.b)
    if objective is Objective.RESIDUAL_SOCIAL_WELFARE:
        return SeparableQuadratic(linear=params.a.copy(), curvature=-params.b)
    if objective is Objective.CONSUMER_SURPLUS:
        return SeparableQuadratic(linear=params.b * q, curvature=params.b)
    raise ValueError(f"unknown objective {objective!r}")


def market_maker_response(
    net: NetworkModel,
    params: MarketParams,
    q,
    objective: Objective,
    tol: float = 1e-9,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> ResponseReport:
    """Exact market maker response to a fixed production vector.

    Dispatches to the concave solver for social and residual welfare and
    to the vertex scan for consumer surplus. In the vertex case the
    report carries the whole near-optimal set so equilibrium checks can
    accept any maximizer.
    """
    q = np.asarray(q, dtype=float)
    poly = build_polytope(net, q)
    quad = market_maker_quadratic(params, q, objective)
    if objective is Objective.CONSUMER_SURPLUS:
        r_star, near = maximize_convex_quadratic_on_vertices(poly, quad, tie_tol=tie_tol, tol=tol)
        alternatives = tuple(near)
    else:
        r_star = maximize_concave_quadratic(poly, quad, tol=tol)
        alternatives = ()
    return ResponseReport(
        player=MARKET_MAKER,
        argmax=r_star,
        payoff_at_argmax=welfare(params, q, r_star, objective),
        alternatives=alternatives,
    )
