"""Exact analysis of the symmetric two-node market.

Covers the regime with a shared demand intercept ``a``, slopes
``b1 > b2`` with ``b1/b2 <= 3``, a shared cost coefficient ``c`` and a
single line of capacity ``f`` (possibly unlimited). In this regime the
consumer-surplus market maker's inner problem reduces to maximizing a
strictly convex quadratic of the scalar transfer ``r := r_1 = -r_2``
over an interval, so everything can be worked out in closed form:

* two capacity thresholds ``f0`` and ``f1`` delimit, together with
  ``a/(b2+2c)``, ``a/b1`` and ``a/(3b1+2c)``, exactly which capacities
  admit a consumer-surplus equilibrium;
* with an unlimited line, all three objectives admit closed-form
  equilibria whose transfers have opposite signs (negative for social
  welfare, zero for residual welfare, positive for consumer surplus).

Outside this parameter regime use the numeric search instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MarketParams, NetworkModel, Objective


@dataclass(frozen=True)
class TwoNodeParams:
    """Symmetric two-node market: node 1 carries the steeper demand slope."""

    a: float
    b1: float
    b2: float
    c: float
    f: float | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.b2 > 0:
            raise ValueError("b2 must be positive")
        ratio = self.b1 / self.b2
        if not 1.0 < ratio <= 3.0:
            raise ValueError(f"requires 1 < b1/b2 <= 3, got ratio {ratio}")
        if self.f is not None and not self.f >= 0:
            raise ValueError("line capacity f must be nonnegative")


@dataclass(frozen=True)
class ExistenceVerdict:
    """Consumer-surplus existence answer for one capacity value.

    ``matched_condition`` names which of the four capacity regimes with
    an equilibrium applies (None when none does). ``equilibrium`` is the
    closed-form point (q1, q2, r) when one is available; conditions with
    no printed closed form defer the point to the numeric search.
    ``boundary`` flags capacities within ``boundary_tol`` of a threshold,
    where floating-point classification is fragile.
    """

    exists: bool
    matched_condition: int | None
    thresholds: dict
    equilibrium: tuple | None
    boundary: bool


def thresholds(p: TwoNodeParams) -> dict:
    """The five capacity thresholds governing consumer-surplus existence."""
    return {
        "uncongested": p.a / (p.b2 + 2.0 * p.c),
        "node1_demand_root": p.a / p.b1,
        "small_cap": p.a / (3.0 * p.b1 + 2.0 * p.c),
        "f0": threshold_f0(p),
        "f1": threshold_f1(p),
    }


def threshold_f0(p: TwoNodeParams) -> float:
    """Capacity above which the full-export candidate beats the reverse one.

    Between ``small_cap`` and ``uncongested`` the only equilibrium
    candidate ships the full capacity toward node 1; it survives the
    two-endpoint payoff comparison exactly when f >= f0.
    """
    a, b1, b2, c = p.a, p.b1, p.b2, p.c
    numer = a * b2 * (b1 + b2 + c * (3.0 - b1 / b2))
    denom = b1 * b2 * (b1 + b2) + b1 * (b1 + 5.0 * b2) * c + 2.0 * (b1 + b2) * c * c
    return numer / denom


def threshold_f1(p: TwoNodeParams) -> float:
    """Capacity below which full-capacity import into node 1 stays optimal.

    Relevant when the line is so small that both endpoints of the
    transfer interval are capacity-limited; zero when b1 == b2.
    """
    a, b1, b2, c = p.a, p.b1, p.b2, p.c
    return a * c * (b1 - b2) / (b1 * b2 * (b1 + b2) + c * (b1 * b1 + b2 * b2))


def _case1_point(p: TwoNodeParams) -> tuple[float, float, float]:
    # uncongested consumer-surplus equilibrium: transfer equals node-2 output
    a, b1, b2, c = p.a, p.b1, p.b2, p.c
    r = a / (b2 + 2.0 * c)
    q2 = r
    if b1 < b2 + 2.0 * c:
        q1 = a * (2.0 * c + b2 - b1) / (2.0 * (b1 + c) * (b2 + 2.0 * c))
    else:
        q1 = 0.0
    return q1, q2, r


def _capped_transfer_point(p: TwoNodeParams, f: float) -> tuple[float, float, float]:
    # equilibrium with the transfer pinned at +f (imports into node 1)
    a, b1, b2, c = p.a, p.b1, p.b2, p.c
    q2 = (a + b2 * f) / (2.0 * (b2 + c))
    q1 = (a - b1 * f) / (2.0 * (b1 + c)) if f <= a / b1 else 0.0
    return q1, q2, f


def classify_existence(
    p: TwoNodeParams, boundary_tol: float = 1e-9
) -> ExistenceVerdict:
    """Decide consumer-surplus GNE existence for the given capacity.

    Evaluates the four-regime partition of the capacity axis with the
    weak/strict inequality pattern taken literally; an unlimited line
    always lands in condition 1. A closed-form equilibrium accompanies
    conditions 1 to 3; condition 4 defers the point to the numeric
    search.
    """
    th = thresholds(p)
    if p.f is None:
        return ExistenceVerdict(
            exists=True,
            matched_condition=1,
            thresholds=th,
            equilibrium=_case1_point(p),
            boundary=False,
        )
    f = float(p.f)
    boundary = any(abs(f - t) <= boundary_tol for t in th.values())
    uncongested = th["uncongested"]
    root1 = th["node1_demand_root"]
    small = th["small_cap"]
    condition: int | None = None
    equilibrium: tuple | None = None
    if f >= uncongested:
        condition = 1
        equilibrium = _case1_point(p)
    elif f > root1:
        condition = 3
        equilibrium = _capped_transfer_point(p, f)
    elif small <= f and th["f0"] <= f:
        condition = 2
        equilibrium = _capped_transfer_point(p, f)
    elif f <= small and f <= th["f1"]:
        condition = 4
        equilibrium = None  # no printed closed form; defer to gne_search
    return ExistenceVerdict(
        exists=condition is not None,
        matched_condition=condition,
        thresholds=th,
        equilibrium=equilibrium,
        boundary=boundary,
    )


def unconstrained_equilibrium(
    p: TwoNodeParams, objective: Objective
) -> tuple[float, float, float]:
    """Closed-form equilibrium (q1, q2, r) when the line has no limit.

    The transfer r (positive = node 1 imports) comes out negative under
    social welfare, zero under residual welfare and positive under
    consumer surplus. Requires ``p.f is None``; with a finite capacity
    use :func:`classify_existence` or the numeric search.
    """
    if p.f is not None:
        raise ValueError("closed forms require an unlimited line (f=None)")
    a, b1, b2, c = p.a, p.b1, p.b2, p.c
    if objective is Objective.SOCIAL_WELFARE:
        r = (
            a
            * c
            * (b2 - b1)
            / ((b1 + b2) * (b1 * b2 + 2.0 * c * c) + c * (b1 * b1 + b2 * b2 + 4.0 * b1 * b2))
        )
        q1 = (a - b1 * r) / (2.0 * (b1 + c))
        q2 = (a + b2 * r) / (2.0 * (b2 + c))
        return q1, q2, r
    if objective is Objective.RESIDUAL_SOCIAL_WELFARE:
        return a / (2.0 * (b1 + c)), a / (2.0 * (b2 + c)), 0.0
    if objective is Objective.CONSUMER_SURPLUS:
        return _case1_point(p)
    raise ValueError(f"unknown objective {objective!r}")


def two_node_instance(p: TwoNodeParams) -> tuple[NetworkModel, MarketParams]:
    """Materialize the two-node market as generic network/market objects.

    Node 0 is the steep-slope node; the single line carries the transfer
    into it, so flow equals ``-r_1`` under the sign conventions of
    :mod:`netcournot.model`.
    """
    f = math.inf if p.f is None else float(p.f)
    net = NetworkModel(n=2, H=np.array([[1.0, 0.0]]), f=np.array([f]))
    params = MarketParams(a=[p.a, p.a], b=[p.b1, p.b2], c=[p.c, p.c])
    return net, params


def from_instance(
    net: NetworkModel, params: MarketParams
) -> tuple[TwoNodeParams, bool] | None:
    """Recognize a generic instance as a symmetric two-node market.

    Returns (params, swapped) where ``swapped`` records that the steep
    node is the instance's second node, or None when the instance is
    outside the analytic regime (different intercepts or costs, slope
    ratio out of range, or a transfer structure more complex than one
    effective line).
    """
    if net.n != 2 or params.a[0] != params.a[1] or params.c[0] != params.c[1]:
        return None
    b = params.b
    if b[0] == b[1] or min(b) <= 0:
        return None
    swapped = bool(b[1] > b[0])
    b1, b2 = (float(b[1]), float(b[0])) if swapped else (float(b[0]), float(b[1]))
    if not 1.0 < b1 / b2 <= 3.0:
        return None
    hi = 1 if swapped else 0
    lo = 1 - hi
    # effective transfer cap: each line sees |(H[e,hi]-H[e,lo]) * r_hi|
    eff = math.inf
    for e in range(net.ell):
        gain = abs(net.H[e, hi] - net.H[e, lo])
        if gain <= 1e-12:
            continue
        eff = min(eff, net.f[e] / gain)
    f = None if math.isinf(eff) else float(eff)
    try:
        p = TwoNodeParams(a=float(params.a[0]), b1=b1, b2=b2, c=float(params.c[0]), f=f)
    except ValueError:
        return None
    return p, swapped


def point_to_vectors(
    point: tuple[float, float, float], swapped: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Expand an analytic (q1, q2, r) triple into length-2 q and r vectors."""
    q1, q2, r = point
    if swapped:
        return np.array([q2, q1]), np.array([-r, r])
    return np.array([q1, q2]), np.array([r, -r])
