"""Domain types and closed-form market quantities.

The market lives on a power network with ``n`` nodes. Each node hosts a
generator producing ``q_k >= 0`` at quadratic cost ``c_k * q_k**2`` and an
aggregate consumer with linear inverse demand ``p_k(d) = a_k - b_k * d``.
A market maker moves power between nodes by choosing re-balancing
quantities ``r`` (positive means the node imports), so node ``k`` consumes
``d_k = q_k + r_k``.

Sign conventions used throughout:

* line flows are ``H @ (-r)``, i.e. flows respond to the injection
  vector ``-r``;
* prices are never clamped at zero. Negative prices are meaningful and
  several equilibrium arguments depend on them being representable.

The consumer utility integral is always evaluated in closed form as
``a*d - (b/2)*d**2``, never numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

DEFAULT_FEASIBILITY_TOL = 1e-9


class Objective(Enum):
    """Market maker payoff selector.

    SOCIAL_WELFARE: consumer utility minus generation cost.
    RESIDUAL_SOCIAL_WELFARE: consumer utility minus generator revenue.
    CONSUMER_SURPLUS: consumer utility minus consumer payments.
    """

    SOCIAL_WELFARE = "soc"
    RESIDUAL_SOCIAL_WELFARE = "res"
    CONSUMER_SURPLUS = "con"


def _frozen_array(values, *, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NetworkModel:
    """Physical substrate: node count, shift factors, line capacities.

    ``H`` is an ``ell x n`` matrix mapping nodal injections to line flows
    (MW per MW). ``f`` holds nonnegative line capacities in MW; an entry
    of ``math.inf`` marks a line without a flow limit.
    """

    n: int
    H: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if self.n < 1:
            raise ValueError(f"need at least one node, got n={self.n}")
        if H.size == 0:
            H = H.reshape(0, self.n)
        if H.shape != (len(f), self.n):
            raise ValueError(
                f"H has shape {H.shape}, expected ({len(f)}, {self.n})"
            )
        if np.any(f < 0) or np.any(np.isnan(f)):
            raise ValueError("line capacities must be nonnegative")
        object.__setattr__(self, "H", _frozen_array(H))
        object.__setattr__(self, "f", _frozen_array(f))

    @property
    def ell(self) -> int:
        """Number of lines."""
        return len(self.f)


@dataclass(frozen=True)
class MarketParams:
    """Per-node demand intercepts/slopes and generator cost coefficients.

    Invariants: ``a > 0``, ``b >= 0``, ``c > 0`` element-wise. ``b == 0``
    (perfectly elastic demand) is representable here but rejected by the
    solvers that need strict concavity.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if not (len(a) == len(b) == len(c)):
            raise ValueError("a, b, c must have equal length")
        if not np.all(a > 0):
            raise ValueError("demand intercepts a must be positive")
        if not np.all(b >= 0):
            raise ValueError("demand slopes b must be nonnegative")
        if not np.all(c > 0):
            raise ValueError("cost coefficients c must be positive")
        object.__setattr__(self, "a", _frozen_array(a))
        object.__setattr__(self, "b", _frozen_array(b))
        object.__setattr__(self, "c", _frozen_array(c))

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class MarketOutcome:
    """A (q, r) profile together with everything derived from it."""

    q: np.ndarray
    r: np.ndarray
    d: np.ndarray
    prices: np.ndarray
    flows: np.ndarray
    profits: np.ndarray
    w_soc: float
    w_res: float
    w_con: float
    merch_surplus: float

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "r": self.r.tolist(),
            "d": self.d.tolist(),
            "prices": self.prices.tolist(),
            "flows": self.flows.tolist(),
            "profits": self.profits.tolist(),
            "w_soc": self.w_soc,
            "w_res": self.w_res,
            "w_con": self.w_con,
            "merch_surplus": self.merch_surplus,
        }


def _check_index(params: MarketParams, k: int) -> None:
    if not 0 <= k < params.n:
        raise IndexError(f"node index {k} out of range for n={params.n}")


def price(params: MarketParams, k: int, d_k: float) -> float:
    """Inverse demand at node k: ``a_k - b_k * d_k``. May be negative."""
    _check_index(params, k)
    return float(params.a[k] - params.b[k] * d_k)


def generator_profit(params: MarketParams, k: int, q, r) -> float:
    """Profit of generator k: ``q_k * p_k(q_k + r_k) - c_k * q_k**2``."""
    _check_index(params, k)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    p = price(params, k, float(q[k] + r[k]))
    return float(q[k] * p - params.c[k] * q[k] ** 2)


def _utility(params: MarketParams, d: np.ndarray) -> np.ndarray:
    # closed-form integral of the inverse demand from 0 to d
    return params.a * d - 0.5 * params.b * d * d


def welfare(params: MarketParams, q, r, objective: Objective) -> float:
    """Evaluate the selected market maker payoff at the profile (q, r).

    Consumer utility minus, respectively: generation cost (social
    welfare), generator revenue (residual social welfare), or consumer
    payments (consumer surplus).
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    if q.shape != (params.n,) or r.shape != (params.n,):
        raise ValueError("q and r must be length-n vectors")
    d = q + r
    utility = float(np.sum(_utility(params, d)))
    prices = params.a - params.b * d
    if objective is Objective.SOCIAL_WELFARE:
        return utility - float(np.sum(params.c * q * q))
    if objective is Objective.RESIDUAL_SOCIAL_WELFARE:
        return utility - float(np.sum(q * prices))
    if objective is Objective.CONSUMER_SURPLUS:
        return utility - float(np.sum(d * prices))
    raise ValueError(f"unknown objective {objective!r}")


def merchandising_surplus(params: MarketParams, q, r) -> float:
    """Total demand payments minus total generator revenue.

    Equals ``sum_k r_k * p_k(q_k + r_k)``; zero whenever ``r == 0``.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    d = q + r
    prices = params.a - params.b * d
    return float(np.sum(r * prices))


def market_outcome(net: NetworkModel, params: MarketParams, q, r) -> MarketOutcome:
    """Bundle a (q, r) profile with prices, flows, profits and welfare."""
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    if q.shape != (net.n,) or r.shape != (net.n,):
        raise ValueError("q and r must be length-n vectors")
    d = q + r
    prices = params.a - params.b * d
    flows = net.H @ (-r)
    profits = q * prices - params.c * q * q
    return MarketOutcome(
        q=_frozen_array(q),
        r=_frozen_array(r),
        d=_frozen_array(d),
        prices=_frozen_array(prices),
        flows=_frozen_array(flows),
        profits=_frozen_array(profits),
        w_soc=welfare(params, q, r, Objective.SOCIAL_WELFARE),
        w_res=welfare(params, q, r, Objective.RESIDUAL_SOCIAL_WELFARE),
        w_con=welfare(params, q, r, Objective.CONSUMER_SURPLUS),
        merch_surplus=merchandising_surplus(params, q, r),
    )


def is_feasible_rebalance(
    net: NetworkModel, q, r, tol: float = DEFAULT_FEASIBILITY_TOL
) -> bool:
    """Membership test for the market maker's feasible set.

    True iff ``q + r >= -tol``, ``|H r| <= f + tol`` element-wise and
    ``|sum(r)| <= tol``.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    if q.shape != (net.n,) or r.shape != (net.n,):
        raise ValueError("q and r must be length-n vectors")
    if np.any(q + r < -tol):
        return False
    if abs(float(np.sum(r))) > tol:
        return False
    if net.ell:
        flows = net.H @ r
        if np.any(np.abs(flows) > net.f + tol):
            return False
    return True


def shift_factors_from_susceptances(
    n: int,
    edges: list[tuple[int, int, float]],
    slack: int,
) -> np.ndarray:
    """Build the injection-to-flow matrix for a connected DC network.

    ``edges`` lists ``(from_node, to_node, susceptance)`` triples with
    0-based node indices; flow on an edge is positive in the from->to
    direction. The slack column of the result is zero, so the matrix
    maps any injection vector to flows with the imbalance absorbed at
    the slack node. For balanced injections the result is independent
    of the slack choice.
    """
    if not 0 <= slack < n:
        raise ValueError(f"slack node {slack} out of range for n={n}")
    ell = len(edges)
    incidence = np.zeros((ell, n))
    susceptance = np.zeros(ell)
    for e, (i, j, s) in enumerate(edges):
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"edge {e} endpoints ({i}, {j}) invalid")
        if not s > 0:
            raise ValueError(f"edge {e} susceptance must be positive, got {s}")
        incidence[e, i] = 1.0
        incidence[e, j] = -1.0
        susceptance[e] = s

    # connectivity check before attempting the reduced solve
    adjacency = [[] for _ in range(n)]
    for i, j, _ in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adjacency[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n:
        raise ValueError("network graph is not connected")

    weighted = susceptance[:, None] * incidence
    b_bus = incidence.T @ weighted
    keep = [k for k in range(n) if k != slack]
    reduced = b_bus[np.ix_(keep, keep)]
    H = np.zeros((ell, n))
    H[:, keep] = weighted[:, keep] @ np.linalg.inv(reduced)
    return H


def load_instance(source) -> tuple[NetworkModel, MarketParams]:
    """Read a network-plus-market description from JSON.

    ``source`` is a path to a JSON file or an already-parsed dict with
    the schema::

        {"nodes": [{"a": ..., "b": ..., "c": ...}, ...],
         "lines": [{"from": ..., "to": ..., "capacity": ...,
                    "susceptance": ...}, ...],
         "H": [[...], ...]}          # optional override

    Node indices in "lines" are 0-based. A null or missing "capacity"
    means the line has no flow limit. The optional "H" replaces the
    shift factors computed from susceptances (its row count must match
    the line list).
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = source
    try:
        nodes = doc["nodes"]
    except (TypeError, KeyError):
        raise ValueError("instance document must contain a 'nodes' list")
    if not nodes:
        raise ValueError("instance must define at least one node")
    n = len(nodes)
    params = MarketParams(
        a=[node["a"] for node in nodes],
        b=[node["b"] for node in nodes],
        c=[node["c"] for node in nodes],
    )
    lines = doc.get("lines", [])
    capacities = []
    edges = []
    for line in lines:
        cap = line.get("capacity")
        capacities.append(math.inf if cap is None else float(cap))
        edges.append((int(line["from"]), int(line["to"]), float(line.get("susceptance", 1.0))))
    if "H" in doc:
        H = np.asarray(doc["H"], dtype=float)
        if H.shape != (len(lines), n):
            raise ValueError(
                f"H override has shape {H.shape}, expected ({len(lines)}, {n})"
            )
    elif edges:
        H = shift_factors_from_susceptances(n, edges, slack=n - 1)
    else:
        H = np.zeros((0, n))
    net = NetworkModel(n=n, H=H, f=np.array(capacities))
    return net, params
