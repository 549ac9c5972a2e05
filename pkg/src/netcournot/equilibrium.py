"""Equilibrium search, verification, and a brute-force grid oracle.

An action profile (q*, r*) is a generalized Nash equilibrium (GNE) when
every generator's production is a best response to r* and r* maximizes
the market maker's payoff over the feasible set S(q*). The search here
iterates best responses round-robin; because the consumer-surplus
response can jump between polytope vertices, the iteration may cycle,
and a detected cycle is reported as *evidence* of nonexistence, never
proof. The grid scan provides independent corroboration with a
quantified resolution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    MarketOutcome,
    MarketParams,
    NetworkModel,
    Objective,
    is_feasible_rebalance,
    market_outcome,
    welfare,
)
from .polytope import (
    ConcaveQuadSolver,
    PolytopeEmptyError,
    SeparableQuadratic,
    VertexEnumerator,
    build_polytope,
    maximize_concave_quadratic,
)
from .responses import (
    generator_best_responses,
    market_maker_quadratic,
    market_maker_response,
)


class SearchStatus(Enum):
    CONVERGED = "converged"
    CYCLE_DETECTED = "cycle"
    ITERATION_LIMIT = "iteration_limit"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the best-response iteration and the grid oracle.

    ``search_box`` holds per-node production upper bounds; when None it
    is derived from the demand intercepts and the feasible re-balancing
    bound (see :func:`search_box`). ``scan_slack_factor`` scales the
    grid slack of the brute-force scan.
    """

    max_iter: int = 10000
    point_tol: float = 1e-8
    cycle_window: int = 64
    cycle_tol: float = 1e-6
    grid_steps: int = 200
    search_box: np.ndarray | None = None
    verify_tol: float = 1e-6
    tie_tol: float = 1e-8
    feas_tol: float = 1e-9
    scan_slack_factor: float = 1.0


@dataclass(frozen=True)
class CycleInfo:
    """Recurring best-response profiles and their period."""

    period: int
    profiles: tuple

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "profiles": [{"q": q.tolist(), "r": r.tolist()} for q, r in self.profiles],
        }


@dataclass(frozen=True)
class VerificationReport:
    """Per-player equilibrium certificates for a candidate (q, r)."""

    ok: bool
    generator_gaps: np.ndarray
    mm_payoff_gap: float
    tol: float

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "generator_gaps": np.asarray(self.generator_gaps).tolist(),
            "mm_payoff_gap": self.mm_payoff_gap,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class GneResult:
    """Outcome of an equilibrium search."""

    status: SearchStatus
    point: MarketOutcome | None
    cycle: CycleInfo | None
    trace: tuple
    iterations: int
    verification: VerificationReport | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "status": self.status.value,
            "iterations": self.iterations,
            "trace": {
                "max_change": list(self.trace),
                "final_change": self.trace[-1] if self.trace else None,
            },
            "point": self.point.to_dict() if self.point is not None else None,
            "cycle": self.cycle.to_dict() if self.cycle is not None else None,
            "verification": (
                self.verification.to_dict() if self.verification is not None else None
            ),
        }
        if self.status is SearchStatus.CYCLE_DETECTED:
            doc["note"] = (
                "best-response dynamics cycle: evidence that no equilibrium "
                "exists, not a proof"
            )
        return doc


def rebalance_bound(net: NetworkModel, params: MarketParams) -> float:
    """Upper bound on |r_k| over re-balancing vectors relevant at equilibrium.

    With finite line limits the set {|Hr| <= f, sum(r) = 0} is compact
    whenever H has rank n-1; the bound is then read off its vertices.
    Without binding lines the demand scale max(a/b) bounds any
    re-balancing a rational market maker would pick (beyond it the
    quadratic utility term dominates).
    """
    if np.any(params.b <= 0):
        raise ValueError("rebalance bound requires b > 0 at every node")
    demand_bound = float(np.max(params.a / params.b))
    finite = np.isfinite(net.f)
    if not np.any(finite):
        return demand_bound
    H_fin = net.H[finite]
    f_fin = net.f[finite]
    stacked = np.vstack([H_fin, np.ones((1, net.n))])
    if np.linalg.matrix_rank(stacked) < net.n:
        return demand_bound
    A = np.vstack([H_fin, -H_fin])
    u = np.concatenate([f_fin, f_fin])
    verts = VertexEnumerator(A).vertices(u, tol=1e-9)
    if not verts:
        return demand_bound
    line_bound = float(max(np.max(np.abs(v)) for v in verts))
    return min(line_bound, demand_bound)


def search_box(net: NetworkModel, params: MarketParams) -> np.ndarray:
    """Per-node production bounds [0, s_k] guaranteed to contain equilibria.

    ``s_k = a_k/b_k + (n-1)*rbar/b_k``: beyond it the nodal price is
    negative for any relevant re-balancing, so no profit-maximizing
    generator produces there.
    """
    if np.any(params.b <= 0):
        raise ValueError("search box requires b > 0 at every node")
    rbar = rebalance_bound(net, params)
    return params.a / params.b + (net.n - 1) * rbar / params.b


def gne_search(
    net: NetworkModel,
    params: MarketParams,
    objective: Objective,
    init: tuple | None = None,
    config: SearchConfig = SearchConfig(),
) -> GneResult:
    """Search for a GNE by round-robin best-response iteration.

    Each round updates every generator against the current re-balancing
    vector (generator payoffs do not couple to each other) and then lets
    the market maker respond exactly. Terminates when the profile stops
    moving (Converged, re-checked by :func:`verify_gne`), when a profile
    recurs and keeps recurring for a full extra period (CycleDetected),
    or at ``max_iter`` (IterationLimit).
    """
    n = net.n
    if init is None:
        q = np.zeros(n)
        r = np.zeros(n)
    else:
        q = np.asarray(init[0], dtype=float).copy()
        r = np.asarray(init[1], dtype=float).copy()
        if q.shape != (n,) or r.shape != (n,):
            raise ValueError("init vectors must have length n")
        if np.any(q < 0):
            raise ValueError("initial production must be nonnegative")
    if not is_feasible_rebalance(net, q, r, tol=config.feas_tol):
        try:
            poly = build_polytope(net, q)
            # Euclidean projection of r onto S(q)
            quad = SeparableQuadratic(linear=2.0 * r, curvature=-2.0 * np.ones(n))
            r = maximize_concave_quadratic(poly, quad, tol=config.feas_tol)
        except PolytopeEmptyError:
            return GneResult(
                status=SearchStatus.INFEASIBLE,
                point=None,
                cycle=None,
                trace=(),
                iterations=0,
            )

    def step(q_cur: np.ndarray, r_cur: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q_next = generator_best_responses(params, r_cur)
        resp = market_maker_response(
            net, params, q_next, objective, tol=config.feas_tol, tie_tol=config.tie_tol
        )
        return q_next, np.asarray(resp.argmax, dtype=float)

    history: list[np.ndarray] = [np.concatenate([q, r])]
    trace: list[float] = []
    for iteration in range(1, config.max_iter + 1):
        q_new, r_new = step(q, r)
        profile = np.concatenate([q_new, r_new])
        delta = float(np.max(np.abs(profile - history[-1])))
        trace.append(delta)
        q, r = q_new, r_new
        if delta < config.point_tol:
            verification = verify_gne(
                net, params, objective, q, r,
                tol=config.verify_tol, tie_tol=config.tie_tol,
            )
            status = (
                SearchStatus.CONVERGED if verification.ok else SearchStatus.ITERATION_LIMIT
            )
            return GneResult(
                status=status,
                point=market_outcome(net, params, q, r) if verification.ok else None,
                cycle=None,
                trace=tuple(trace),
                iterations=iteration,
                verification=verification,
            )
        cycle = _detect_cycle(profile, history, step, n, config)
        if cycle is not None:
            return GneResult(
                status=SearchStatus.CYCLE_DETECTED,
                point=None,
                cycle=cycle,
                trace=tuple(trace),
                iterations=iteration,
            )
        history.append(profile)
        if len(history) > config.cycle_window:
            history.pop(0)
    return GneResult(
        status=SearchStatus.ITERATION_LIMIT,
        point=None,
        cycle=None,
        trace=tuple(trace),
        iterations=config.max_iter,
    )


def _detect_cycle(
    profile: np.ndarray,
    history: list[np.ndarray],
    step,
    n: int,
    config: SearchConfig,
) -> CycleInfo | None:
    """Match the new profile against the sliding window and confirm the loop.

    A match at period p counts only if the loop's amplitude is large
    relative to the match tolerance (otherwise a damping oscillation
    that is still converging would be mistaken for a cycle) and if
    simulating one further period reproduces each recorded profile.
    """
    for period in range(2, len(history) + 1):
        if np.max(np.abs(profile - history[-period])) > config.cycle_tol:
            continue
        recorded = history[-period:]
        amplitude = max(float(np.max(np.abs(rec - profile))) for rec in recorded)
        if amplitude <= 10.0 * config.cycle_tol:
            continue
        q_sim = profile[:n].copy()
        r_sim = profile[n:].copy()
        confirmed = True
        for expected in recorded[1:] + [recorded[0]]:
            q_sim, r_sim = step(q_sim, r_sim)
            if np.max(np.abs(np.concatenate([q_sim, r_sim]) - expected)) > config.cycle_tol:
                confirmed = False
                break
        if confirmed:
            profiles = tuple((p[:n].copy(), p[n:].copy()) for p in recorded)
            return CycleInfo(period=period, profiles=profiles)
    return None


def verify_gne(
    net: NetworkModel,
    params: MarketParams,
    objective: Objective,
    q,
    r,
    tol: float = 1e-6,
    tie_tol: float = 1e-8,
) -> VerificationReport:
    """Check the equilibrium inequalities at (q, r), with certificates.

    True iff every generator's production is within ``tol`` of its
    closed-form best response and the market maker's payoff at r is
    within ``tol`` of the optimal payoff over S(q). The payoff-based
    market maker test makes this a *weak* GNE check: under maximizer
    ties any tied maximizer is accepted.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    if not is_feasible_rebalance(net, q, r, tol=max(tol, 1e-9)):
        raise ValueError("candidate (q, r) is not feasible: r outside S(q)")
    gaps = np.abs(q - generator_best_responses(params, r))
    resp = market_maker_response(net, params, q, objective, tie_tol=tie_tol)
    mm_gap = float(resp.payoff_at_argmax - welfare(params, q, r, objective))
    ok = bool(np.all(gaps <= tol) and mm_gap <= tol)
    return VerificationReport(
        ok=ok, generator_gaps=gaps, mm_payoff_gap=mm_gap, tol=tol
    )


@dataclass(frozen=True)
class ScanCell:
    """Connected component of grid points satisfying the GNE conditions."""

    q: np.ndarray
    r: np.ndarray
    br_gap: float
    size: int

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "r": self.r.tolist(),
            "br_gap": self.br_gap,
            "size": self.size,
        }


@dataclass(frozen=True)
class ScanReport:
    """Grid-scan outcome with the quantified slack of the certificate.

    An empty ``cells`` tuple means: no grid point admits an exact market
    maker maximizer (up to ``value_slack`` for vertex ties) against
    which every generator is within ``position_slack`` of its best
    response. Any true equilibrium inside the box would produce such a
    point, so emptiness is nonexistence evidence at this resolution.
    ``payoff_slack`` translates the positional slack into the payoff
    scale via the summed generator payoff Lipschitz bound on the box.
    """

    objective: Objective
    cells: tuple
    steps: int
    box: np.ndarray
    grid_step: float
    position_slack: float
    value_slack: float | None
    payoff_lipschitz_sum: float
    payoff_slack: float

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "cells": [cell.to_dict() for cell in self.cells],
            "steps": self.steps,
            "box": self.box.tolist(),
            "grid_step": self.grid_step,
            "position_slack": self.position_slack,
            "value_slack": self.value_slack,
            "payoff_lipschitz_sum": self.payoff_lipschitz_sum,
            "payoff_slack": self.payoff_slack,
        }


def brute_force_gne_scan(
    net: NetworkModel,
    params: MarketParams,
    objective: Objective,
    config: SearchConfig = SearchConfig(),
) -> ScanReport:
    """Independent existence oracle: exhaustive grid over production space.

    For every q on a regular grid over the search box, computes the
    exact market maker response set (all near-optimal vertices for
    consumer surplus, the unique maximizer otherwise) and accepts the
    point when some maximizer leaves every generator within the
    positional grid slack of its closed-form best response. Accepted
    grid points are merged into connected cells.
    """
    n = net.n
    if n > 3:
        raise DimensionLimitScanError(n)
    box = (
        np.asarray(config.search_box, dtype=float)
        if config.search_box is not None
        else search_box(net, params)
    )
    if box.shape != (n,):
        raise ValueError("search_box must have one bound per node")
    steps = config.grid_steps
    if steps < 2:
        raise ValueError("grid_steps must be at least 2")
    axes = [np.linspace(0.0, box[k], steps) for k in range(n)]
    h = float(np.max(box / (steps - 1)))
    rbar = rebalance_bound(net, params)

    position_slack = config.scan_slack_factor * h
    lipschitz = params.a + params.b * rbar + 2.0 * (params.b + params.c) * box
    payoff_lipschitz_sum = float(np.sum(lipschitz))
    payoff_slack = payoff_lipschitz_sum * h

    base = build_polytope(net, np.zeros(n))
    A = base.A
    n_rows = A.shape[0]
    f_part = base.u[n:]
    quad_at_zero = market_maker_quadratic(params, np.zeros(n), objective)
    convex = objective is Objective.CONSUMER_SURPLUS
    value_slack = None
    if convex:
        enumerator = VertexEnumerator(A)
    else:
        solver = ConcaveQuadSolver(A, quad_at_zero.curvature)

    a_vec, b_vec, c_vec = params.a, params.b, params.c
    b_sum = float(np.sum(b_vec))
    passing: dict[tuple, tuple[np.ndarray, np.ndarray, float]] = {}
    u = np.empty(n_rows)
    u[n:] = f_part
    for idx in itertools.product(range(steps), repeat=n):
        q_hat = np.array([axes[k][idx[k]] for k in range(n)])
        u[:n] = q_hat
        if convex:
            points, feasible, motions = enumerator.raw_candidates(
                u, tol=config.feas_tol, motion_rows=n
            )
            if not feasible.any():
                continue
            stacked = points[feasible]
            mots = motions[feasible]
            # consumer surplus in r: (b*q) . r + (b/2) . r^2, constants dropped
            values = stacked @ (b_vec * q_hat) + 0.5 * (stacked * stacked) @ b_vec
            best_at = int(np.argmax(values))
            # A vertex is a possible maximizer for some q in this grid
            # cell only if its payoff deficit against the current best
            # can close within a move of h/2 per q axis. The deficit
            # gradient splits into a direct part, b |d_best - d_v| with
            # d = q + r, and vertex-motion parts b |d| |dv/dq| (zero for
            # vertices pinned by line limits alone); a quadratic tail
            # covers the curvature over the move.
            demand = q_hat[None, :] + stacked
            direct = np.abs(demand - demand[best_at]) @ b_vec
            motion_term = (np.abs(demand) * mots) @ b_vec
            pair_sens = np.maximum(mots.max(axis=1), mots[best_at].max())
            tail = 0.5 * h * h * (1.0 + pair_sens) ** 2 * b_sum
            closures = 0.5 * h * (direct + motion_term + motion_term[best_at]) + tail
            value_slack = (
                float(np.max(closures))
                if value_slack is None
                else max(value_slack, float(np.max(closures)))
            )
            admitted = values >= float(values[best_at]) - np.maximum(
                closures, config.tie_tol
            )
            responses = np.maximum(
                0.0, (a_vec - b_vec * stacked) / (2.0 * (b_vec + c_vec))
            )
            gaps = np.max(np.abs(q_hat[None, :] - responses), axis=1)
            ok = admitted & (gaps <= position_slack)
            if ok.any():
                pick = int(np.nonzero(ok)[0][np.argmin(gaps[ok])])
                passing[idx] = (q_hat, stacked[pick], float(gaps[pick]))
        else:
            quad = market_maker_quadratic(params, q_hat, objective)
            r_star = solver.solve(u, quad.linear, tol=config.feas_tol)
            gap = float(np.max(np.abs(q_hat - generator_best_responses(params, r_star))))
            if gap <= position_slack:
                passing[idx] = (q_hat, r_star, gap)

    cells = _merge_cells(passing, n)
    return ScanReport(
        objective=objective,
        cells=cells,
        steps=steps,
        box=box,
        grid_step=h,
        position_slack=position_slack,
        value_slack=value_slack,
        payoff_lipschitz_sum=payoff_lipschitz_sum,
        payoff_slack=payoff_slack,
    )


class DimensionLimitScanError(ValueError):
    def __init__(self, n: int):
        super().__init__(f"brute-force scan supports n <= 3, got n={n}")


def _merge_cells(passing: dict, n: int) -> tuple:
    """Group passing grid points into orthogonally connected components."""
    cells = []
    remaining = set(passing)
    offsets = [
        off
        for off in itertools.product((-1, 0, 1), repeat=n)
        if sum(abs(o) for o in off) == 1
    ]
    while remaining:
        seed = min(remaining)
        component = [seed]
        remaining.discard(seed)
        frontier = [seed]
        while frontier:
            current = frontier.pop()
            for off in offsets:
                neighbor = tuple(c + o for c, o in zip(current, off))
                if neighbor in remaining:
                    remaining.discard(neighbor)
                    component.append(neighbor)
                    frontier.append(neighbor)
        best_idx = min(component, key=lambda i: (passing[i][2], i))
        q_best, r_best, gap = passing[best_idx]
        cells.append(ScanCell(q=q_best, r=r_best, br_gap=gap, size=len(component)))
    cells.sort(key=lambda cell: tuple(cell.q))
    return tuple(cells)
