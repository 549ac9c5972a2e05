"""Geometry and optimization over the market maker's feasible set.

For a production vector ``q`` the feasible re-balancing set is

    S(q) = { r : q + r >= 0, |H r| <= f, sum(r) = 0 }.

It is stored as inequality rows ``A r <= u`` plus the budget equality
``sum(r) = 0`` held separately. Lines without a flow limit contribute no
rows at all (rather than rows with huge bounds), which keeps the linear
algebra well conditioned.

All solvers here enumerate combinations of active constraints, which is
exact and deterministic but combinatorial; the intended regime is small
networks (dimension limit 8).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import NetworkModel

MAX_ENUM_DIM = 8
DEFAULT_TIE_TOL = 1e-8


class PolytopeEmptyError(ValueError):
    """The feasible set contains no point."""


class DimensionLimitError(ValueError):
    """Problem dimension exceeds the combinatorial enumeration limit."""


@dataclass(frozen=True)
class SeparableQuadratic:
    """Separable quadratic ``sum_k linear_k * r_k + curvature_k/2 * r_k**2``."""

    linear: np.ndarray
    curvature: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "curvature", np.asarray(self.curvature, dtype=float))
        if self.linear.shape != self.curvature.shape:
            raise ValueError("linear and curvature must have equal shape")

    def value(self, r: np.ndarray) -> np.ndarray:
        """Evaluate at one point (shape ``(n,)``) or a stack ``(k, n)``."""
        r = np.asarray(r, dtype=float)
        return (r * self.linear + 0.5 * self.curvature * r * r).sum(axis=-1)


@dataclass(frozen=True)
class RebalancePolytope:
    """Inequality system ``A r <= u`` plus the implicit ``sum(r) = 0``."""

    A: np.ndarray
    u: np.ndarray
    n: int


def build_polytope(net: NetworkModel, q) -> RebalancePolytope:
    """Assemble the constraint system for S(q). Emptiness is not checked."""
    q = np.asarray(q, dtype=float)
    if q.shape != (net.n,):
        raise ValueError(f"q has shape {q.shape}, expected ({net.n},)")
    finite = np.isfinite(net.f)
    H_fin = net.H[finite]
    f_fin = net.f[finite]
    A = np.vstack([-np.eye(net.n), H_fin, -H_fin])
    u = np.concatenate([q, f_fin, f_fin])
    return RebalancePolytope(A=A, u=u, n=net.n)


class VertexEnumerator:
    """Vertex solver for a fixed constraint matrix A and varying bounds u.

    A vertex of {A r <= u, sum(r) = 0} activates n-1 independent rows of
    A together with the equality. The candidate systems depend only on
    A, so their inverses are factored once and reused for every u; this
    is what makes dense grid scans affordable.
    """

    def __init__(self, A: np.ndarray, max_dim: int = MAX_ENUM_DIM):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        if n > max_dim:
            raise DimensionLimitError(
                f"vertex enumeration limited to dimension {max_dim}, got {n}"
            )
        self.A = A
        self.n = n
        ones = np.ones((1, n))
        index_sets = []
        inverses = []
        for combo in itertools.combinations(range(m), n - 1):
            M = np.vstack([A[list(combo)], ones])
            try:
                Minv = np.linalg.inv(M)
            except np.linalg.LinAlgError:
                continue  # rank-deficient active set
            index_sets.append(combo)
            inverses.append(Minv)
        if index_sets:
            self._rows = np.array(index_sets, dtype=int).reshape(len(index_sets), n - 1)
            self._inverses = np.stack(inverses)
        else:
            self._rows = np.zeros((0, n - 1), dtype=int)
            self._inverses = np.zeros((0, n, n))
        # dv/du columns, used by raw_candidates; the equality column drops out
        self._bound_jacobians = self._inverses[:, :, :-1].copy()
        self._motion_cache: dict[int, np.ndarray] = {}

    def raw_candidates(
        self, u: np.ndarray, tol: float, motion_rows: int
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized candidate solve for hot loops: no dedup, no sorting.

        Returns (points, feasible_mask, motion) where ``points`` stacks
        one candidate per active-set combination (duplicates possible)
        and ``motion[i, j]`` is the L1 sensitivity of coordinate j of
        candidate i to the first ``motion_rows`` bounds.
        """
        k = len(self._rows)
        if k == 0:
            n = self.n
            return np.zeros((0, n)), np.zeros(0, dtype=bool), np.zeros((0, n))
        motion = self._motion_cache.get(motion_rows)
        if motion is None:
            moving = self._rows < motion_rows
            motion = (np.abs(self._bound_jacobians) * moving[:, None, :]).sum(axis=2)
            self._motion_cache[motion_rows] = motion
        points = np.einsum("kij,kj->ki", self._bound_jacobians, u[self._rows])
        feasible = np.all(self.A @ points.T <= u[:, None] + tol, axis=0)
        feasible &= np.all(np.isfinite(points), axis=1)
        return points, feasible, motion

    def vertices(self, u: np.ndarray, tol: float) -> list[np.ndarray]:
        """All vertices for bounds u, deduplicated and in lexicographic order."""
        return [v for v, _ in self.vertices_with_motion(u, tol)]

    def vertices_with_motion(
        self, u: np.ndarray, tol: float, motion_rows: int | None = None
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Vertices plus their sensitivity to the first ``motion_rows`` bounds.

        The motion vector holds, per vertex coordinate i, the L1 norm of
        dv_i/du_j over the rows j < motion_rows that are active at the
        vertex (for S(q) those are the demand rows, whose bounds are q).
        Duplicate vertices from degenerate active sets keep the
        element-wise maximum sensitivity.
        """
        if motion_rows is None:
            motion_rows = len(u)
        candidates, feasible, motions = self.raw_candidates(u, tol, motion_rows)
        found = [
            (candidates[i], motions[i].copy()) for i in np.nonzero(feasible)[0]
        ]
        found.sort(key=lambda pair: tuple(pair[0]))
        kept: list[tuple[np.ndarray, np.ndarray]] = []
        for v, motion in found:
            for w, other in kept:
                if np.max(np.abs(v - w)) <= tol:
                    np.maximum(other, motion, out=other)
                    break
            else:
                kept.append((v, motion))
        return kept


class ConcaveQuadSolver:
    """Exact maximizer of a separable concave quadratic over S(q).

    Enumerates every independent active set of up to n-1 inequality rows,
    solves the stationarity system for each, and keeps candidates whose
    multipliers are (numerically) nonnegative and whose point is primal
    feasible. For a concave objective every accepted candidate is
    feasible, so returning the best-valued one is safe even when the
    multiplier test admits borderline active sets. Curvature is fixed at
    construction; the bounds u and the gradient vary per solve.
    """

    def __init__(self, A: np.ndarray, curvature, max_dim: int = MAX_ENUM_DIM):
        A = np.asarray(A, dtype=float)
        curvature = np.asarray(curvature, dtype=float)
        m, n = A.shape
        if n > max_dim:
            raise DimensionLimitError(
                f"active-set enumeration limited to dimension {max_dim}, got {n}"
            )
        self.A = A
        self.n = n
        self.curvature = curvature
        # KKT system for active rows S (maximization form):
        #   diag(curv) r - A_S' mu - 1 lam = -linear
        #   A_S r = u_S ,  sum(r) = 0
        groups: list[tuple[np.ndarray, np.ndarray]] = []
        for size in range(n):
            index_sets = []
            inverses = []
            for combo in itertools.combinations(range(m), size):
                dim = n + size + 1
                K = np.zeros((dim, dim))
                K[:n, :n] = np.diag(curvature)
                if size:
                    A_S = A[list(combo)]
                    K[:n, n : n + size] = -A_S.T
                    K[n : n + size, :n] = A_S
                K[:n, -1] = -1.0
                K[-1, :n] = 1.0
                try:
                    Kinv = np.linalg.inv(K)
                except np.linalg.LinAlgError:
                    continue  # singular on this active set; a larger one covers it
                index_sets.append(combo)
                inverses.append(Kinv)
            if index_sets:
                groups.append(
                    (
                        np.array(index_sets, dtype=int).reshape(len(index_sets), size),
                        np.stack(inverses),
                    )
                )
        self._groups = groups

    def solve(self, u: np.ndarray, linear: np.ndarray, tol: float) -> np.ndarray:
        """Return the maximizer for bounds u and gradient vector ``linear``."""
        n = self.n
        scale = 1.0 + float(np.max(np.abs(linear))) + float(np.max(np.abs(u), initial=0.0))
        dual_tol = 1e-9 * scale
        quad = SeparableQuadratic(linear=linear, curvature=self.curvature)
        best_val = -np.inf
        best_r: np.ndarray | None = None
        for rows, inverses in self._groups:
            k, size = rows.shape
            dim = n + size + 1
            rhs = np.zeros((k, dim))
            rhs[:, :n] = -linear
            if size:
                rhs[:, n : n + size] = u[rows]
            sol = np.einsum("kij,kj->ki", inverses, rhs)
            r = sol[:, :n]
            ok = np.all(np.isfinite(r), axis=1)
            if size:
                ok &= np.all(sol[:, n : n + size] >= -dual_tol, axis=1)
            ok &= np.all(self.A @ r.T - u[:, None] <= tol, axis=0)
            for i in np.nonzero(ok)[0]:
                val = float(quad.value(r[i]))
                if val > best_val + 1e-12 * (1.0 + abs(val)) or (
                    best_r is not None
                    and abs(val - best_val) <= 1e-12 * (1.0 + abs(val))
                    and tuple(r[i]) < tuple(best_r)
                ):
                    best_val = val
                    best_r = r[i]
        if best_r is None:
            raise PolytopeEmptyError(
                "no stationary point with feasible multipliers; feasible set is empty"
            )
        return best_r


def enumerate_vertices(
    poly: RebalancePolytope, tol: float = 1e-9, max_dim: int = MAX_ENUM_DIM
) -> list[np.ndarray]:
    """All vertices of the polytope, deduplicated under distance ``tol``.

    Returns the empty list iff the polytope is empty. Degenerate
    (rank-deficient) active sets are skipped, not errors.
    """
    return VertexEnumerator(poly.A, max_dim=max_dim).vertices(poly.u, tol)


def maximize_concave_quadratic(
    poly: RebalancePolytope,
    quad: SeparableQuadratic,
    tol: float = 1e-9,
    max_dim: int = MAX_ENUM_DIM,
) -> np.ndarray:
    """Maximize a concave separable quadratic over the polytope.

    Requires ``curvature <= 0`` per coordinate; strictly negative
    curvature guarantees a unique maximizer. Deterministic: identical
    inputs produce bit-identical outputs.
    """
    if np.any(quad.curvature > 0):
        raise ValueError("curvature must be <= 0 coordinate-wise")
    solver = ConcaveQuadSolver(poly.A, quad.curvature, max_dim=max_dim)
    return solver.solve(poly.u, quad.linear, tol)


def maximize_convex_quadratic_on_vertices(
    poly: RebalancePolytope,
    quad: SeparableQuadratic,
    tie_tol: float = DEFAULT_TIE_TOL,
    tol: float = 1e-9,
    max_dim: int = MAX_ENUM_DIM,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Maximize a convex separable quadratic by scanning the vertices.

    A convex function on a bounded polytope attains its maximum at a
    vertex. Returns the best vertex under the deterministic tie-break
    (lexicographically smallest among those within ``tie_tol`` of the
    maximum value) together with the full near-optimal vertex list, so
    callers can treat maximizer ties explicitly.
    """
    if np.any(quad.curvature < 0):
        raise ValueError("curvature must be >= 0 coordinate-wise")
    verts = enumerate_vertices(poly, tol=tol, max_dim=max_dim)
    if not verts:
        raise PolytopeEmptyError("cannot maximize over an empty polytope")
    stacked = np.stack(verts)
    values = quad.value(stacked)
    best = float(np.max(values))
    near = [verts[i] for i in range(len(verts)) if values[i] >= best - tie_tol]
    # verts are already lexicographically sorted, so near[0] is the tie-break
    return near[0], near
