"""Shared fixtures and numeric helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from netcournot import (
    MarketParams,
    NetworkModel,
    RebalancePolytope,
    SeparableQuadratic,
    enumerate_vertices,
)


def rel_close(x: float, y: float, rtol: float = 1e-9) -> bool:
    """Relative closeness with a floor of 1 on the scale."""
    return abs(x - y) <= rtol * max(1.0, abs(x), abs(y))


def two_node_net(f: float = np.inf) -> NetworkModel:
    return NetworkModel(n=2, H=np.array([[1.0, 0.0]]), f=np.array([f]))


def lemma_params() -> MarketParams:
    return MarketParams(a=[10.0, 10.0], b=[1.2, 1.0], c=[1.0, 1.0])


@pytest.fixture
def lemma_instance():
    """The stated no-equilibrium instance: a=10, b=(1.2, 1), c=1, f12=2."""
    return two_node_net(2.0), lemma_params()


@pytest.fixture
def lemma_instance_wide():
    """Same market with f12=4, where the uncongested equilibrium exists."""
    return two_node_net(4.0), lemma_params()


def sample_polytope(
    poly: RebalancePolytope, rng: np.random.Generator, count: int
) -> np.ndarray:
    """Random feasible points as convex combinations of the vertices."""
    verts = np.stack(enumerate_vertices(poly))
    weights = rng.dirichlet(np.ones(len(verts)), size=count)
    return weights @ verts


def kkt_stationarity_residual(
    poly: RebalancePolytope,
    quad: SeparableQuadratic,
    r: np.ndarray,
    active_tol: float = 1e-6,
) -> float:
    """Min-norm stationarity residual against the active constraints.

    For a maximizer the gradient must be a nonnegative combination of the
    active rows' normals plus a free multiple of the all-ones equality
    normal; the residual is the distance of the gradient from that cone.
    """
    from scipy.optimize import lsq_linear

    grad = quad.linear + quad.curvature * r
    slack = poly.u - poly.A @ r
    active = poly.A[slack <= active_tol]
    basis = np.vstack([active, np.ones(poly.n)]).T
    lower = np.zeros(basis.shape[1])
    lower[-1] = -np.inf
    result = lsq_linear(basis, grad, bounds=(lower, np.full(basis.shape[1], np.inf)))
    return float(np.linalg.norm(basis @ result.x - grad))


def random_market(
    rng: np.random.Generator, n: int, *, b_low: float = 0.2
) -> MarketParams:
    return MarketParams(
        a=rng.uniform(1.0, 10.0, size=n),
        b=rng.uniform(b_low, 3.0, size=n),
        c=rng.uniform(0.5, 2.0, size=n),
    )
