"""Discrete unit-period loops and the basic operations on them.

A loop is N uniformly spaced samples of a map R/Z -> R^n.  The derivative is
the forward difference scaled by N and the quadrature is the rectangle rule
(which coincides with the trapezoid rule on a uniform periodic grid).  With
these choices the Dirichlet energy is an exact quadratic form whose gradient
is the periodic three-point Laplacian, so descent steps see a derivative that
is consistent with the discretized objective, not just with its continuum
limit.

Sums that feed invariant checks (quadrature, Dirichlet energy) use
``math.fsum`` so they are exactly rounded and therefore invariant under
circular shifts of the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import OddNodeCountError

SYMMETRY_CLASSES = ("none", "e1", "e2")


@dataclass(frozen=True)
class LoopPath:
    """N samples of a 1-periodic path in R^n; row k holds u(k/N)."""

    nodes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.nodes, dtype=float)
        if arr.ndim != 2:
            raise ValueError("nodes must be an (N, n) array")
        if arr.shape[0] < 8:
            raise ValueError(f"need at least 8 nodes, got {arr.shape[0]}")
        if arr.shape[1] < 1:
            raise ValueError("spatial dimension must be >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("loop nodes must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "nodes", arr)

    @property
    def N(self) -> int:
        return self.nodes.shape[0]

    @property
    def n(self) -> int:
        return self.nodes.shape[1]


def check_symmetry(tag: str) -> str:
    if tag not in SYMMETRY_CLASSES:
        raise ValueError(f"unknown symmetry class {tag!r}; use one of {SYMMETRY_CLASSES}")
    return tag


def velocity(u: LoopPath) -> np.ndarray:
    """Forward-difference derivative at unit-period scale: v_k = N (u_{k+1} - u_k)."""
    return float(u.N) * (np.roll(u.nodes, -1, axis=0) - u.nodes)


def integrate(samples) -> float:
    """Rectangle-rule integral of scalar samples over one period (their mean).

    Uses an exactly rounded sum, so the result is bit-identical under any
    circular shift of the samples.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1:
        raise ValueError("integrate expects a flat sequence of scalars")
    return math.fsum(arr) / arr.shape[0]


def dirichlet_energy(u: LoopPath) -> float:
    """Half the integrated squared speed, (1/2) * int |u'|^2 dt.

    Evaluates the exact quadratic form (N/2) * sum |u_{k+1} - u_k|^2 with an
    exactly rounded sum; shift-invariant and even in u to the last bit.
    """
    d = np.roll(u.nodes, -1, axis=0) - u.nodes
    return 0.5 * u.N * math.fsum((d * d).ravel())


def loop_mean(u: LoopPath) -> np.ndarray:
    """Mean position of the loop, one component per coordinate."""
    return np.array([math.fsum(u.nodes[:, i]) for i in range(u.n)]) / u.N


def h1_norm(u: LoopPath) -> float:
    """Loop-space norm: L2 norm of the derivative plus length of the mean.

    On the antisymmetric subspaces the mean vanishes and this reduces to the
    derivative seminorm, which is a genuine norm there.
    """
    return math.sqrt(2.0 * dirichlet_energy(u)) + float(np.linalg.norm(loop_mean(u)))


def shift(u: LoopPath, j: int) -> LoopPath:
    """Circular time shift: (shift u)(t) = u(t + j/N)."""
    return LoopPath(np.roll(u.nodes, -j, axis=0))


def project_symmetric(u: LoopPath, symmetry: str) -> LoopPath:
    """Orthogonal projection onto a symmetry subspace of loop space.

    ``e1`` keeps the half-period antisymmetric part w(t) = (u(t) - u(t+1/2))/2
    and needs an even node count so t + 1/2 lands on the grid; ``e2`` keeps
    the odd part w(t) = (u(t) - u(-t))/2.  ``none`` is the identity.  Both
    projections are idempotent exactly in floating point.
    """
    check_symmetry(symmetry)
    if symmetry == "none":
        return u
    if symmetry == "e1":
        if u.N % 2:
            raise OddNodeCountError(f"half-period symmetry needs an even node count, got {u.N}")
        return LoopPath(0.5 * (u.nodes - np.roll(u.nodes, -u.N // 2, axis=0)))
    idx = (-np.arange(u.N)) % u.N
    return LoopPath(0.5 * (u.nodes - u.nodes[idx]))


def symmetry_defect(nodes: np.ndarray, symmetry: str) -> float:
    """Sup-norm distance of raw nodes from their symmetry projection."""
    if symmetry == "none":
        return 0.0
    proj = project_symmetric(LoopPath(nodes), symmetry)
    return float(np.abs(nodes - proj.nodes).max())


def sobolev_precondition(g: np.ndarray) -> np.ndarray:
    """Solve (I - L) w = g where L is the periodic second difference.

    L acts componentwise as N^2 (w_{k+1} - 2 w_k + w_{k-1}) with indices mod
    N.  The operator is symmetric positive definite, so the solve is a linear,
    symmetric, positive-definite map: the Riesz representation of a nodewise
    gradient in the discrete H^1 inner product.  Implemented as a cyclic
    tridiagonal elimination (banded solve plus a rank-one correction for the
    periodic corners).
    """
    g = np.asarray(g, dtype=float)
    squeeze = g.ndim == 1
    if squeeze:
        g = g[:, None]
    N = g.shape[0]
    s = float(N) * float(N)
    diag = 1.0 + 2.0 * s
    off = -s

    # Remove the periodic corners with a rank-one update A = T + outer(uv, vv).
    gamma = -diag
    d = np.full(N, diag)
    d[0] -= gamma
    d[-1] -= off * off / gamma
    ab = np.zeros((3, N))
    ab[0, 1:] = off
    ab[1] = d
    ab[2, :-1] = off

    uv = np.zeros(N)
    uv[0] = gamma
    uv[-1] = off
    vv = np.zeros(N)
    vv[0] = 1.0
    vv[-1] = off / gamma

    y = solve_banded((1, 1), ab, g)
    z = solve_banded((1, 1), ab, uv)
    w = y - np.outer(z, vv @ y) / (1.0 + vv @ z)
    return w[:, 0] if squeeze else w


def resample(u: LoopPath, new_n_nodes: int) -> LoopPath:
    """Periodic piecewise-linear resampling to a different node count."""
    pos = np.arange(new_n_nodes) * (u.N / new_n_nodes)
    k = np.floor(pos).astype(int) % u.N
    theta = (pos - np.floor(pos))[:, None]
    nxt = (k + 1) % u.N
    return LoopPath((1.0 - theta) * u.nodes[k] + theta * u.nodes[nxt])


def circle_loop(n_nodes: int, dim: int, radius: float = 1.0) -> LoopPath:
    """Unit-frequency circle in the first two coordinates (cosine wave if dim == 1)."""
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = np.zeros((n_nodes, dim))
    nodes[:, 0] = radius * np.cos(t)
    if dim >= 2:
        nodes[:, 1] = radius * np.sin(t)
    return LoopPath(nodes)


def zero_loop(n_nodes: int, dim: int) -> LoopPath:
    return LoopPath(np.zeros((n_nodes, dim)))


def random_loop(n_nodes, dim, rng, modes: int = 4, mean_scale: float = 0.0) -> LoopPath:
    """Random band-limited loop: the first ``modes`` Fourier modes with seeded
    normal coefficients decaying like 1/m, plus an optional random mean."""
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = np.zeros((n_nodes, dim))
    for m in range(1, modes + 1):
        a = rng.standard_normal(dim) / m
        b = rng.standard_normal(dim) / m
        nodes += np.outer(np.cos(m * t), a) + np.outer(np.sin(m * t), b)
    if mean_scale:
        nodes += mean_scale * rng.standard_normal(dim)
    return LoopPath(nodes)
