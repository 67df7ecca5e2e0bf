"""Perron-Frobenius machinery for nonnegative matrices and associated graphs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import NoConvergence, NotFixedScale, NotIrreducible, SingularBeyondRankOne
from .graph import AssocGraph, build_graph, graph_matrix, graph_matrix_derivative, strongly_connected
from .scheme import Scheme

__all__ = [
    "PerronPair",
    "PrimitivityReport",
    "QMatrix",
    "support_irreducible",
    "perron_eigen",
    "spectral_radius",
    "primitivity",
    "perron_projection",
    "solve_lambda",
    "adjugate",
    "q_matrix",
    "is_fixed_scale",
    "substitution_matrix",
    "weighted_substitution_matrix",
]

log = logging.getLogger(__name__)

POWER_TOL = 1e-13
POWER_MAX_ITER = 100_000
LAMBDA_TOL = 1e-12


@dataclass(frozen=True)
class PerronPair:
    mu: float
    right: np.ndarray
    left: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class PrimitivityReport:
    period: int
    classes: tuple[tuple[int, ...], ...]
    blocks: tuple[np.ndarray, ...]

    @property
    def primitive(self) -> bool:
        return self.period == 1

    @property
    def kind(self) -> str:
        return "Primitive" if self.period == 1 else "Cyclic"


@dataclass(frozen=True)
class QMatrix:
    entries: np.ndarray
    q: np.ndarray
    spread: float  # max relative spread within a column
    denominator: float


def support_irreducible(A: np.ndarray) -> bool:
    """Irreducibility from the support digraph, by boolean reachability."""
    n = A.shape[0]
    R = (np.asarray(A) != 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(max(n, 2)))) + 1):
        R = (R.astype(np.int64) @ R.astype(np.int64)) > 0
    return bool(R.all())


def _power_vector(B: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    n = B.shape[0]
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        y = B @ x
        y /= y.sum()
        if np.abs(y - x).max() < tol:
            return y, it
        x = y
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def perron_eigen(A, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> PerronPair:
    """Perron eigenvalue with positive right and left eigenvectors.

    Power iteration on ``A/s + I`` with ``s`` the max row sum; the shift makes
    the iteration converge for periodic (non-primitive) irreducible matrices.
    Normalized so that ``sum(v) = 1`` and ``u @ v = 1``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix expected")
    if (A < 0).any():
        raise ValueError("nonnegative matrix expected")
    if not support_irreducible(A):
        raise NotIrreducible("matrix is reducible")
    n = A.shape[0]
    s = float(np.abs(A).sum(axis=1).max())
    B = A / s + np.eye(n)
    v, it1 = _power_vector(B, tol, max_iter)
    u, it2 = _power_vector(B.T, tol, max_iter)
    Av = A @ v
    mu = float(v @ Av / (v @ v))
    u = u / (u @ v)
    res = max(float(np.abs(Av - mu * v).max()), float(np.abs(u @ A - mu * u).max()))
    return PerronPair(mu, v, u, res, max(it1, it2))


def spectral_radius(A) -> float:
    return perron_eigen(A).mu


def primitivity(A) -> PrimitivityReport:
    """Period of the support digraph from BFS levels, with the cyclic classes
    and the diagonal blocks of ``A**p``."""
    A = np.asarray(A)
    if not support_irreducible(A):
        raise NotIrreducible("matrix is reducible")
    n = A.shape[0]
    level = [-1] * n
    level[0] = 0
    order = [0]
    for v in order:
        for w in np.nonzero(A[v])[0]:
            if level[w] < 0:
                level[w] = level[v] + 1
                order.append(int(w))
    p = 0
    for v in range(n):
        for w in np.nonzero(A[v])[0]:
            p = math.gcd(p, level[v] + 1 - level[w])
    p = abs(p)
    classes = tuple(tuple(v for v in range(n) if level[v] % p == r) for r in range(p))
    Ap = np.linalg.matrix_power(A, p)
    blocks = tuple(Ap[np.ix_(c, c)] for c in classes)
    return PrimitivityReport(p, classes, blocks)


def perron_projection(A) -> np.ndarray:
    """``v u^T / (u^T v)``, the limit of ``(A/mu)**k`` for primitive A."""
    A = np.asarray(A, dtype=float)
    rep = primitivity(A)
    if not rep.primitive:
        raise ValueError(f"matrix has period {rep.period}; the limit does not exist")
    pp = perron_eigen(A)
    P = np.outer(pp.right, pp.left) / (pp.left @ pp.right)
    err = float(np.abs(np.linalg.matrix_power(A / pp.mu, 64) - P).max())
    if err >= 1e-8:
        log.warning("(A/mu)^64 differs from the Perron projection by %.3g", err)
    return P


def solve_lambda(graph: AssocGraph, tol: float = LAMBDA_TOL) -> float:
    """Largest s with spectral radius of M(s) equal to one, by bisection."""
    if not strongly_connected(graph):
        raise NotIrreducible("associated graph is not strongly connected")
    rho = lambda s: perron_eigen(graph_matrix(graph, s)).mu
    lo, hi = 0.0, 1.0
    if rho(lo) <= 1.0:
        raise NoConvergence("spectral radius of M(0) does not exceed 1")
    for _ in range(200):
        if rho(hi) < 1.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoConvergence("could not bracket the root")
    for _ in range(200):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if rho(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    raise NoConvergence("bisection did not converge")


def adjugate(A) -> np.ndarray:
    """Adjugate by cofactor expansion with LU determinants of the minors."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return np.ones((1, 1))
    C = np.empty((n, n))
    for i in range(n):
        rows = [r for r in range(n) if r != i]
        for j in range(n):
            cols = [c for c in range(n) if c != j]
            C[i, j] = (-1) ** (i + j) * np.linalg.det(A[np.ix_(rows, cols)])
    return C.T


def q_matrix(graph: AssocGraph) -> QMatrix:
    """``adj(I - M(d)) / -tr(adj(I - M(d)) M'(d))``; its rows coincide."""
    d = graph.dimension
    M = graph_matrix(graph, d)
    dM = graph_matrix_derivative(graph, d)
    adj = adjugate(np.eye(graph.n) - M)
    if np.abs(adj).max() < 1e-12:
        raise SingularBeyondRankOne("adjugate of I - M(d) vanishes")
    den = -float(np.trace(adj @ dM))
    Q = adj / den
    q = Q.mean(axis=0)
    spread = float((np.ptp(Q, axis=0) / np.abs(q)).max())
    return QMatrix(Q, q, spread, den)


def is_fixed_scale(scheme: Scheme) -> bool:
    scales = [c.placement.scale for rs in scheme.rules for r in rs for c in r.children]
    first = scales[0]
    return all(s.close(first, 1e-12) for s in scales)


def _fixed_alpha(scheme: Scheme):
    if not is_fixed_scale(scheme):
        raise NotFixedScale("scaling constants differ")
    return scheme.rules[0][0].children[0].placement.scale


def substitution_matrix(scheme: Scheme) -> np.ndarray:
    """Integer matrix ``S_ij`` = number of copies of ``alpha T_j`` in the rule of ``T_i``."""
    alpha = _fixed_alpha(scheme)
    raw = build_graph(scheme, normalize=False)
    S = raw.adjacency()
    M = graph_matrix(raw, scheme.dimension)
    ad = float(alpha) ** scheme.dimension
    if np.abs(M / ad - S).max() > 1e-12 * max(1.0, S.max()):
        raise NotFixedScale("M(d) / alpha**d differs from the edge multiplicities")
    return S


def weighted_substitution_matrix(scheme: Scheme) -> np.ndarray:
    """``W_ij = vol(alpha T_j) / vol(T_i) * S_ij``; equal to M(d) of the normalized graph."""
    alpha = _fixed_alpha(scheme)
    S = substitution_matrix(scheme)
    d = scheme.dimension
    vol = np.array([float(p.volume) for p in scheme.prototiles])
    W = float(alpha) ** d * S * vol[None, :] / vol[:, None]
    M = graph_matrix(build_graph(scheme), d)
    if np.abs(W - M).max() > 1e-12:
        raise NotFixedScale("weighted substitution matrix differs from M(d)")
    return W
