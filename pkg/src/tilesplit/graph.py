"""The associated graph of a scheme.

One vertex per prototile and one directed edge ``i -> j`` per substitution
tile ``alpha T_j`` in the rule of ``T_i``.  The graph is built from the
normalized equivalent scheme, so every edge has length ``log(1/beta) > 0`` and
carries the share ``beta**d``.  Tiles of a partition of ``T_i`` correspond to
paths from ``i``, and a tile's volume is ``vol(T_i) * exp(-d * length)``.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .errors import NotStronglyConnected
from .scalar import Scalar, frac_gcd
from .scheme import Scheme, compute_betas, normalize_scheme

__all__ = [
    "Edge",
    "AssocGraph",
    "Cycle",
    "CommensurabilityVerdict",
    "build_graph",
    "strongly_connected",
    "fundamental_cycles",
    "commensurability",
    "graph_matrix",
    "graph_matrix_derivative",
    "path_length_sequence",
    "to_dot",
]

NUMERIC_MERGE_TOL = 1e-9
CF_TOL = 1e-10
CF_MAX_QUOTIENT = 10**6
CF_MAX_DENOMINATOR = 10**4


@dataclass(frozen=True)
class Edge:
    edge_id: int
    source: int
    target: int
    length: float
    beta_d: float
    weight: Scalar  # exp(length), exact when the scheme is exact


@dataclass(frozen=True)
class AssocGraph:
    n: int
    dimension: int
    edges: tuple[Edge, ...]
    labels: tuple[str, ...]
    exact: bool

    def out_edges(self, v: int) -> list[Edge]:
        return [e for e in self.edges if e.source == v]

    def adjacency(self) -> np.ndarray:
        """Edge multiplicities ``k_ij``."""
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for e in self.edges:
            A[e.source, e.target] += 1
        return A


def build_graph(scheme: Scheme, normalize: bool = True) -> AssocGraph:
    """Associated graph; with ``normalize=False`` edge lengths are ``log(1/alpha)``
    of the scheme as given (used for the fixed-scale identity ``M(d) = alpha**d S``)."""
    d = scheme.dimension
    src = normalize_scheme(scheme) if normalize else scheme
    betas = compute_betas(scheme)
    edges = []
    for eid, i, j, alpha in src.edges():
        w = alpha.inverse()
        edges.append(Edge(eid, i, j, w.log(), float(betas[eid] ** d), w))
    exact = all(e.weight.exact for e in edges)
    return AssocGraph(scheme.n, d, tuple(edges), tuple(scheme.labels), exact)


def strongly_connected(graph: AssocGraph) -> bool:
    G = nx.MultiDiGraph()
    G.add_nodes_from(range(graph.n))
    G.add_edges_from((e.source, e.target) for e in graph.edges)
    return nx.is_strongly_connected(G)


# ---------------------------------------------------------------------------
# cycles and commensurability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cycle:
    """Signed edge combination of a fundamental cycle."""

    edges: tuple[tuple[int, int], ...]  # (edge_id, +1 or -1)
    length: float
    weight: Scalar | None  # exact exp(length) in exact mode


@dataclass(frozen=True)
class CommensurabilityVerdict:
    commensurable: bool
    heuristic: bool
    unit_length: float | None = None
    unit_weight: Scalar | None = None
    denominator: int | None = None
    witness: tuple[Cycle, Cycle] | None = None
    note: str = ""

    @property
    def kind(self) -> str:
        if self.heuristic:
            return "NumericHeuristic"
        return "Commensurable" if self.commensurable else "Incommensurable"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "commensurable": self.commensurable,
               "unit_length": self.unit_length, "denominator": self.denominator, "note": self.note}
        if self.unit_weight is not None:
            out["unit_weight"] = self.unit_weight.to_json()
        if self.witness is not None:
            out["witness"] = [[list(map(list, c.edges)), c.length] for c in self.witness]
        return out


def fundamental_cycles(graph: AssocGraph) -> list[Cycle]:
    """Cycles closed by the co-edges of a BFS spanning tree of the underlying
    undirected multigraph.  Their signed lengths generate every closed-path
    length as an integer combination."""
    adj: list[list[tuple[int, Edge, int]]] = [[] for _ in range(graph.n)]
    for e in graph.edges:
        adj[e.source].append((e.target, e, +1))
        adj[e.target].append((e.source, e, -1))
    parent: dict[int, tuple[int, Edge, int] | None] = {0: None}
    tree_ids = set()
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w, e, sgn in adj[v]:
            if w not in parent:
                parent[w] = (v, e, sgn)
                tree_ids.add(e.edge_id)
                queue.append(w)

    def root_path(v: int) -> list[tuple[Edge, int]]:
        # signed edges of the tree path root -> v
        out = []
        while parent[v] is not None:
            u, e, sgn = parent[v]
            out.append((e, sgn))
            v = u
        return out[::-1]

    cycles = []
    for e in graph.edges:
        if e.edge_id in tree_ids:
            continue
        # root -> source, edge, then back along target -> root
        signed: dict[int, int] = {}
        for te, s in root_path(e.source):
            signed[te.edge_id] = signed.get(te.edge_id, 0) + s
        signed[e.edge_id] = signed.get(e.edge_id, 0) + 1
        for te, s in root_path(e.target):
            signed[te.edge_id] = signed.get(te.edge_id, 0) - s
        terms = tuple(sorted((k, v) for k, v in signed.items() if v != 0))
        by_id = {x.edge_id: x for x in graph.edges}
        length = math.fsum(v * by_id[k].length for k, v in terms)
        weight = None
        if graph.exact:
            weight = Scalar.one()
            for k, v in terms:
                weight = weight * by_id[k].weight ** v
        cycles.append(Cycle(terms, length, weight))
    return cycles


def _continued_fraction_rational(x: float, tol: float = CF_TOL, cap: int = CF_MAX_QUOTIENT) -> Fraction | None:
    """Rational p/q with |x - p/q| <= tol*max(1,|x|), or None.

    Walks the convergents of x.  Expansion stops at a partial quotient above
    ``cap`` (x is then extremely close to the current convergent) or once the
    denominator exceeds ``CF_MAX_DENOMINATOR``, beyond which any irrational
    number has convergents within the tolerance.
    """
    sign = -1 if x < 0 else 1
    y = abs(x)
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    scale = tol * max(1.0, abs(x))
    first = True
    while True:
        a = math.floor(y)
        if a > cap and not first:
            break
        first = False
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > CF_MAX_DENOMINATOR:
            return None
        if abs(abs(x) - h1 / k1) <= scale:
            return sign * Fraction(h1, k1)
        frac = y - a
        if frac <= 0:
            break
        y = 1.0 / frac
    if abs(abs(x) - h1 / k1) <= scale:
        return sign * Fraction(h1, k1)
    return None


def commensurability(graph: AssocGraph) -> CommensurabilityVerdict:
    """Decide whether all closed-path lengths are integer multiples of one length.

    Exact mode factors each fundamental-cycle weight over the primes and tests
    whether the exponent vectors span a rank-one lattice.  Numeric mode runs a
    continued-fraction test on ratios of cycle lengths and returns a heuristic
    verdict.
    """
    if not strongly_connected(graph):
        raise NotStronglyConnected("associated graph is not strongly connected")
    cycles = fundamental_cycles(graph)
    if graph.exact:
        vecs = [(c, c.weight.exponents) for c in cycles if not c.weight.is_one()]
        base_c, base = vecs[0]
        primes = sorted(set().union(*[set(v) for _, v in vecs]))
        p0 = next(p for p in primes if base.get(p, 0) != 0)
        ratios = []
        for c, v in vecs:
            t = Fraction(v.get(p0, 0)) / base[p0]
            if any(Fraction(v.get(p, 0)) != t * base.get(p, 0) for p in primes):
                return CommensurabilityVerdict(False, False, witness=(base_c, c),
                                               note="cycle weights are multiplicatively independent")
            ratios.append(t)
        g = frac_gcd(ratios)
        unit_w = Scalar(base) ** g
        if unit_w.log() < 0:
            unit_w = unit_w.inverse()
        unit = unit_w.log()
        return CommensurabilityVerdict(True, False, unit, unit_w, _denominator(graph, unit_w),
                                       note="exact prime-exponent test")
    lens = [c for c in cycles if abs(c.length) > 1e-12]
    base_c = max(lens, key=lambda c: abs(c.length))
    ratios = []
    for c in lens:
        q = _continued_fraction_rational(c.length / base_c.length)
        if q is None:
            return CommensurabilityVerdict(False, True, witness=(base_c, c),
                                           note="continued fraction of a cycle-length ratio exceeded the quotient cap")
        ratios.append(q)
    g = frac_gcd(ratios)
    unit = abs(base_c.length) * float(g)
    return CommensurabilityVerdict(True, True, unit, None, _denominator(graph, unit),
                                   note="cycle-length ratios are rational to 1e-10")


def _denominator(graph: AssocGraph, unit) -> int | None:
    """Smallest a with every edge length an integer multiple of unit/a, if any."""
    a = 1
    for e in graph.edges:
        if isinstance(unit, Scalar):
            wv, uv = e.weight.exponents, unit.exponents
            p0 = next(iter(uv))
            t = Fraction(wv.get(p0, 0)) / uv[p0]
            if any(Fraction(wv.get(p, 0)) != t * uv.get(p, 0) for p in set(wv) | set(uv)):
                return None
        else:
            t = _continued_fraction_rational(e.length / unit)
            if t is None:
                return None
        a = a * t.denominator // math.gcd(a, t.denominator)
    return a


# ---------------------------------------------------------------------------
# graph matrix function
# ---------------------------------------------------------------------------

def graph_matrix(graph: AssocGraph, s: float) -> np.ndarray:
    """``M(s)_ij = sum over edges i->j of exp(-s * length)``."""
    M = np.zeros((graph.n, graph.n))
    for e in graph.edges:
        M[e.source, e.target] += math.exp(-s * e.length)
    return M


def graph_matrix_derivative(graph: AssocGraph, s: float) -> np.ndarray:
    """Entrywise derivative ``M'(s)_ij = sum -length * exp(-s * length)``."""
    M = np.zeros((graph.n, graph.n))
    for e in graph.edges:
        M[e.source, e.target] -= e.length * math.exp(-s * e.length)
    return M


# ---------------------------------------------------------------------------
# path lengths
# ---------------------------------------------------------------------------

def path_length_sequence(graph: AssocGraph, origin: int, count: int) -> list[float]:
    """First ``count`` distinct lengths of paths starting at ``origin`` (l_0 = 0).

    Best-first expansion over (length, vertex) states.  States with equal
    exact weight, or lengths within 1e-9 relative in numeric mode, merge.
    """
    return [x for x, _ in _path_levels(graph, origin, count)]


def _path_levels(graph: AssocGraph, origin: int, count: int):
    """Yield (length, exact weight or None) for the distinct path lengths."""
    out_edges = [graph.out_edges(v) for v in range(graph.n)]
    exact = graph.exact
    heap = [(0.0, 0, origin, Scalar.one() if exact else None)]
    seq = 1
    emitted = 0
    cur_len, cur_key = None, None
    done: set[int] = set()
    while heap:
        x, _, v, w = heapq.heappop(heap)
        if exact:
            same = cur_key is not None and w == cur_key
        else:
            same = cur_len is not None and abs(x - cur_len) <= NUMERIC_MERGE_TOL * max(cur_len, 1.0)
        if not same:
            if emitted == count:
                return
            cur_len, cur_key = x, w
            done = set()
            emitted += 1
            yield x, w
        if v in done:
            continue
        done.add(v)
        for e in out_edges[v]:
            nw = w * e.weight if exact else None
            heapq.heappush(heap, (nw.log() if exact else x + e.length, seq, e.target, nw))
            seq += 1


def to_dot(graph: AssocGraph) -> str:
    lines = ["digraph assoc {"]
    for v, lab in enumerate(graph.labels):
        lines.append(f'  v{v} [label="{lab}"];')
    for e in graph.edges:
        lines.append(f'  v{e.source} -> v{e.target} [label="e{e.edge_id} l={e.length:.17g} b^d={e.beta_d:.17g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
