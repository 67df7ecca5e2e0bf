"""Turn a commensurable scheme into a fixed-scale scheme on more prototiles.

Steps:

1. Normalize and find the unit ``g`` generating all closed-path lengths.
2. Rescale prototiles (slide graph vertices) so that the residues of path
   lengths modulo ``g`` become evenly spaced; every edge length is then a
   rational multiple of ``g`` and ``a`` is the lcm of the denominators.
3. Split an edge of ``b`` units into a chain of ``b - 1`` extra prototiles,
   each a rescaled copy of the edge's target with one trivial child.

The generation sequence of the result, read at the right depths ``k_m``,
reproduces the Kakutani sequence of the input.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .engine import generation_step, init, kakutani_step
from .errors import IncommensurableInput, SlideInfeasible
from .graph import AssocGraph, _continued_fraction_rational, build_graph, commensurability
from .scalar import Scalar
from .scheme import Placement, Prototile, Rule, Scheme, SubstitutionTile

__all__ = ["RationalizationResult", "rationalize", "kakutani_indices", "verify_subsequence"]

log = logging.getLogger(__name__)

RESIDUE_TOL = 1e-9


@dataclass
class RationalizationResult:
    fixed_scheme: Scheme
    new_prototiles: list[tuple[int, Scalar]]  # (source prototile, linear scale)
    collapse: list[int]  # new prototile -> source prototile
    a: int
    unit: float  # length of each new edge, (1/a) log(1/alpha)
    contraction: Scalar
    root: int
    k_m: list[int]
    units: dict[int, int]  # original edge id -> length in units after sliding
    heuristic: bool

    @property
    def index_map(self) -> dict:
        return {"a": self.a, "unit": self.unit, "k_m": list(self.k_m)}

    def to_json(self) -> dict:
        labels = self.fixed_scheme.labels
        return {
            **self.index_map,
            "contraction": self.contraction.to_json(),
            "root": self.root,
            "heuristic": self.heuristic,
            "prototiles": [
                {"label": labels[k], "source": src, "scale": sc.to_json()}
                for k, (src, sc) in enumerate(self.new_prototiles)
            ],
            "edge_units": {str(e): b for e, b in sorted(self.units.items())},
        }


def _ratio(w: Scalar, unit: Scalar) -> Fraction | None:
    """``log w / log unit`` as a rational, exactly when both are exact."""
    if w.exact and unit.exact:
        uv, wv = unit.exponents, w.exponents
        p0 = next(iter(uv))
        t = Fraction(wv.get(p0, 0)) / uv[p0]
        if any(Fraction(wv.get(p, 0)) != t * uv.get(p, 0) for p in set(wv) | set(uv)):
            return None
        return t
    return _continued_fraction_rational(w.log() / unit.log())


def _tree_weights(graph: AssocGraph, root: int) -> list[Scalar]:
    """exp(length) of one directed path from the root to every vertex."""
    P: list[Scalar | None] = [None] * graph.n
    P[root] = Scalar.one() if graph.exact else Scalar.numeric(1.0)
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in graph.out_edges(v):
            if P[e.target] is None:
                P[e.target] = P[v] * e.weight
                queue.append(e.target)
    return P  # type: ignore[return-value]


def _residues(P: list[Scalar], unit_w: Scalar, exact: bool) -> list[Scalar]:
    g = unit_w.log()
    out = []
    for p in P:
        n = math.floor(p.log() / g)
        r = p / unit_w ** n
        if exact:
            if r == unit_w:
                r = Scalar.one()
        else:
            if r.log() > g * (1 - RESIDUE_TOL):
                r = r / unit_w
            if abs(r.log()) <= RESIDUE_TOL * g:
                r = Scalar.numeric(1.0)
        out.append(r)
    return out


def _residue_classes(res: list[Scalar], unit: float, exact: bool) -> list[int]:
    """Index of each vertex's residue class, classes sorted by residue."""
    reps: list[Scalar] = []
    cls = []
    for r in res:
        for k, q in enumerate(reps):
            if (r == q) if exact else abs(r.log() - q.log()) <= RESIDUE_TOL * unit:
                cls.append(k)
                break
        else:
            reps.append(r)
            cls.append(len(reps) - 1)
    order = sorted(range(len(reps)), key=lambda k: reps[k].log())
    rank = {k: i for i, k in enumerate(order)}
    return [rank[c] for c in cls]


def kakutani_indices(units: dict[int, int], scheme: Scheme, root: int, count: int) -> list[int]:
    """First ``count`` distinct path lengths (in units) from the root."""
    edges = [(i, j, units[eid]) for eid, i, j, _ in scheme.edges()]
    reach: list[set[int]] = [{root}]
    out = [0]
    k = 0
    while len(out) < count:
        k += 1
        here = set()
        for i, j, b in edges:
            if b <= k and i in reach[k - b]:
                here.add(j)
        reach.append(here)
        if here:
            out.append(k)
    return out


def rationalize(scheme: Scheme, root: int = 0, allow_numeric: bool = False,
                m_count: int = 64) -> RationalizationResult:
    """Equivalent fixed-scale scheme whose generations contain the Kakutani sequence.

    Raises
    ------
    IncommensurableInput
        The scheme is incommensurable, or commensurable only by the numeric
        heuristic and ``allow_numeric`` is false.
    SlideInfeasible
        Some edge would get non-positive length after sliding.
    """
    graph = build_graph(scheme)
    verdict = commensurability(graph)
    if not verdict.commensurable:
        raise IncommensurableInput(f"scheme is incommensurable: {verdict.note}")
    if verdict.heuristic and not allow_numeric:
        raise IncommensurableInput("commensurability is only a numeric heuristic here; pass allow_numeric=True")
    exact = graph.exact
    unit_w = verdict.unit_weight if exact else Scalar.numeric(math.exp(verdict.unit_length))
    g = unit_w.log()

    P = _tree_weights(graph, root)
    res = _residues(P, unit_w, exact)
    cls = _residue_classes(res, g, exact)
    t = max(cls) + 1
    # potential of each vertex: residue minus its evenly spaced target
    E = [res[j] / unit_w ** Fraction(cls[j], t) for j in range(graph.n)]

    ratios: dict[int, Fraction] = {}
    slid: dict[int, Scalar] = {}
    for e in graph.edges:
        w = e.weight * E[e.source] / E[e.target]
        slid[e.edge_id] = w
        if w.log() <= RESIDUE_TOL * g:
            raise SlideInfeasible(
                f"edge {e.edge_id} ({graph.labels[e.source]}->{graph.labels[e.target]}) gets length "
                f"{w.log():.6g} <= 0 after sliding")
        r = _ratio(w, unit_w)
        if r is None:
            raise SlideInfeasible(f"edge {e.edge_id} is not a rational multiple of the unit after sliding")
        ratios[e.edge_id] = r
    a = 1
    for r in ratios.values():
        a = a * r.denominator // math.gcd(a, r.denominator)
    units = {eid: int(r * a) for eid, r in ratios.items()}
    contraction = unit_w ** Fraction(-1, a)
    u = g / a

    d = scheme.dimension
    # linear scale of each slid prototile relative to the input prototile
    scale = [p.volume ** Fraction(-1, d) / E[j] for j, p in enumerate(scheme.prototiles)]

    protos: list[Prototile] = []
    new_src: list[tuple[int, Scalar]] = []
    for j, p in enumerate(scheme.prototiles):
        protos.append(_scaled(p, p.label, scale[j]))
        new_src.append((j, scale[j]))

    chain_first: dict[tuple[int, int, int], int] = {}
    chain_rules: list[tuple[int, int]] = []  # (new index, next index)
    for eid, i, j, _ in scheme.edges():
        b = units[eid]
        key = (i, j, b)
        if b == 1 or key in chain_first:
            continue
        ids = []
        for step in range(1, b):
            sc = scale[j] * contraction ** (b - step)
            label = f"{scheme.prototiles[i].label}->{scheme.prototiles[j].label}@{step}/{b}"
            protos.append(_scaled(scheme.prototiles[j], label, sc))
            new_src.append((j, sc))
            ids.append(len(protos) - 1)
        chain_first[key] = ids[0]
        for s, k in enumerate(ids):
            chain_rules.append((k, ids[s + 1] if s + 1 < len(ids) else j))

    eye = tuple(tuple(1.0 if r == c else 0.0 for c in range(d)) for r in range(d))
    zero = (0.0,) * d
    rules: list[tuple[Rule, ...]] = []
    for i, rs in enumerate(scheme.rules):
        group = []
        for rule in rs:
            kids = []
            for c in rule.children:
                b = units[c.edge_id]
                target = c.child_type if b == 1 else chain_first[(i, c.child_type, b)]
                want = c.placement.scale * scale[i] / scale[c.child_type]
                if not want.close(contraction ** b, 1e-9):
                    raise SlideInfeasible(f"edge {c.edge_id}: slid scale {float(want):.12g} is not "
                                          f"contraction**{b}")
                tr = tuple(float(scale[i]) * x for x in c.placement.translation)
                kids.append(SubstitutionTile(target, Placement(contraction, c.placement.rotation, tr), -1))
            group.append(Rule(i, tuple(kids)))
        rules.append(tuple(group))
    chain_of = dict(chain_rules)
    for k in range(scheme.n, len(protos)):
        rules.append((Rule(k, (SubstitutionTile(chain_of[k], Placement(contraction, eye, zero), -1),)),))

    fixed = _number_edges(Scheme(d, tuple(protos), tuple(rules), scheme.rule_policy))
    k_m = kakutani_indices(units, scheme, root, m_count)
    log.info("rationalized: a=%d, %d prototiles, contraction %.12g", a, len(protos), float(contraction))
    return RationalizationResult(fixed, new_src, [s for s, _ in new_src], a, u, contraction, root, k_m,
                                 units, verdict.heuristic)


def _scaled(p: Prototile, label: str, sc: Scalar) -> Prototile:
    f = float(sc)
    vol = p.volume * sc ** len(p.marking_point)
    poly = None if p.polygon is None else tuple(tuple(f * x for x in q) for q in p.polygon)
    return Prototile(label, vol, tuple(f * x for x in p.marking_point), poly)


def _number_edges(scheme: Scheme) -> Scheme:
    """Assign edge ids along each prototile's first rule; alternatives follow child order."""
    rules = []
    nxt = 0
    for rs in scheme.rules:
        ids = list(range(nxt, nxt + len(rs[0].children)))
        nxt += len(ids)
        group = []
        for r in rs:
            group.append(Rule(r.parent_type, tuple(SubstitutionTile(c.child_type, c.placement, ids[k])
                                                   for k, c in enumerate(r.children))))
        rules.append(tuple(group))
    return Scheme(scheme.dimension, scheme.prototiles, tuple(rules), scheme.rule_policy)


def _collapsed(state, collapse, root_volume, exact: bool):
    out: dict = {}
    for t, v, n in state.multiset(exact=exact):
        key = (collapse[t] if collapse else t, v / root_volume)
        out[key] = out.get(key, 0) + n
    rows = sorted(out.items())
    if exact:
        return rows
    merged: list[list] = []
    for (t, v), n in rows:
        if merged and merged[-1][0][0] == t and v - merged[-1][0][1] <= 1e-9 * v:
            merged[-1][1] += n
        else:
            merged.append([(t, v), n])
    return [(k, n) for k, n in merged]


def _same(a, b, exact: bool) -> bool:
    if len(a) != len(b):
        return False
    for ((t1, v1), n1), ((t2, v2), n2) in zip(a, b):
        if t1 != t2 or n1 != n2:
            return False
        if exact:
            if v1 != v2:
                return False
        elif abs(float(v1) - float(v2)) > 1e-9 * max(abs(float(v1)), abs(float(v2))):
            return False
    return True


def verify_subsequence(scheme: Scheme, result: RationalizationResult, m_max: int) -> bool:
    """Check that Kakutani partition m matches generation k_m for m <= m_max.

    Compares the multisets of (source type, volume relative to the root)
    after mapping chain prototiles back to the types they copy.
    """
    k_m = list(result.k_m)
    if len(k_m) <= m_max:
        k_m = kakutani_indices(result.units, scheme, result.root, m_max + 1)
    orig = init(scheme, result.root)
    fixed = init(result.fixed_scheme, result.root)
    exact = orig.keys.exact_volume and fixed.keys.exact_volume
    v0 = orig.keys.root_volume[result.root]
    v1 = fixed.keys.root_volume[result.root]
    for m in range(m_max + 1):
        while fixed.step < k_m[m]:
            generation_step(fixed)
        if fixed.step != k_m[m]:
            log.info("k_m not increasing at m=%d", m)
            return False
        a = _collapsed(orig, None, v0, exact)
        b = _collapsed(fixed, result.collapse, v1, exact)
        if not _same(a, b, exact):
            log.info("mismatch at m=%d (k=%d)", m, k_m[m])
            return False
        kakutani_step(orig)
    return True
