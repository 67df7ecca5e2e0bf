"""Multiscale substitution schemes: data model, loading, constants, normalization.

A scheme lists prototiles with volumes and, for each prototile, one or more
rules that cut it into scaled, rotated and translated copies of prototiles.
The constant of substitution of a child ``alpha * T_j`` inside ``T_i`` is

    beta = (vol T_j / vol T_i) ** (1/d) * alpha,

so ``beta**d`` is the share of the parent's volume taken by that child and the
shares of one rule sum to one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidScheme, SchemeParseError
from .scalar import Scalar, exact_sum, parse_scalar

__all__ = [
    "RulePolicy",
    "Prototile",
    "Placement",
    "SubstitutionTile",
    "Rule",
    "Scheme",
    "Tile",
    "PathKeys",
    "Check",
    "ValidationReport",
    "load_scheme",
    "load_scheme_file",
    "dump_scheme",
    "compute_betas",
    "validate_scheme",
    "normalize_scheme",
    "apply_rule",
    "root_tile",
    "overlap_check",
]

ORTHO_TOL = 1e-12
SUM_TOL = 1e-12
NUMERIC_VOLUME_TOL = 1e-9


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RulePolicy:
    """How a rule is picked each time a tile is substituted."""

    kind: str = "fixed"  # fixed | round_robin | random
    index: int = 0
    seed: int = 0

    def to_json(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "index": self.index}
        if self.kind == "random":
            return {"kind": "random", "seed": self.seed}
        return {"kind": "round_robin"}


@dataclass(frozen=True)
class Prototile:
    label: str
    volume: Scalar
    marking_point: tuple[float, ...]
    polygon: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class Placement:
    """Similarity ``x -> scale * rotation @ x + translation``."""

    scale: Scalar
    rotation: tuple[tuple[float, ...], ...]
    translation: tuple[float, ...]

    def linear(self) -> np.ndarray:
        return float(self.scale) * np.asarray(self.rotation, dtype=float)

    def shift(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)


@dataclass(frozen=True)
class SubstitutionTile:
    child_type: int
    placement: Placement
    edge_id: int


@dataclass(frozen=True)
class Rule:
    parent_type: int
    children: tuple[SubstitutionTile, ...]


@dataclass(frozen=True)
class Scheme:
    dimension: int
    prototiles: tuple[Prototile, ...]
    rules: tuple[tuple[Rule, ...], ...]
    rule_policy: RulePolicy = field(default_factory=RulePolicy)

    @property
    def n(self) -> int:
        return len(self.prototiles)

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.prototiles]

    @property
    def exact(self) -> bool:
        """True when every volume and every scale is an exact scalar."""
        if not all(p.volume.exact for p in self.prototiles):
            return False
        return all(c.placement.scale.exact for rs in self.rules for r in rs for c in r.children)

    def index_of(self, label: str) -> int:
        for i, p in enumerate(self.prototiles):
            if p.label == label:
                return i
        raise KeyError(label)

    def edges(self) -> list[tuple[int, int, int, Scalar]]:
        """(edge_id, parent, child_type, alpha) for every substitution tile, by edge_id."""
        out = []
        for i, rs in enumerate(self.rules):
            for c in rs[0].children:
                out.append((c.edge_id, i, c.child_type, c.placement.scale))
        out.sort(key=lambda e: e[0])
        return out

    @property
    def edge_count(self) -> int:
        return sum(len(rs[0].children) for rs in self.rules)


@dataclass(eq=False)
class Tile:
    """A tile in a partition of a root prototile.

    ``key`` identifies the path length from the root: an exact `Scalar`
    weight ``exp(length)`` in exact mode or the float length otherwise.
    """

    type: int
    key: object
    volume: object  # Fraction in exact mode, float otherwise
    depth: int
    linear: np.ndarray
    shift: np.ndarray
    last_edge: int | None = None


# ---------------------------------------------------------------------------
# loading and serialization
# ---------------------------------------------------------------------------

_TOP = {"dimension", "prototiles", "rules", "rule_policy", "description"}
_PROTO = {"label", "volume", "marking_point", "polygon"}
_RULE = {"parent", "children"}
_CHILD = {"type", "alpha", "rotation", "translation"}


def _fail(msg: str):
    raise SchemeParseError(msg)


def _check_fields(obj, allowed: set, where: str, required: Sequence[str] = ()):
    if not isinstance(obj, dict):
        _fail(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        _fail(f"{where}: unknown field(s) {sorted(extra)}")
    for r in required:
        if r not in obj:
            _fail(f"{where}: missing field '{r}'")


def _vector(obj, d: int, where: str) -> tuple[float, ...]:
    if not isinstance(obj, list) or len(obj) != d:
        _fail(f"{where}: expected a list of {d} numbers")
    try:
        return tuple(float(x) for x in obj)
    except (TypeError, ValueError):
        _fail(f"{where}: non-numeric entry")


def _scalar(obj, where: str) -> Scalar:
    try:
        return parse_scalar(obj)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        _fail(f"{where}: {exc}")


def _centroid(poly: np.ndarray) -> np.ndarray:
    if poly.shape[1] == 1:
        return np.array([(poly.min() + poly.max()) / 2.0])
    if poly.shape[1] == 2 and len(poly) >= 3:
        x, y = poly[:, 0], poly[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2.0
        if abs(area) > 1e-15:
            return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)
    return poly.mean(axis=0)


def _match_edges(first: Rule, other: Rule, where: str) -> tuple[SubstitutionTile, ...]:
    """Give the children of an alternative rule the edge ids of the first rule.

    Alternative rules must use the same multiset of (child type, scale); each
    child inherits the edge id of an unused matching child of the first rule.
    """
    pool: dict[tuple, list[int]] = {}
    for c in first.children:
        pool.setdefault((c.child_type, c.placement.scale), []).append(c.edge_id)
    out = []
    for c in other.children:
        key = (c.child_type, c.placement.scale)
        ids = pool.get(key)
        if not ids:
            # numeric scales may differ in the last bits
            for (t, s), cand in pool.items():
                if t == c.child_type and cand and s.close(c.placement.scale, 1e-12):
                    ids = cand
                    break
        if not ids:
            _fail(f"{where}: rule does not use the same substitution tiles as the first rule")
        out.append(SubstitutionTile(c.child_type, c.placement, ids.pop(0)))
    if any(pool.values()):
        _fail(f"{where}: rule does not use the same substitution tiles as the first rule")
    return tuple(out)


def load_scheme(document: str) -> Scheme:
    """Parse a scheme config document (JSON text)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemeParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scheme_from_dict(doc)


def load_scheme_file(path) -> Scheme:
    with open(path, encoding="utf-8") as fh:
        return load_scheme(fh.read())


def scheme_from_dict(doc) -> Scheme:
    _check_fields(doc, _TOP, "document", ("dimension", "prototiles", "rules"))
    d = doc["dimension"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        _fail("dimension: expected a positive integer")
    protos_raw = doc["prototiles"]
    if not isinstance(protos_raw, list) or not protos_raw:
        _fail("prototiles: expected a non-empty list")

    protos = []
    seen = set()
    for k, p in enumerate(protos_raw):
        where = f"prototiles[{k}]"
        _check_fields(p, _PROTO, where, ("label", "volume"))
        label = p["label"]
        if not isinstance(label, str) or not label:
            _fail(f"{where}.label: expected a non-empty string")
        if label in seen:
            _fail(f"{where}.label: duplicate label '{label}'")
        seen.add(label)
        vol = _scalar(p["volume"], f"{where}.volume")
        poly = None
        if p.get("polygon") is not None:
            if not isinstance(p["polygon"], list) or len(p["polygon"]) < 2:
                _fail(f"{where}.polygon: expected a list of points")
            poly = tuple(_vector(q, d, f"{where}.polygon") for q in p["polygon"])
        if p.get("marking_point") is not None:
            mark = _vector(p["marking_point"], d, f"{where}.marking_point")
        elif poly is not None:
            mark = tuple(float(x) for x in _centroid(np.asarray(poly)))
        else:
            mark = (0.0,) * d
        protos.append(Prototile(label, vol, mark, poly))
    labels = {p.label: i for i, p in enumerate(protos)}

    rules_raw = doc["rules"]
    if not isinstance(rules_raw, list):
        _fail("rules: expected a list")
    per_parent: list[list[Rule]] = [[] for _ in protos]
    eye = tuple(tuple(1.0 if a == b else 0.0 for b in range(d)) for a in range(d))
    for k, r in enumerate(rules_raw):
        where = f"rules[{k}]"
        _check_fields(r, _RULE, where, ("parent", "children"))
        if r["parent"] not in labels:
            _fail(f"{where}.parent: unknown prototile label '{r['parent']}'")
        parent = labels[r["parent"]]
        if not isinstance(r["children"], list) or not r["children"]:
            _fail(f"{where}.children: expected a non-empty list")
        kids = []
        for c_idx, c in enumerate(r["children"]):
            cw = f"{where}.children[{c_idx}]"
            _check_fields(c, _CHILD, cw, ("type", "alpha"))
            if c["type"] not in labels:
                _fail(f"{cw}.type: unknown prototile label '{c['type']}'")
            alpha = _scalar(c["alpha"], f"{cw}.alpha")
            if "rotation" in c and c["rotation"] is not None:
                flat = c["rotation"]
                if not isinstance(flat, list) or len(flat) != d * d:
                    _fail(f"{cw}.rotation: expected {d * d} numbers (row-major), dimension mismatch")
                rot = tuple(tuple(float(flat[a * d + b]) for b in range(d)) for a in range(d))
            else:
                rot = eye
            trans = _vector(c["translation"], d, f"{cw}.translation") if c.get("translation") is not None else (0.0,) * d
            kids.append(SubstitutionTile(labels[c["type"]], Placement(alpha, rot, trans), -1))
        per_parent[parent].append(Rule(parent, tuple(kids)))

    # stable edge ids: numbered along the first rule of each prototile
    next_id = 0
    rules: list[tuple[Rule, ...]] = []
    for i, rs in enumerate(per_parent):
        if not rs:
            _fail(f"prototile '{protos[i].label}' has no substitution rule")
        first_children = []
        for c in rs[0].children:
            first_children.append(SubstitutionTile(c.child_type, c.placement, next_id))
            next_id += 1
        first = Rule(i, tuple(first_children))
        group = [first]
        for k, other in enumerate(rs[1:], start=1):
            group.append(Rule(i, _match_edges(first, other, f"rules for '{protos[i].label}' (#{k})")))
        rules.append(tuple(group))

    pol = doc.get("rule_policy", {"kind": "fixed", "index": 0})
    _check_fields(pol, {"kind", "index", "seed"}, "rule_policy", ("kind",))
    kind = pol["kind"]
    if kind not in ("fixed", "round_robin", "random"):
        _fail(f"rule_policy.kind: unknown kind '{kind}'")
    policy = RulePolicy(kind, int(pol.get("index", 0)), int(pol.get("seed", 0)))
    if kind == "fixed" and any(policy.index >= len(rs) or policy.index < 0 for rs in rules):
        _fail("rule_policy.index: out of range for some prototile")
    return Scheme(d, tuple(protos), tuple(rules), policy)


def scheme_to_dict(scheme: Scheme) -> dict:
    d = scheme.dimension
    protos = []
    for p in scheme.prototiles:
        entry = {"label": p.label, "volume": p.volume.to_json(), "marking_point": list(p.marking_point)}
        if p.polygon is not None:
            entry["polygon"] = [list(q) for q in p.polygon]
        protos.append(entry)
    rules = []
    for i, rs in enumerate(scheme.rules):
        for r in rs:
            kids = []
            for c in r.children:
                kids.append({
                    "type": scheme.prototiles[c.child_type].label,
                    "alpha": c.placement.scale.to_json(),
                    "rotation": [c.placement.rotation[a][b] for a in range(d) for b in range(d)],
                    "translation": list(c.placement.translation),
                })
            rules.append({"parent": scheme.prototiles[i].label, "children": kids})
    return {"dimension": d, "prototiles": protos, "rules": rules,
            "rule_policy": scheme.rule_policy.to_json()}


def dump_scheme(scheme: Scheme) -> str:
    return json.dumps(scheme_to_dict(scheme), indent=2)


# ---------------------------------------------------------------------------
# constants of substitution
# ---------------------------------------------------------------------------

def _beta(scheme: Scheme, parent: int, child: int, alpha: Scalar) -> Scalar:
    ratio = scheme.prototiles[child].volume / scheme.prototiles[parent].volume
    return ratio ** Fraction(1, scheme.dimension) * alpha


def _beta_in_range(b: Scalar) -> bool:
    if b.exact and b.is_one():
        return False
    return b.log() < 0.0


def _is_trivial(scheme: Scheme, parent: int, b: Scalar) -> bool:
    """A one-child rule whose child fills the parent: beta = 1 is allowed there."""
    if any(len(r.children) != 1 for r in scheme.rules[parent]):
        return False
    return b.is_one() if b.exact else abs(b.log()) <= 1e-12


def compute_betas(scheme: Scheme, check: bool = True) -> dict[int, Scalar]:
    """Constants of substitution keyed by edge id.

    Values must lie in (0, 1), except for one-child rules (chain prototiles
    of a rationalized scheme) where the single child has beta = 1.
    """
    out = {}
    for eid, i, j, alpha in scheme.edges():
        b = _beta(scheme, i, j, alpha)
        if check and not (_beta_in_range(b) or _is_trivial(scheme, i, b)):
            raise InvalidScheme(
                f"edge {eid} ({scheme.prototiles[i].label} -> {scheme.prototiles[j].label}): "
                f"constant of substitution {float(b):.6g} is not in (0, 1)")
        out[eid] = b
    return out


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]
    exact: bool

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"ok": self.ok, "exact": self.exact,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks]}


def validate_scheme(scheme: Scheme, overlap_samples: int = 0, seed: int = 0) -> ValidationReport:
    """Check constants, volume shares, rotations and marking points.

    Set ``overlap_samples`` (e.g. 100000) to add the Monte-Carlo partition
    check for prototiles that carry geometry.
    """
    checks: list[Check] = []
    d = scheme.dimension
    betas = compute_betas(scheme, check=False)
    for eid, i, j, _ in scheme.edges():
        b = betas[eid]
        trivial = _is_trivial(scheme, i, b)
        ok = _beta_in_range(b) or trivial
        checks.append(Check(f"beta_range[edge {eid}]", ok,
                            f"{scheme.prototiles[i].label}->{scheme.prototiles[j].label} beta={float(b):.17g}"
                            + (" (one-child rule)" if trivial else "")
                            + ("" if ok else " InvalidScheme: beta not in (0,1)")))
    by_parent: dict[int, list[Scalar]] = {}
    for eid, i, _, _ in scheme.edges():
        by_parent.setdefault(i, []).append(betas[eid] ** d)
    for i, shares in sorted(by_parent.items()):
        total = exact_sum(shares)
        if total is not None:
            ok, detail = total == 1, f"exact sum {total}"
        else:
            s = math.fsum(float(x) for x in shares)
            ok, detail = abs(s - 1.0) <= SUM_TOL, f"sum {s:.17g}"
        checks.append(Check(f"volume_shares[{scheme.prototiles[i].label}]", ok, detail))
    worst = 0.0
    for rs in scheme.rules:
        for r in rs:
            for c in r.children:
                R = np.asarray(c.placement.rotation)
                worst = max(worst, float(np.abs(R @ R.T - np.eye(d)).max()))
    checks.append(Check("rotations_orthogonal", worst <= ORTHO_TOL, f"max |R R^T - I| = {worst:.3g}"))
    for p in scheme.prototiles:
        if p.polygon is not None:
            poly = np.asarray(p.polygon)
            m = np.asarray(p.marking_point)
            ok = bool(np.all(m >= poly.min(axis=0) - 1e-12) and np.all(m <= poly.max(axis=0) + 1e-12))
            checks.append(Check(f"marking_point[{p.label}]", ok, str(p.marking_point)))
    if overlap_samples > 0:
        for i, msg, ok in overlap_check(scheme, overlap_samples, seed):
            checks.append(Check(f"overlap[{scheme.prototiles[i].label}]", ok, msg))
    return ValidationReport(checks, scheme.exact)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def normalize_scheme(scheme: Scheme) -> Scheme:
    """Equivalent scheme with all prototile volumes equal to one.

    Prototile ``i`` is rescaled about the origin by ``c_i = vol(T_i)**(-1/d)``;
    a child ``alpha R T_j + t`` of ``T_i`` becomes ``(c_i alpha / c_j) R T'_j + c_i t``,
    so the new scale equals the constant of substitution.
    """
    d = scheme.dimension
    if all(p.volume.is_one() for p in scheme.prototiles):
        return scheme
    c = [p.volume ** Fraction(-1, d) for p in scheme.prototiles]
    cf = [float(x) for x in c]
    protos = []
    for p, ci in zip(scheme.prototiles, cf):
        poly = None if p.polygon is None else tuple(tuple(ci * x for x in q) for q in p.polygon)
        protos.append(Prototile(p.label, Scalar.one(), tuple(ci * x for x in p.marking_point), poly))
    rules = []
    for i, rs in enumerate(scheme.rules):
        group = []
        for r in rs:
            kids = []
            for ch in r.children:
                j = ch.child_type
                pl = ch.placement
                newpl = Placement(c[i] * pl.scale / c[j], pl.rotation, tuple(cf[i] * x for x in pl.translation))
                kids.append(SubstitutionTile(j, newpl, ch.edge_id))
            group.append(Rule(i, tuple(kids)))
        rules.append(tuple(group))
    return Scheme(d, tuple(protos), tuple(rules), scheme.rule_policy)


# ---------------------------------------------------------------------------
# tiles and keys
# ---------------------------------------------------------------------------

class PathKeys:
    """Per-edge contributions to tile keys and tile volumes.

    In exact mode an edge contributes the exact weight ``1/beta`` and keys
    multiply; otherwise it contributes the float length ``log(1/beta)`` and
    keys add.  The volume factor of an edge is ``beta**d``, a Fraction when
    every such factor is rational.
    """

    def __init__(self, scheme: Scheme):
        betas = compute_betas(scheme)
        d = scheme.dimension
        self.dimension = d
        self.exact = all(b.exact for b in betas.values())
        self.weight = {e: b.inverse() for e, b in betas.items()}
        self.length = {e: -b.log() for e, b in betas.items()}
        shares = {e: b ** d for e, b in betas.items()}
        fr = {e: s.as_fraction() for e, s in shares.items()}
        vols = [p.volume.as_fraction() for p in scheme.prototiles]
        self.exact_volume = self.exact and all(v is not None for v in fr.values()) and all(v is not None for v in vols)
        if self.exact_volume:
            self.share = fr
            self.root_volume = vols
        else:
            self.share = {e: float(s) for e, s in shares.items()}
            self.root_volume = [float(p.volume) for p in scheme.prototiles]
        self.contribution = self.weight if self.exact else self.length
        # edges of one-child rules leave the volume unchanged
        self.trivial = frozenset(e for e, ln in self.length.items() if abs(ln) <= 1e-12)

    def zero(self):
        return Scalar.one() if self.exact else 0.0

    def add(self, key, edge_id: int):
        if self.exact:
            return key * self.weight[edge_id]
        return key + self.length[edge_id]

    def key_length(self, key) -> float:
        return key.log() if self.exact else float(key)


def root_tile(scheme: Scheme, root: int, keys: PathKeys) -> Tile:
    d = scheme.dimension
    return Tile(root, keys.zero(), keys.root_volume[root], 0, np.eye(d), np.zeros(d), None)


def apply_rule(tile: Tile, rule: Rule, keys: PathKeys) -> list[Tile]:
    """Substitute one tile; child placements compose with the tile's placement."""
    if rule.parent_type != tile.type:
        raise RuntimeError(f"rule for type {rule.parent_type} applied to tile of type {tile.type}")
    out = []
    for c in rule.children:
        lin = c.placement.linear()
        out.append(Tile(
            c.child_type,
            keys.add(tile.key, c.edge_id),
            tile.volume * keys.share[c.edge_id],
            tile.depth + 1,
            tile.linear @ lin,
            tile.linear @ c.placement.shift() + tile.shift,
            c.edge_id,
        ))
    return out


# ---------------------------------------------------------------------------
# Monte-Carlo partition check
# ---------------------------------------------------------------------------

def overlap_check(scheme: Scheme, samples: int = 100_000, seed: int = 0, shell: float = 1e-6):
    """Sample points in each prototile and count how many children cover them.

    Yields ``(prototile index, message, passed)``.  Samples within ``shell``
    of a child boundary are ignored.  Fails when any remaining sample lies in
    two children or fewer than 99.9% of them are covered.
    """
    rng = np.random.default_rng(seed)
    d = scheme.dimension
    for i, p in enumerate(scheme.prototiles):
        if p.polygon is None or any(scheme.prototiles[c.child_type].polygon is None for c in scheme.rules[i][0].children):
            continue
        for r_idx, rule in enumerate(scheme.rules[i]):
            parent = np.asarray(p.polygon)
            kids = []
            for c in rule.children:
                q = np.asarray(scheme.prototiles[c.child_type].polygon)
                kids.append(q @ c.placement.linear().T + c.placement.shift())
            if d == 1:
                lo, hi = parent.min(), parent.max()
                x = rng.uniform(lo, hi, samples)
                cover = np.zeros(samples, int)
                near = np.zeros(samples, bool)
                for k in kids:
                    a, b = k.min(), k.max()
                    cover += (x > a) & (x < b)
                    near |= (np.abs(x - a) < shell) | (np.abs(x - b) < shell)
            elif d == 2:
                import shapely
                poly = shapely.Polygon(parent)
                lo, hi = parent.min(axis=0), parent.max(axis=0)
                pts = np.empty((0, 2))
                while len(pts) < samples:
                    cand = rng.uniform(lo, hi, (2 * samples, 2))
                    inside = shapely.contains_xy(poly, cand[:, 0], cand[:, 1])
                    pts = np.vstack([pts, cand[inside]])
                pts = pts[:samples]
                cover = np.zeros(samples, int)
                near = np.zeros(samples, bool)
                for k in kids:
                    kp = shapely.Polygon(k)
                    cover += shapely.contains_xy(kp, pts[:, 0], pts[:, 1])
                    near |= shapely.distance(kp.exterior, shapely.points(pts)) < shell
            else:
                continue
            cover = cover[~near]
            double = int((cover >= 2).sum())
            frac = float((cover >= 1).mean()) if len(cover) else 1.0
            ok = double == 0 and frac >= 0.999
            yield i, f"rule {r_idx}: {double} doubly covered, coverage {frac:.5f}", ok
