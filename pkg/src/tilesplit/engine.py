"""Kakutani and generation sequences of partitions.

The frontier is stored as classes of tiles sharing a path-length key, so all
tiles of equal volume are substituted together.  A heap orders the classes
by length (largest volume first).  Without geometry a class only keeps counts
per (type, last edge); with geometry it also keeps the placements of its
tiles as stacked numpy arrays.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScheme
from .scheme import PathKeys, Scheme

__all__ = [
    "SplitMix64",
    "Block",
    "TileClass",
    "PartitionState",
    "Snapshot",
    "Trace",
    "init",
    "kakutani_step",
    "generation_step",
    "run",
    "marking_points",
    "tile_records",
]

NUMERIC_TIE_TOL = 1e-9
RENDER_CAP = 10**6
MASK64 = (1 << 64) - 1


class SplitMix64:
    """64-bit splitmix generator; one stream per run, advanced in frontier order."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


@dataclass
class Block:
    types: np.ndarray
    last_edge: np.ndarray
    depth: np.ndarray
    linear: np.ndarray  # (N, d, d)
    shift: np.ndarray  # (N, d)

    def __len__(self) -> int:
        return len(self.types)

    @staticmethod
    def concat(blocks: list["Block"]) -> "Block":
        if len(blocks) == 1:
            return blocks[0]
        return Block(*(np.concatenate([getattr(b, f) for b in blocks]) for f in
                       ("types", "last_edge", "depth", "linear", "shift")))


@dataclass
class TileClass:
    key: object
    length: float
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    blocks: list[Block] = field(default_factory=list)

    def size(self) -> int:
        return sum(self.counts.values())


@dataclass
class PartitionState:
    scheme: Scheme
    keys: PathKeys
    root: int
    track_geometry: bool
    classes: dict
    heap: list
    type_counts: list[int]
    type_volumes: list
    edge_counts: dict[int, int]
    edge_volumes: dict
    rng: SplitMix64
    step: int = 0
    seq: int = 0
    rr: list[int] = field(default_factory=list)

    @property
    def tile_count(self) -> int:
        return sum(self.type_counts)

    def class_volume(self, key):
        """Volume of every tile in the class with this key."""
        k = self.keys
        if k.exact_volume:
            w = key ** (-k.dimension)
            return k.root_volume[self.root] * w.as_fraction()
        return k.root_volume[self.root] * math.exp(-k.dimension * k.key_length(key))

    def min_length(self) -> float:
        self._drop_stale()
        return self.heap[0][0]

    def max_volume(self) -> float:
        self._drop_stale()
        return float(self.class_volume(self.heap[0][2]))

    def _drop_stale(self):
        while self.heap and self.heap[0][2] not in self.classes:
            heapq.heappop(self.heap)

    def sorted_classes(self) -> list[TileClass]:
        return sorted(self.classes.values(), key=lambda c: (c.length, repr(c.key)))

    def multiset(self, exact: bool = False) -> list[tuple[int, float, int]]:
        """(type, tile volume, count) for every class, merged over last edges.

        With ``exact=True`` volumes are returned as Fractions when the scheme
        has rational volume factors.
        """
        out: dict[tuple, int] = {}
        for c in self.sorted_classes():
            vol = self.class_volume(c.key)
            if not (exact and self.keys.exact_volume):
                vol = float(vol)
            for (t, _), n in c.counts.items():
                out[(t, vol)] = out.get((t, vol), 0) + n
        rows = sorted((t, v, n) for (t, v), n in out.items())
        if exact and self.keys.exact_volume:
            return rows
        merged: list[list] = []
        for t, v, n in rows:
            if merged and merged[-1][0] == t and v - merged[-1][1] <= NUMERIC_TIE_TOL * v:
                merged[-1][2] += n
            else:
                merged.append([t, v, n])
        return [tuple(r) for r in merged]


# ---------------------------------------------------------------------------

def init(scheme: Scheme, root: int | str = 0, track_geometry: bool = False, seed: int | None = None) -> PartitionState:
    """Trivial partition: the root prototile with identity placement."""
    if isinstance(root, str):
        root = scheme.index_of(root)
    if not 0 <= root < scheme.n:
        raise KeyError(f"unknown root prototile {root}")
    keys = PathKeys(scheme)
    d = scheme.dimension
    zero = keys.zero()
    vol0 = keys.root_volume[root]
    cls = TileClass(zero, 0.0, {(root, -1): 1})
    if track_geometry:
        cls.blocks.append(Block(np.array([root]), np.array([-1]), np.array([0]),
                                np.eye(d)[None, :, :], np.zeros((1, d))))
    n = scheme.n
    tv = [vol0 * 0 for _ in range(n)]
    tv[root] = vol0
    tc = [0] * n
    tc[root] = 1
    s = scheme.rule_policy.seed if seed is None else seed
    return PartitionState(scheme, keys, root, track_geometry, {zero: cls}, [(0.0, 0, zero)],
                          tc, tv, {-1: 1}, {-1: vol0}, SplitMix64(s), 0, 1, [0] * n)


def _choose_rules(state: PartitionState, types: np.ndarray) -> np.ndarray:
    pol = state.scheme.rule_policy
    rules = state.scheme.rules
    out = np.zeros(len(types), dtype=np.int64)
    if all(len(rs) == 1 for rs in rules):
        return out
    if pol.kind == "fixed":
        out[:] = pol.index
        return out
    for i, t in enumerate(types.tolist()):
        m = len(rules[t])
        if m == 1:
            continue
        if pol.kind == "round_robin":
            out[i] = state.rr[t] % m
            state.rr[t] += 1
        else:
            out[i] = state.rng.below(m)
    return out


def _child_class(state: PartitionState, table: dict, heap: list | None, key) -> TileClass:
    c = table.get(key)
    if c is None:
        length = state.keys.key_length(key)
        c = TileClass(key, length)
        table[key] = c
        if heap is not None:
            heapq.heappush(heap, (length, state.seq, key))
            state.seq += 1
    return c


def _substitute(state: PartitionState, cls: TileClass, table: dict, heap: list | None):
    """Replace every tile of ``cls`` by its children, updating the census."""
    scheme, keys = state.scheme, state.keys
    vol = state.class_volume(cls.key)
    for (t, e), n in cls.counts.items():
        state.type_counts[t] -= n
        state.type_volumes[t] -= n * vol
        state.edge_counts[e] -= n
        state.edge_volumes[e] -= n * vol
        for c in scheme.rules[t][0].children:
            child = _child_class(state, table, heap, keys.add(cls.key, c.edge_id))
            k = (c.child_type, c.edge_id)
            child.counts[k] = child.counts.get(k, 0) + n
            cv = vol * keys.share[c.edge_id]
            state.type_counts[c.child_type] += n
            state.type_volumes[c.child_type] += n * cv
            state.edge_counts[c.edge_id] = state.edge_counts.get(c.edge_id, 0) + n
            state.edge_volumes[c.edge_id] = state.edge_volumes.get(c.edge_id, 0) + n * cv
    if not state.track_geometry:
        return
    blk = Block.concat(cls.blocks)
    choice = _choose_rules(state, blk.types)
    for t in sorted(set(blk.types.tolist())):
        for r in range(len(scheme.rules[t])):
            mask = (blk.types == t) & (choice == r)
            if not mask.any():
                continue
            L, S, D = blk.linear[mask], blk.shift[mask], blk.depth[mask]
            m = len(L)
            for c in scheme.rules[t][r].children:
                lin = c.placement.linear()
                child = _child_class(state, table, heap, keys.add(cls.key, c.edge_id))
                child.blocks.append(Block(
                    np.full(m, c.child_type), np.full(m, c.edge_id), D + 1,
                    L @ lin, np.einsum("nij,j->ni", L, c.placement.shift()) + S))


def kakutani_step(state: PartitionState) -> PartitionState:
    """Substitute every tile of maximal volume (one tie class)."""
    if state.keys.trivial:
        raise InvalidScheme("Kakutani steps need every constant of substitution below 1; "
                            "this scheme has one-child rules, use generation steps")
    state._drop_stale()
    length, _, key = heapq.heappop(state.heap)
    popped = [state.classes.pop(key)]
    if not state.keys.exact:
        tol = NUMERIC_TIE_TOL * max(length, 1.0)
        while state.heap and state.heap[0][0] - length <= tol:
            _, _, k2 = heapq.heappop(state.heap)
            if k2 in state.classes:
                popped.append(state.classes.pop(k2))
    for cls in popped:
        _substitute(state, cls, state.classes, state.heap)
    state.step += 1
    return state


def generation_step(state: PartitionState) -> PartitionState:
    """Substitute every tile once."""
    old = state.classes
    state.classes = {}
    state.heap = []
    for cls in sorted(old.values(), key=lambda c: (c.length, repr(c.key))):
        _substitute(state, cls, state.classes, state.heap)
    state.step += 1
    return state


# ---------------------------------------------------------------------------

def marking_points(state: PartitionState) -> np.ndarray:
    """Images of the prototile marking points under every tile's placement."""
    if not state.track_geometry:
        raise ValueError("marking points need a state initialised with track_geometry=True")
    marks = np.array([p.marking_point for p in state.scheme.prototiles], dtype=float)
    parts = []
    for c in state.sorted_classes():
        for b in c.blocks:
            parts.append(np.einsum("nij,nj->ni", b.linear, marks[b.types]) + b.shift)
    d = state.scheme.dimension
    return np.concatenate(parts) if parts else np.zeros((0, d))


def tile_records(state: PartitionState) -> list[dict]:
    """Flat records {type, depth, volume, linear, shift, last_edge} of every tile."""
    if not state.track_geometry:
        raise ValueError("tile records need a state initialised with track_geometry=True")
    out = []
    for c in state.sorted_classes():
        vol = float(state.class_volume(c.key))
        for b in c.blocks:
            for i in range(len(b)):
                out.append({"type": int(b.types[i]), "depth": int(b.depth[i]), "volume": vol,
                            "linear": b.linear[i], "shift": b.shift[i], "last_edge": int(b.last_edge[i])})
    return out


@dataclass
class Snapshot:
    step: int
    level: float  # l_m of the maximal-volume class (kakutani) or k (generation)
    tiles: int
    type_counts: list[int]
    type_volumes: list[float]
    edge_counts: dict[int, int]
    edge_volumes: dict[int, float]
    max_volume: float
    discrepancy: float | None = None
    wall: float = 0.0

    def count_fractions(self) -> np.ndarray:
        c = np.asarray(self.type_counts, dtype=float)
        return c / c.sum()

    def volume_fractions(self) -> np.ndarray:
        v = np.asarray(self.type_volumes, dtype=float)
        return v / v.sum()


@dataclass
class Trace:
    mode: str
    root: int
    seed: int
    labels: list[str]
    snapshots: list[Snapshot]
    truncated: bool = False

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def _snapshot(state: PartitionState, mode: str, t0: float, disc) -> Snapshot:
    level = state.min_length() if mode == "kakutani" else float(state.step)
    d_val = None
    if disc is not None:
        d_val = disc(state)
    return Snapshot(state.step, level, state.tile_count, list(state.type_counts),
                    [float(v) for v in state.type_volumes],
                    {e: n for e, n in sorted(state.edge_counts.items()) if e >= 0},
                    {e: float(v) for e, v in sorted(state.edge_volumes.items()) if e >= 0},
                    state.max_volume(), d_val, time.perf_counter() - t0)


def run(scheme: Scheme, root: int | str = 0, mode: str = "kakutani", *, max_steps: int | None = None,
        max_tiles: int | None = None, min_tile_volume: float | None = None, snapshot_every: int = 1,
        track_geometry: bool = False, discrepancy=None, seed: int | None = None,
        tile_cap: int = RENDER_CAP) -> tuple[Trace, PartitionState]:
    """Run steps until a stop condition holds; returns the trace and final state.

    ``discrepancy`` is an optional callable ``state -> float`` evaluated at
    every snapshot.  With geometry tracking, exceeding ``tile_cap`` tiles
    stops the run and flags the trace as truncated.
    """
    if mode not in ("kakutani", "generation"):
        raise ValueError(f"unknown mode {mode!r}")
    if max_steps is None and max_tiles is None and min_tile_volume is None:
        raise ValueError("need at least one stop condition")
    state = init(scheme, root, track_geometry, seed)
    step_fn = kakutani_step if mode == "kakutani" else generation_step
    t0 = time.perf_counter()
    snaps = [_snapshot(state, mode, t0, discrepancy)]
    truncated = False
    while True:
        if max_steps is not None and state.step >= max_steps:
            break
        if max_tiles is not None and state.tile_count >= max_tiles:
            break
        if min_tile_volume is not None and state.max_volume() < min_tile_volume:
            break
        if track_geometry and state.tile_count > tile_cap:
            truncated = True
            break
        step_fn(state)
        if state.step % snapshot_every == 0:
            snaps.append(_snapshot(state, mode, t0, discrepancy))
    if snaps[-1].step != state.step:
        snaps.append(_snapshot(state, mode, t0, discrepancy))
    s = scheme.rule_policy.seed if seed is None else seed
    return Trace(mode, state.root, s, scheme.labels, snaps, truncated), state
