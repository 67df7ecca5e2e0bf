"""Discrepancy of marking points, predicted frequencies, and trace comparison."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CommensurableScheme, NotIrreducible, NotPrimitive
from .graph import build_graph, commensurability, strongly_connected
from .scheme import Scheme, compute_betas
from .spectral import (
    perron_eigen,
    primitivity,
    q_matrix,
    substitution_matrix,
    weighted_substitution_matrix,
)

__all__ = [
    "star_discrepancy_1d",
    "box_discrepancy",
    "DiscrepancyCurve",
    "state_discrepancy",
    "FrequencyPrediction",
    "predicted_frequencies_incommensurable",
    "predicted_frequencies_fixed_scale",
    "predicted_tile_counts",
    "generation_counts",
    "OscillationVerdict",
    "classify_oscillation",
    "ComparisonReport",
    "compare",
]

CONVERGENCE_BAND = 0.01
OSCILLATION_FACTOR = 5.0
VOLUME_MC_SAMPLES = 100_000


# ---------------------------------------------------------------------------
# discrepancy
# ---------------------------------------------------------------------------

def star_discrepancy_1d(points) -> float:
    """Exact star discrepancy of points in [0, 1]."""
    x = np.sort(np.asarray(points, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("star discrepancy of an empty set")
    if x[0] < 0.0 or x[-1] > 1.0:
        raise ValueError("points must lie in [0, 1]")
    i = np.arange(1, n + 1)
    return float(max((x - (i - 1) / n).max(), (i / n - x).max()))


def _random_boxes(lo, hi, boxes: int, rng) -> tuple[np.ndarray, np.ndarray]:
    a = rng.uniform(lo, hi, size=(boxes, len(lo)))
    b = rng.uniform(lo, hi, size=(boxes, len(lo)))
    return np.minimum(a, b), np.maximum(a, b)


def _polygon_samples(polygon, n: int, rng) -> np.ndarray:
    import shapely

    poly = shapely.Polygon(polygon)
    lo, hi = np.asarray(poly.bounds[:2]), np.asarray(poly.bounds[2:])
    out = []
    got = 0
    while got < n:
        pts = rng.uniform(lo, hi, size=(2 * n, 2))
        pts = pts[shapely.contains_xy(poly, pts[:, 0], pts[:, 1])]
        out.append(pts)
        got += len(pts)
    return np.concatenate(out)[:n]


def _is_box(polygon: np.ndarray) -> bool:
    lo, hi = polygon.min(axis=0), polygon.max(axis=0)
    if polygon.shape[1] == 1:
        return True
    if len(polygon) != 4:
        return False
    return all(np.isclose(c, lo).sum() + np.isclose(c, hi).sum() == polygon.shape[1] for c in polygon)


def box_discrepancy(points, boxes: int = 1000, seed: int = 0, region=None,
                    mc_samples: int = VOLUME_MC_SAMPLES) -> float:
    """Maximum deviation between point fraction and region fraction over random boxes.

    Parameters
    ----------
    points : (N, d) array
    boxes : number of seeded random axis-parallel boxes inside the bounding box
    region : polygon vertices of the root tile; ``None`` means the bounding box
        of the points.  For a non-rectangular region the covered fraction of
        each box is estimated from ``mc_samples`` uniform samples.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if boxes < 1:
        raise ValueError("boxes must be >= 1")
    rng = np.random.default_rng(seed)
    if region is None:
        poly = np.vstack([pts.min(axis=0), pts.max(axis=0)])
        rect = True
    else:
        poly = np.asarray(region, dtype=float)
        rect = _is_box(poly)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    blo, bhi = _random_boxes(lo, hi, boxes, rng)
    if rect:
        ext = np.where(hi > lo, hi - lo, 1.0)
        vol = np.prod((bhi - blo) / ext, axis=1)
        ref = None
    else:
        ref = _polygon_samples(poly, mc_samples, rng)
    worst = 0.0
    chunk = max(1, 2_000_000 // max(len(pts), 1))
    for s in range(0, boxes, chunk):
        a, b = blo[s:s + chunk, None, :], bhi[s:s + chunk, None, :]
        frac = ((pts[None] >= a) & (pts[None] <= b)).all(axis=2).mean(axis=1)
        if ref is None:
            v = vol[s:s + chunk]
        else:
            v = ((ref[None] >= a) & (ref[None] <= b)).all(axis=2).mean(axis=1)
        worst = max(worst, float(np.abs(frac - v).max()))
    return worst


@dataclass
class DiscrepancyCurve:
    kind: str  # star_1d_exact | box_monte_carlo
    points: list[tuple[int, float]] = field(default_factory=list)

    def add(self, n: int, value: float):
        self.points.append((int(n), float(value)))

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "value", "kind"])
        for n, v in self.points:
            w.writerow([n, repr(v), self.kind])
        return buf.getvalue()


def state_discrepancy(state, boxes: int = 1000, seed: int = 0) -> tuple[str, float]:
    """Discrepancy of the marking points of a geometry-tracking state."""
    from .engine import marking_points

    pts = marking_points(state)
    proto = state.scheme.prototiles[state.root]
    d = state.scheme.dimension
    if d == 1:
        if proto.polygon is None:
            raise ValueError("1-D discrepancy needs the root interval geometry")
        ends = np.asarray(proto.polygon, dtype=float).ravel()
        lo, hi = ends.min(), ends.max()
        return "star_1d_exact", star_discrepancy_1d(np.clip((pts.ravel() - lo) / (hi - lo), 0.0, 1.0))
    if proto.polygon is None:
        raise ValueError("box discrepancy needs the root tile geometry")
    return "box_monte_carlo", box_discrepancy(pts, boxes, seed, region=proto.polygon)


# ---------------------------------------------------------------------------
# predictions
# ---------------------------------------------------------------------------

@dataclass
class FrequencyPrediction:
    labels: list[str]
    kind: str  # incommensurable | fixed-scale-primitive
    count_fraction: np.ndarray
    volume_fraction: np.ndarray
    edge_count_fraction: dict[int, float]
    edge_volume_fraction: dict[int, float]
    b: np.ndarray
    q: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "labels": self.labels,
            "count_fraction": self.count_fraction.tolist(),
            "volume_fraction": self.volume_fraction.tolist(),
            "edge_count_fraction": {str(k): v for k, v in self.edge_count_fraction.items()},
            "edge_volume_fraction": {str(k): v for k, v in self.edge_volume_fraction.items()},
            "b": self.b.tolist(),
            "q": None if self.q is None else self.q.tolist(),
        }


def _edge_table(scheme: Scheme):
    betas = compute_betas(scheme)
    d = scheme.dimension
    rows = []
    for eid, parent, child, _ in scheme.edges():
        b = betas[eid]
        rows.append((eid, parent, child, float(b) ** d, -b.log()))
    return rows


def _b_table(scheme: Scheme, rows) -> np.ndarray:
    n, d = scheme.n, scheme.dimension
    b = np.zeros((n, n))
    for _, h, j, share, _ in rows:
        b[h, j] += (1.0 - share) / d
    return b


def predicted_frequencies_incommensurable(scheme: Scheme) -> FrequencyPrediction:
    """Limits of type and last-edge frequencies along Kakutani sequences."""
    graph = build_graph(scheme)
    if not strongly_connected(graph):
        raise NotIrreducible("associated graph is not strongly connected")
    verdict = commensurability(graph)
    if verdict.commensurable:
        raise CommensurableScheme(f"scheme is commensurable ({verdict.kind}); Kakutani limits need not exist")
    q = q_matrix(graph).q
    rows = _edge_table(scheme)
    b = _b_table(scheme, rows)
    ec = {eid: q[h] * (1.0 - share) for eid, h, _, share, _ in rows}
    ev = {eid: q[h] * share * length for eid, h, _, share, length in rows}
    tot = sum(ec.values())
    ec = {k: v / tot for k, v in ec.items()}
    counts = np.zeros(scheme.n)
    vols = np.zeros(scheme.n)
    for eid, _, j, _, _ in rows:
        counts[j] += ec[eid]
        vols[j] += ev[eid]
    return FrequencyPrediction(scheme.labels, "incommensurable", counts, vols, ec, ev, b, q)


def predicted_frequencies_fixed_scale(scheme: Scheme) -> FrequencyPrediction:
    """Limits along generation sequences of a primitive fixed-scale scheme."""
    S = substitution_matrix(scheme)
    rep = primitivity(S)
    if not rep.primitive:
        raise NotPrimitive(f"substitution matrix has period {rep.period}; generation frequencies split into {rep.period} cyclic classes")
    W = weighted_substitution_matrix(scheme)
    ps = perron_eigen(S)
    u = ps.left / ps.left.sum()
    pw = perron_eigen(W)
    w = pw.left / pw.left.sum()
    rows = _edge_table(scheme)
    ec = {eid: u[h] / ps.mu for eid, h, _, _, _ in rows}
    ev = {eid: w[h] * share for eid, h, _, share, _ in rows}
    return FrequencyPrediction(scheme.labels, "fixed-scale-primitive", u, w, ec, ev, _b_table(scheme, rows))


def predicted_tile_counts(scheme: Scheme, length: float) -> np.ndarray:
    """Leading-order number of tiles of each type in the Kakutani partition at level ``length``.

    Independent of the root prototile.
    """
    pred = predicted_frequencies_incommensurable(scheme)
    return (pred.b.T @ pred.q) * math.exp(scheme.dimension * length)


def generation_counts(scheme: Scheme, root: int, k: int) -> list[int]:
    """Row ``root`` of the k-th power of the substitution matrix, in exact integers."""
    S = [[int(x) for x in row] for row in substitution_matrix(scheme)]
    row = [int(i == root) for i in range(len(S))]
    for _ in range(k):
        row = [sum(row[i] * S[i][j] for i in range(len(S))) for j in range(len(S))]
    return row


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

@dataclass
class OscillationVerdict:
    oscillating: bool
    odd_mean: float
    even_mean: float
    spread: float

    def to_json(self) -> dict:
        return {"oscillating": self.oscillating, "odd_mean": self.odd_mean,
                "even_mean": self.even_mean, "spread": self.spread}


def classify_oscillation(steps, values) -> OscillationVerdict:
    """Compare odd and even snapshots over the last quarter of a series.

    Flags oscillation when the parity means differ by more than five times
    the larger within-parity standard deviation.
    """
    steps = np.asarray(steps)
    values = np.asarray(values, dtype=float)
    tail = slice(len(values) - max(4, len(values) // 4), None)
    s, v = steps[tail], values[tail]
    odd, even = v[s % 2 == 1], v[s % 2 == 0]
    if len(odd) == 0 or len(even) == 0:
        return OscillationVerdict(False, math.nan, math.nan, 0.0)
    spread = float(max(odd.std(), even.std()))
    diff = abs(float(odd.mean() - even.mean()))
    osc = diff > OSCILLATION_FACTOR * spread and diff > 1e-12
    return OscillationVerdict(bool(osc), float(odd.mean()), float(even.mean()), spread)


@dataclass
class ComparisonReport:
    labels: list[str]
    steps: list[int]
    tiles: list[int]
    count_deviation: np.ndarray  # (snapshots, types), empirical minus predicted
    volume_deviation: np.ndarray
    predicted_count: np.ndarray
    predicted_volume: np.ndarray
    max_tail_deviation: float  # relative, last quarter, count fractions
    converged: bool
    oscillation: list[OscillationVerdict]

    def to_json(self) -> dict:
        return {
            "labels": self.labels,
            "predicted_count_fraction": self.predicted_count.tolist(),
            "predicted_volume_fraction": self.predicted_volume.tolist(),
            "max_tail_relative_deviation": self.max_tail_deviation,
            "converged": self.converged,
            "oscillation": [o.to_json() for o in self.oscillation],
            "snapshots": [
                {"step": s, "tiles": t, "count_deviation": c.tolist(), "volume_deviation": v.tolist()}
                for s, t, c, v in zip(self.steps, self.tiles, self.count_deviation, self.volume_deviation)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "tiles"] + [f"count_dev_{l}" for l in self.labels]
                   + [f"volume_dev_{l}" for l in self.labels])
        for s, t, c, v in zip(self.steps, self.tiles, self.count_deviation, self.volume_deviation):
            w.writerow([s, t] + [f"{x:.17g}" for x in c] + [f"{x:.17g}" for x in v])
        return buf.getvalue()


def compare(trace, prediction: FrequencyPrediction) -> ComparisonReport:
    snaps = trace.snapshots
    emp_c = np.array([s.count_fractions() for s in snaps])
    emp_v = np.array([s.volume_fractions() for s in snaps])
    dc = emp_c - prediction.count_fraction
    dv = emp_v - prediction.volume_fraction
    tail = slice(len(snaps) - max(1, len(snaps) // 4), None)
    rel = np.abs(dc[tail]) / np.where(prediction.count_fraction > 0, prediction.count_fraction, 1.0)
    worst = float(rel.max())
    steps = [s.step for s in snaps]
    osc = [classify_oscillation(steps, emp_c[:, j]) for j in range(emp_c.shape[1])]
    return ComparisonReport(list(prediction.labels), steps, [s.tiles for s in snaps], dc, dv,
                            prediction.count_fraction, prediction.volume_fraction, worst,
                            worst <= CONVERGENCE_BAND, osc)
