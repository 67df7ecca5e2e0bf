"""SVG output of partitions: polygons in the plane, bars on the line."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .engine import PartitionState, tile_records

__all__ = ["RenderSpec", "PALETTE", "render_svg", "render_bars"]

PALETTE = ["#d62728", "#222222", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
ROOT_COLOR = "#bbbbbb"


@dataclass
class RenderSpec:
    color_by: str = "type"  # type | last_edge | custom
    custom: dict[int, str] = field(default_factory=dict)  # used with color_by="custom", keyed by type
    stroke_width: float = 0.5
    size: int = 800
    max_tiles: int = 10**6

    def __post_init__(self):
        if self.max_tiles < 1:
            raise ValueError("max_tiles must be >= 1")
        if self.color_by not in ("type", "last_edge", "edge", "custom"):
            raise ValueError(f"unknown color_by {self.color_by!r}")

    def color(self, tile: dict) -> str:
        if self.color_by == "custom":
            return self.custom.get(tile["type"], ROOT_COLOR)
        if self.color_by in ("last_edge", "edge"):
            e = tile["last_edge"]
            return ROOT_COLOR if e < 0 else PALETTE[e % len(PALETTE)]
        return PALETTE[tile["type"] % len(PALETTE)]


def _records(state: PartitionState, spec: RenderSpec) -> list[dict]:
    scheme = state.scheme
    if scheme.dimension > 2:
        raise ValueError("rendering supports dimension 1 and 2 only")
    if any(p.polygon is None for p in scheme.prototiles):
        raise ValueError("scheme has no geometry to render")
    if state.tile_count > spec.max_tiles:
        raise ValueError(f"{state.tile_count} tiles exceed the render cap {spec.max_tiles}")
    return tile_records(state)


def render_bars(states: list[PartitionState], spec: RenderSpec | None = None) -> str:
    """1-D partitions as horizontal bars, one row per state, top to bottom."""
    spec = spec or RenderSpec()
    rows = [_records(s, spec) for s in states]
    root = np.asarray(states[0].scheme.prototiles[states[0].root].polygon, float).ravel()
    lo, hi = root.min(), root.max()
    W = spec.size
    bar, gap = 24, 10
    H = len(rows) * (bar + gap) + gap
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    labels = states[0].scheme.labels
    for r, recs in enumerate(rows):
        y = gap + r * (bar + gap)
        out.append(f'<g class="partition" data-step="{states[r].step}">')
        for t in recs:
            ends = np.asarray(states[r].scheme.prototiles[t["type"]].polygon, float).ravel()
            a = t["linear"][0, 0] * ends + t["shift"][0]
            x0, x1 = (min(a) - lo) / (hi - lo) * W, (max(a) - lo) / (hi - lo) * W
            out.append(f'<rect x="{x0:.6f}" y="{y}" width="{x1 - x0:.6f}" height="{bar}" '
                       f'fill="{spec.color(t)}" stroke="white" stroke-width="{spec.stroke_width}">'
                       f'<title>{escape(labels[t["type"]])}</title></rect>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(state: PartitionState, spec: RenderSpec | None = None) -> str:
    """One polygon per tile (2-D) or one bar segment per tile (1-D)."""
    spec = spec or RenderSpec()
    if state.scheme.dimension == 1:
        return render_bars([state], spec)
    recs = _records(state, spec)
    scheme = state.scheme
    root = np.asarray(scheme.prototiles[state.root].polygon, float)
    lo, hi = root.min(axis=0), root.max(axis=0)
    ext = float((hi - lo).max())
    W = spec.size
    H = int(round(W * (hi[1] - lo[1]) / ext)) if ext > 0 else W
    k = W / ext
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    for t in recs:
        poly = np.asarray(scheme.prototiles[t["type"]].polygon, float)
        pts = poly @ t["linear"].T + t["shift"]
        xy = " ".join(f"{(x - lo[0]) * k:.4f},{(hi[1] - y) * k:.4f}" for x, y in pts)
        out.append(f'<polygon points="{xy}" fill="{spec.color(t)}" stroke="white" '
                   f'stroke-width="{spec.stroke_width}"><title>{escape(scheme.labels[t["type"]])}</title></polygon>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
