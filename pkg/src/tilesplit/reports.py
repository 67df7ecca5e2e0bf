"""CSV and JSON writers for traces, tile dumps and analysis reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json

import numpy as np

from .scheme import Scheme, scheme_to_dict

__all__ = ["config_hash", "trace_to_csv", "trace_to_json", "tiles_to_csv", "dumps"]


def config_hash(scheme: Scheme) -> str:
    """sha256 of the canonical JSON form of a scheme."""
    text = json.dumps(scheme_to_dict(scheme), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def trace_to_csv(trace) -> str:
    """One row per snapshot.  Wall-clock times are left out so files are reproducible."""
    labels = trace.labels
    edges = sorted({e for s in trace.snapshots for e in s.edge_counts})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "level", "tiles", "max_volume", "discrepancy"]
               + [f"count_{l}" for l in labels] + [f"volume_{l}" for l in labels]
               + [f"edge{e}_count" for e in edges] + [f"edge{e}_volume" for e in edges])
    for s in trace.snapshots:
        w.writerow([s.step, _num(s.level), s.tiles, _num(s.max_volume), _num(s.discrepancy)]
                   + [str(c) for c in s.type_counts] + [_num(v) for v in s.type_volumes]
                   + [str(s.edge_counts.get(e, 0)) for e in edges]
                   + [_num(s.edge_volumes.get(e, 0.0)) for e in edges])
    return buf.getvalue()


def trace_to_json(trace, **meta) -> dict:
    return {
        **meta,
        "mode": trace.mode,
        "root": trace.root,
        "seed": trace.seed,
        "truncated": trace.truncated,
        "labels": list(trace.labels),
        "snapshots": [
            {
                "step": s.step,
                "level": s.level,
                "tiles": s.tiles,
                "max_volume": s.max_volume,
                "type_counts": s.type_counts,
                "type_volumes": s.type_volumes,
                "edge_counts": {str(e): n for e, n in s.edge_counts.items()},
                "edge_volumes": {str(e): v for e, v in s.edge_volumes.items()},
                "discrepancy": s.discrepancy,
            }
            for s in trace.snapshots
        ],
    }


def tiles_to_csv(records, labels) -> str:
    """Tile dump: type, depth, volume, row-major linear part, shift, last edge."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "depth", "volume", "linear", "shift", "last_edge"])
    for r in records:
        w.writerow([labels[r["type"]], r["depth"], _num(r["volume"]),
                    " ".join(_num(x) for x in np.ravel(r["linear"])),
                    " ".join(_num(x) for x in r["shift"]), r["last_edge"]])
    return buf.getvalue()


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, default=_default) + "\n"
