"""Command-line entry point: ``tilesplit <command> --scheme PATH ...``.

Exit codes: 0 ok, 1 domain error, 2 usage or parse error.  ``--scheme``
takes a file path or ``bundled:<name>``.  The log level comes from the
TILESPLIT_LOG environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import configs
from .engine import run
from .errors import SchemeParseError, TilesplitError
from .graph import build_graph, commensurability, graph_matrix, graph_matrix_derivative, strongly_connected
from .rationalize import rationalize
from .render import RenderSpec, render_svg
from .reports import config_hash, dumps, tiles_to_csv, trace_to_csv, trace_to_json
from .scheme import dump_scheme, load_scheme, load_scheme_file, validate_scheme
from .spectral import (
    is_fixed_scale,
    perron_eigen,
    primitivity,
    q_matrix,
    solve_lambda,
    substitution_matrix,
    weighted_substitution_matrix,
)
from .stats import (
    DiscrepancyCurve,
    classify_oscillation,
    compare,
    predicted_frequencies_fixed_scale,
    predicted_frequencies_incommensurable,
    state_discrepancy,
)

log = logging.getLogger("tilesplit")


def _load(spec: str):
    if spec.startswith("bundled:"):
        return load_scheme(configs.text(spec[len("bundled:"):]))
    return load_scheme_file(spec)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    scheme = _load(args.scheme)
    rep = validate_scheme(scheme, overlap_samples=args.overlap_samples, seed=args.seed)
    _emit(dumps({"config_hash": config_hash(scheme), "seed": args.seed, **rep.to_json()}), args.out)
    return 0 if rep.ok else 1


def analyze(scheme) -> dict:
    """The analysis report as a dict (also used by the tests)."""
    graph = build_graph(scheme)
    d = scheme.dimension
    doc: dict = {
        "config_hash": config_hash(scheme),
        "dimension": d,
        "labels": list(scheme.labels),
        "graph": [{"edge": e.edge_id, "source": scheme.labels[e.source], "target": scheme.labels[e.target],
                   "length": e.length, "beta_d": e.beta_d} for e in graph.edges],
    }
    if not strongly_connected(graph):
        raise TilesplitError("associated graph is not strongly connected: the scheme is reducible, and "
                             "partition sequences of reducible schemes need not be uniformly distributed")
    verdict = commensurability(graph)
    doc["verdict"] = verdict.to_json()
    doc["M_d"] = graph_matrix(graph, d)
    doc["M_d_derivative"] = graph_matrix_derivative(graph, d)
    doc["lambda"] = solve_lambda(graph)
    if not verdict.commensurable:
        Q = q_matrix(graph)
        doc["Q"] = Q.entries
        doc["q"] = Q.q
        doc["prediction"] = predicted_frequencies_incommensurable(scheme).to_json()
    elif is_fixed_scale(scheme):
        S = substitution_matrix(scheme)
        rep = primitivity(S)
        doc["S"] = S
        doc["W"] = weighted_substitution_matrix(scheme)
        pp = perron_eigen(S)
        doc["mu"] = pp.mu
        doc["u"] = pp.left / pp.left.sum()
        pw = perron_eigen(doc["W"])
        doc["w"] = pw.left / pw.left.sum()
        doc["period"] = rep.period
        doc["cyclic_classes"] = [[scheme.labels[i] for i in c] for c in rep.classes]
        doc["blocks"] = list(rep.blocks)
        if rep.primitive:
            doc["prediction"] = predicted_frequencies_fixed_scale(scheme).to_json()
    else:
        doc["hint"] = ("commensurable but not fixed scale: Kakutani frequencies need not converge; "
                       "`tilesplit rationalize` gives an equivalent fixed-scale scheme")
    return doc


def cmd_analyze(args) -> int:
    _emit(dumps({"seed": args.seed, **analyze(_load(args.scheme))}), args.out)
    return 0


def _stop(args) -> dict:
    stop = {"max_steps": args.steps, "max_tiles": args.max_tiles, "min_tile_volume": args.min_volume}
    if all(v is None for v in stop.values()):
        stop["max_steps"] = 10
    return stop


def _simulate_one(scheme_arg: str, args, seed: int):
    scheme = _load(scheme_arg)
    disc = None
    curve = None
    if args.discrepancy:
        curve = DiscrepancyCurve("star_1d_exact" if scheme.dimension == 1 else "box_monte_carlo")

        def disc(state):
            kind, v = state_discrepancy(state, boxes=args.boxes, seed=seed)
            curve.add(state.tile_count, v)
            return v
    trace, state = run(scheme, root=args.root, mode=args.mode, snapshot_every=args.snapshot_every,
                       track_geometry=bool(args.discrepancy or args.tiles), discrepancy=disc, seed=seed,
                       **_stop(args))
    return scheme, trace, state, curve


def _write_outputs(prefix: str, scheme, trace, state, curve, args, extra: dict | None = None):
    meta = {"config_hash": config_hash(scheme), "seed": trace.seed}
    Path(f"{prefix}.csv").write_text(trace_to_csv(trace), encoding="utf-8")
    Path(f"{prefix}.json").write_text(dumps({**meta, **trace_to_json(trace), **(extra or {})}), encoding="utf-8")
    if curve is not None:
        Path(f"{prefix}.discrepancy.csv").write_text(curve.to_csv(), encoding="utf-8")
    if args.tiles:
        from .engine import tile_records
        Path(f"{prefix}.tiles.csv").write_text(tiles_to_csv(tile_records(state), scheme.labels), encoding="utf-8")


def _replicate(job):
    scheme_arg, args, seed, prefix = job
    scheme, trace, state, curve = _simulate_one(scheme_arg, args, seed)
    _write_outputs(prefix, scheme, trace, state, curve, args)
    return prefix


def cmd_simulate(args) -> int:
    prefix = args.out or "trace"
    if args.replicates > 1:
        jobs = [(args.scheme, args, args.seed + r, f"{prefix}.seed{args.seed + r}") for r in range(args.replicates)]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                done = list(ex.map(_replicate, jobs))
        else:
            done = [_replicate(j) for j in jobs]
        log.info("wrote %s", ", ".join(done))
        return 0
    scheme, trace, state, curve = _simulate_one(args.scheme, args, args.seed)
    _write_outputs(prefix, scheme, trace, state, curve, args)
    f = trace.final
    print(f"{trace.mode}: {f.step} steps, {f.tiles} tiles" + (" (truncated)" if trace.truncated else ""))
    return 0


def cmd_stats(args) -> int:
    scheme, trace, state, curve = _simulate_one(args.scheme, args, args.seed)
    graph = build_graph(scheme)
    verdict = commensurability(graph)
    extra: dict = {"verdict": verdict.to_json()}
    pred = None
    if not verdict.commensurable and args.mode == "kakutani":
        pred = predicted_frequencies_incommensurable(scheme)
    elif is_fixed_scale(scheme) and args.mode == "generation" and primitivity(substitution_matrix(scheme)).primitive:
        pred = predicted_frequencies_fixed_scale(scheme)
    if pred is not None:
        rep = compare(trace, pred)
        extra["comparison"] = rep.to_json()
        Path(f"{args.out or 'stats'}.comparison.csv").write_text(rep.to_csv(), encoding="utf-8")
        summary = f"max tail deviation {rep.max_tail_deviation:.4g} ({'converged' if rep.converged else 'not converged'})"
    else:
        steps = [s.step for s in trace.snapshots]
        osc = [classify_oscillation(steps, [s.count_fractions()[j] for s in trace.snapshots]).to_json()
               for j in range(scheme.n)]
        extra["oscillation"] = osc
        summary = "no closed-form prediction; oscillation " + str([o["oscillating"] for o in osc])
    _write_outputs(args.out or "stats", scheme, trace, state, curve, args, extra)
    print(summary)
    return 0


def cmd_render(args) -> int:
    scheme = _load(args.scheme)
    spec = RenderSpec(color_by=args.color_by, stroke_width=args.stroke, size=args.size, max_tiles=args.max_render)
    _, state = run(scheme, root=args.root, mode=args.mode, track_geometry=True, seed=args.seed,
                   tile_cap=args.max_render, **_stop(args))
    _emit(render_svg(state, spec), args.out or "partition.svg")
    return 0


def cmd_rationalize(args) -> int:
    scheme = _load(args.scheme)
    res = rationalize(scheme, root=args.root, allow_numeric=args.allow_numeric)
    prefix = args.out or "rationalized"
    Path(f"{prefix}.json").write_text(dump_scheme(res.fixed_scheme) + "\n", encoding="utf-8")
    Path(f"{prefix}.index.json").write_text(dumps({"config_hash": config_hash(scheme), **res.to_json()}),
                                            encoding="utf-8")
    print(f"{len(res.fixed_scheme.prototiles)} prototiles, a={res.a}, contraction {float(res.contraction):.12g}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tilesplit", description="Multiscale substitution schemes and their partitions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim=False):
        sp.add_argument("--scheme", required=True, help="config path or bundled:<name>")
        sp.add_argument("--out", help="output file or prefix")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--root", type=int, default=0, help="index of the root prototile")
        if sim:
            sp.add_argument("--mode", choices=["kakutani", "generation"], default="kakutani")
            sp.add_argument("--steps", type=int)
            sp.add_argument("--max-tiles", type=int)
            sp.add_argument("--min-volume", type=float)
            sp.add_argument("--snapshot-every", type=int, default=1)

    sp = sub.add_parser("validate", help="check a scheme config")
    common(sp)
    sp.add_argument("--overlap-samples", type=int, default=0)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("analyze", help="graph, spectral and frequency report")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    for name, func, hlp in (("simulate", cmd_simulate, "run a partition sequence"),
                            ("stats", cmd_stats, "run and compare with predicted frequencies")):
        sp = sub.add_parser(name, help=hlp)
        common(sp, sim=True)
        sp.add_argument("--discrepancy", action="store_true", help="track marking points and their discrepancy")
        sp.add_argument("--boxes", type=int, default=200)
        sp.add_argument("--tiles", action="store_true", help="also write the final tile dump")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--replicates", type=int, default=1)
        sp.set_defaults(func=func)

    sp = sub.add_parser("render", help="SVG of a partition")
    common(sp, sim=True)
    sp.add_argument("--color-by", choices=["type", "edge", "last_edge"], default="type")
    sp.add_argument("--size", type=int, default=800)
    sp.add_argument("--stroke", type=float, default=0.5)
    sp.add_argument("--max-render", type=int, default=10**6)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("rationalize", help="equivalent fixed-scale scheme of a commensurable scheme")
    common(sp)
    sp.add_argument("--allow-numeric", action="store_true",
                    help="accept a numeric (heuristic) commensurability verdict")
    sp.set_defaults(func=cmd_rationalize)
    return p


def main(argv=None) -> int:
    level = os.environ.get("TILESPLIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except SchemeParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except (KeyError, OSError) as e:
        print(f"error: {e.args[0] if isinstance(e, KeyError) and e.args else e}", file=sys.stderr)
        return 2
    except (TilesplitError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
