"""Property tests over randomly generated 1-D schemes."""

import json
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import brute_commensurable, naive_kakutani, volume_multiset
from tilesplit.engine import init, kakutani_step, run
from tilesplit.graph import build_graph, commensurability
from tilesplit.rationalize import rationalize, verify_subsequence
from tilesplit.scheme import compute_betas, dump_scheme, load_scheme, normalize_scheme, validate_scheme
from tilesplit.spectral import perron_eigen, q_matrix, solve_lambda
from tilesplit.stats import predicted_frequencies_incommensurable, star_discrepancy_1d


def _interval_scheme(vols, rules):
    """1-D scheme from prototile lengths and rules [(parent, [(child, piece length)])]."""
    labels = [chr(65 + k) for k in range(len(vols))]
    protos = [{"label": l, "volume": str(v), "polygon": [[0.0], [float(v)]]} for l, v in zip(labels, vols)]
    out = []
    for parent, pieces in rules:
        x = Fraction(0)
        kids = []
        for child, length in pieces:
            kids.append({"type": labels[child], "alpha": str(length / vols[child]), "translation": [float(x)]})
            x += length
        out.append({"parent": labels[parent], "children": kids})
    return load_scheme(json.dumps({"dimension": 1, "prototiles": protos, "rules": out}))


@st.composite
def two_type_schemes(draw):
    vols = [Fraction(1), draw(st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=6))]
    rules = []
    for parent in (0, 1):
        k = draw(st.integers(2, 4))
        types = draw(st.lists(st.integers(0, 1), min_size=k, max_size=k))
        types[0] = 1 - parent  # keep the graph strongly connected
        weights = draw(st.lists(st.integers(1, 6), min_size=k, max_size=k))
        total = sum(weights)
        rules.append((parent, [(t, vols[parent] * Fraction(w, total)) for t, w in zip(types, weights)]))
    return _interval_scheme(vols, rules)


@st.composite
def dyadic_schemes(draw):
    pieces = [Fraction(1)]
    for _ in range(draw(st.integers(1, 4))):
        i = draw(st.integers(0, len(pieces) - 1))
        half = pieces.pop(i) / 2
        pieces[i:i] = [half, half]
    return _interval_scheme([Fraction(1)], [(0, [(0, p) for p in pieces])])


@given(two_type_schemes())
def test_shares_sum_exactly(s):
    rep = validate_scheme(s)
    assert rep.ok and rep.exact


@given(two_type_schemes())
def test_lambda_is_dimension(s):
    assert abs(solve_lambda(build_graph(s)) - 1.0) < 1e-10


@given(two_type_schemes())
def test_normalization_preserves_betas(s):
    n = normalize_scheme(s)
    assert all(p.volume.is_one() for p in n.prototiles)
    b0, b1 = compute_betas(s), compute_betas(n)
    assert all(b0[e] == b1[e] for e in b0)


@given(two_type_schemes())
def test_roundtrip(s):
    again = load_scheme(dump_scheme(s))
    assert compute_betas(again) == compute_betas(s)


@settings(max_examples=25)
@given(two_type_schemes(), st.integers(0, 1))
def test_engine_matches_naive(s, root):
    ref = naive_kakutani(s, root, 12)
    state = init(s, root)
    for m in range(13):
        got = Counter()
        for t, v, c in state.multiset(exact=True):
            got[(t, v)] += c
        assert got == volume_multiset(ref[m])
        kakutani_step(state)


@given(two_type_schemes())
def test_volume_and_monotonicity(s):
    tr, st_ = run(s, max_steps=60)
    assert sum(st_.type_volumes) == st_.keys.root_volume[0]
    v = [x.max_volume for x in tr.snapshots]
    assert all(b < a for a, b in zip(v, v[1:]))


@settings(max_examples=25)
@given(two_type_schemes())
def test_verdict_matches_closed_walks(s):
    g = build_graph(s)
    assert commensurability(g).commensurable == brute_commensurable(g, max_edges=6)


@given(two_type_schemes())
def test_incommensurable_predictions_normalized(s):
    g = build_graph(s)
    assume(not commensurability(g).commensurable)
    p = predicted_frequencies_incommensurable(s)
    assert p.count_fraction.sum() == pytest.approx(1, abs=1e-10)
    assert p.volume_fraction.sum() == pytest.approx(1, abs=1e-10)
    Q = q_matrix(g)
    assert Q.spread < 1e-8
    betas = compute_betas(s)
    ident = sum(p.q[i] * float(betas[e]) * -betas[e].log() for e, i, _, _ in s.edges())
    assert ident == pytest.approx(1, abs=1e-10)


@settings(max_examples=25)
@given(dyadic_schemes())
def test_dyadic_rationalizes(s):
    res = rationalize(s)
    assert not res.heuristic
    assert verify_subsequence(s, res, 8)


@settings(max_examples=25)
@given(dyadic_schemes())
def test_markings_within_bounds(s):
    _, state = run(s, max_tiles=200, track_geometry=True)
    from tilesplit.engine import marking_points
    pts = marking_points(state).ravel()
    assert len(pts) == state.tile_count
    d = star_discrepancy_1d(pts)
    assert 1 / (2 * len(pts)) - 1e-12 <= d <= 1


@given(st.integers(2, 5).flatmap(lambda n: st.lists(st.integers(1, 9), min_size=n * n, max_size=n * n)))
def test_perron_against_numpy(entries):
    n = math.isqrt(len(entries))
    A = np.array(entries, float).reshape(n, n)
    pp = perron_eigen(A)
    assert pp.mu == pytest.approx(max(abs(np.linalg.eigvals(A))), rel=1e-9)
    assert np.all(pp.right > 0) and np.all(pp.left > 0)
