import dataclasses
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from oracles import int_matrix_power_row, naive_generations, naive_kakutani, volume_multiset
from tilesplit import configs
from tilesplit.engine import SplitMix64, generation_step, init, kakutani_step, marking_points, run, tile_records
from tilesplit.errors import InvalidScheme
from tilesplit.rationalize import rationalize
from tilesplit.scheme import RulePolicy
from tilesplit.spectral import substitution_matrix


def _engine_multiset(state):
    out = Counter()
    for t, v, n in state.multiset(exact=True):
        out[(t, v if isinstance(v, Fraction) else round(float(v), 12))] += n
    return out


def test_init_trivial_partition():
    s = configs.load("rect_square")
    st = init(s, "S")
    assert st.tile_count == 1 and st.type_counts == [0, 1]
    assert float(st.max_volume()) == 1.0


def test_third_multisets():
    s = configs.load("kakutani_third")
    st = init(s)
    F = Fraction
    want = [[F(1)], [F(1, 3), F(2, 3)], [F(1, 3), F(2, 9), F(4, 9)],
            [F(1, 3), F(2, 9), F(4, 27), F(8, 27)], [F(1, 9), F(2, 9), F(2, 9), F(4, 27), F(8, 27)]]
    for m, w in enumerate(want):
        got = sorted(v for _, v, n in st.multiset(exact=True) for _ in range(n))
        assert got == sorted(w), m
        kakutani_step(st)


@pytest.mark.parametrize("name, steps", [("rect_square", 60), ("kakutani_third", 80), ("penrose_robinson", 20),
                                         ("pinwheel", 6), ("tr_triangle_rhombus", 12), ("rauzy", 12)])
def test_kakutani_matches_naive(name, steps):
    s = configs.load(name)
    ref = naive_kakutani(s, 0, steps)
    st = init(s)
    for m in range(steps + 1):
        assert _engine_multiset(st) == volume_multiset(ref[m]), m
        kakutani_step(st)


@pytest.mark.parametrize("name", ["rect_square", "penrose_robinson", "kakutani_third"])
def test_geometry_matches_naive(name):
    # the naive reference always applies the first rule
    s = dataclasses.replace(configs.load(name), rule_policy=RulePolicy("fixed", 0))
    ref = naive_kakutani(s, 0, 18)[-1]
    _, st = run(s, max_steps=18, track_geometry=True)
    got = sorted((r["type"], round(float(r["shift"][0]), 9), round(float(r["shift"][-1]), 9)) for r in tile_records(st))
    want = sorted((t.type, round(float(t.shift[0]), 9), round(float(t.shift[-1]), 9)) for t in ref)
    assert got == want


def test_census_matches_geometry():
    _, st = run(configs.load("rect_square"), max_steps=80, track_geometry=True, seed=4)
    recs = tile_records(st)
    assert len(recs) == st.tile_count
    assert Counter(r["type"] for r in recs) == Counter({t: n for t, n in enumerate(st.type_counts) if n})


@pytest.mark.parametrize("name", ["penrose_robinson", "tr_triangle_rhombus", "kakutani_half", "pinwheel",
                                  "nonprimitive_square_rects"])
def test_generation_counts_equal_matrix_power(name):
    s = configs.load(name)
    S = substitution_matrix(s)
    for root in range(s.n):
        st = init(s, root)
        for k in range(1, 13):
            generation_step(st)
            assert st.type_counts == int_matrix_power_row(S, root, k), (root, k)


def test_penrose_first_generations():
    s = configs.load("penrose_robinson")
    st = init(s, "T")
    generation_step(st)
    assert st.type_counts == [2, 1]
    generation_step(st)
    assert st.type_counts == [5, 3]


def test_generation_geometry_matches_naive():
    s = configs.load("penrose_robinson")
    _, st = run(s, mode="generation", max_steps=5, track_geometry=True)
    assert len(tile_records(st)) == len(naive_generations(s, 0, 5))


def test_penrose_generation_is_odd_kakutani():
    s = configs.load("penrose_robinson")
    kak = init(s)
    gen = init(s)
    kakutani_step(kak)
    for k in range(1, 8):
        generation_step(gen)
        assert _engine_multiset(gen) == _engine_multiset(kak), k
        kakutani_step(kak)
        kakutani_step(kak)


def test_marking_points_third():
    _, st = run(configs.load("kakutani_third"), max_steps=1, track_geometry=True)
    assert sorted(marking_points(st).ravel()) == pytest.approx([1 / 6, 2 / 3])
    _, st0 = run(configs.load("kakutani_third"), max_steps=0, track_geometry=True)
    assert marking_points(st0).ravel() == pytest.approx([0.5])


def test_marking_points_need_geometry():
    st = init(configs.load("kakutani_third"))
    with pytest.raises(ValueError):
        marking_points(st)


def test_max_volume_strictly_decreases():
    for name in ("rect_square", "penrose_robinson", "rauzy"):
        tr, _ = run(configs.load(name), max_steps=200)
        v = [s.max_volume for s in tr.snapshots]
        assert all(b < a for a, b in zip(v, v[1:])), name


def test_fixed_scale_max_volume_geometric():
    tr, _ = run(configs.load("penrose_robinson"), max_steps=60)
    v = np.array([s.max_volume for s in tr.snapshots])
    m = np.arange(len(v))
    phi = (1 + 5 ** 0.5) / 2
    assert np.all(v <= 2 * phi * phi ** (-m))


def test_volume_conserved():
    for name in ("rect_square", "tr_triangle_rhombus"):
        tr, st = run(configs.load(name), max_steps=150)
        for s in tr.snapshots:
            assert sum(s.type_volumes) == pytest.approx(float(st.keys.root_volume[0]), rel=1e-12)


def test_exact_volume_census_is_exact():
    _, st = run(configs.load("kakutani_third"), max_steps=50)
    assert sum(st.type_volumes) == 1
    assert isinstance(st.type_volumes[0], Fraction)


def test_run_needs_stop_condition():
    with pytest.raises(ValueError):
        run(configs.load("kakutani_third"))
    with pytest.raises(ValueError):
        run(configs.load("kakutani_third"), mode="sideways", max_steps=1)


def test_stop_conditions():
    s = configs.load("rect_square")
    tr, st = run(s, max_tiles=1000)
    assert st.tile_count >= 1000 and tr.snapshots[-2].tiles < 1000
    tr, st = run(s, min_tile_volume=1e-3)
    assert st.max_volume() < 1e-3


def test_snapshot_every_keeps_final():
    tr, _ = run(configs.load("rect_square"), max_steps=25, snapshot_every=10)
    assert [s.step for s in tr.snapshots] == [0, 10, 20, 25]


def test_tile_cap_truncates():
    tr, st = run(configs.load("rect_square"), max_steps=10**6, track_geometry=True, tile_cap=500)
    assert tr.truncated and st.tile_count > 500


def test_random_policy_deterministic():
    s = configs.load("rect_square")
    a = tile_records(run(s, max_steps=40, track_geometry=True, seed=9)[1])
    b = tile_records(run(s, max_steps=40, track_geometry=True, seed=9)[1])
    c = tile_records(run(s, max_steps=40, track_geometry=True, seed=10)[1])
    key = lambda recs: [tuple(np.round(r["shift"], 12)) for r in recs]
    assert key(a) == key(b)
    assert key(a) != key(c)


def test_round_robin_alternates():
    s = configs.load("kakutani_third_two_rules")
    _, st = run(s, max_steps=1, track_geometry=True)
    first = sorted(round(float(r["shift"][0]), 12) for r in tile_records(st))
    _, st = run(s, max_steps=2, track_geometry=True)
    spans = sorted((round(float(r["shift"][0]), 9), round(float(r["linear"][0, 0]), 9)) for r in tile_records(st))
    assert first == [0.0, pytest.approx(1 / 3)]
    assert len(spans) == 3


def test_splitmix_reference_values():
    g = SplitMix64(0)
    assert [g.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_kakutani_refuses_one_child_rules():
    res = rationalize(configs.load("tr_triangle_rhombus"), allow_numeric=True)
    st = init(res.fixed_scheme)
    with pytest.raises(InvalidScheme):
        kakutani_step(st)
    generation_step(st)
    assert st.tile_count > 1
