import json
import math

import pytest

from oracles import PHI
from tilesplit import configs
from tilesplit.errors import InvalidScheme, SchemeParseError
from tilesplit.scheme import (
    PathKeys,
    apply_rule,
    compute_betas,
    dump_scheme,
    load_scheme,
    normalize_scheme,
    root_tile,
    validate_scheme,
)


def _doc(**over):
    doc = json.loads(configs.text("kakutani_third"))
    doc.update(over)
    return doc


def test_rect_square_shape():
    s = configs.load("rect_square")
    assert s.labels == ["R", "S"]
    assert s.edge_count == 8
    assert [len(r[0].children) for r in s.rules] == [4, 4]


def test_kakutani_shape():
    s = configs.load("kakutani_third")
    assert s.n == 1 and s.edge_count == 2


def test_unknown_label_rejected():
    doc = _doc()
    doc["rules"][0]["children"][0]["type"] = "X"
    with pytest.raises(SchemeParseError, match="X"):
        load_scheme(json.dumps(doc))


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d.update(extra=1), "unknown field"),
    (lambda d: d.update(dimension=0), "dimension"),
    (lambda d: d["prototiles"].append(dict(d["prototiles"][0])), "duplicate"),
    (lambda d: d["rules"][0]["children"][0].update(rotation=[1, 0, 0, 1]), "rotation"),
    (lambda d: d["rules"][0]["children"][0].update(alpha="-1"), "alpha"),
    (lambda d: d.update(rule_policy={"kind": "fixed", "index": 3}), "index"),
    (lambda d: d.update(rule_policy={"kind": "sometimes"}), "kind"),
    (lambda d: d.update(rules=[]), "no substitution rule"),
])
def test_parse_errors(mutate, msg):
    doc = _doc()
    mutate(doc)
    with pytest.raises(SchemeParseError, match=msg):
        load_scheme(json.dumps(doc))


def test_bad_json_reports_position():
    with pytest.raises(SchemeParseError, match="line 1"):
        load_scheme("{")


def test_dump_roundtrip():
    for name in configs.names():
        s = configs.load(name)
        again = load_scheme(dump_scheme(s))
        assert again.labels == s.labels
        assert [e[:3] for e in again.edges()] == [e[:3] for e in s.edges()]


def test_rect_square_betas():
    s = configs.load("rect_square")
    got = sorted(float(b) for b in compute_betas(s).values())
    r2 = math.sqrt(2)
    want = sorted([1 / 2, 1 / r2, 1 / (2 * r2), 1 / (2 * r2), r2 / 3, r2 / 3, 1 / 3, 2 / 3])
    assert got == pytest.approx(want, abs=1e-14)


def test_kakutani_betas_are_alpha():
    s = configs.load("kakutani_third")
    assert sorted(b.as_fraction() for b in compute_betas(s).values()) == [pytest.approx(1 / 3), pytest.approx(2 / 3)]


def test_penrose_short_in_tall_beta():
    s = configs.load("penrose_robinson")
    t, sh = s.index_of("T"), s.index_of("S")
    betas = compute_betas(s)
    got = [float(betas[e]) for e, i, j, _ in s.edges() if i == t and j == sh]
    assert got == [pytest.approx(PHI ** -1.5, rel=1e-12)]


def test_beta_one_rejected():
    doc = _doc()
    doc["rules"][0]["children"][1]["alpha"] = "1"
    s = load_scheme(json.dumps(doc))
    with pytest.raises(InvalidScheme, match="edge 1"):
        compute_betas(s)
    rep = validate_scheme(s)
    assert not rep.ok
    assert any("edge 1" in c.name for c in rep.failures())


def test_shares_sum_to_one_every_config():
    for name in configs.names():
        rep = validate_scheme(configs.load(name))
        assert rep.ok, (name, rep.failures())


def test_normalize_rect_square():
    s = configs.load("rect_square")
    n = normalize_scheme(s)
    assert all(p.volume.is_one() for p in n.prototiles)
    betas = compute_betas(s)
    for eid, _, _, alpha in n.edges():
        assert alpha.close(betas[eid], 1e-12)


def test_normalize_idempotent():
    s = configs.load("kakutani_third")
    assert normalize_scheme(s) is s
    n = normalize_scheme(configs.load("penrose_robinson"))
    assert normalize_scheme(n) is n


def test_normalize_penrose_keeps_betas():
    s = configs.load("penrose_robinson")
    before = compute_betas(s)
    after = compute_betas(normalize_scheme(s))
    assert all(before[e].close(after[e], 1e-12) for e in before)


def test_apply_rule_third():
    s = configs.load("kakutani_third")
    keys = PathKeys(s)
    kids = apply_rule(root_tile(s, 0, keys), s.rules[0][0], keys)
    spans = [(float(k.shift[0]), float(k.shift[0] + k.linear[0, 0])) for k in kids]
    assert spans == [pytest.approx((0, 1 / 3)), pytest.approx((1 / 3, 1))]
    assert [k.volume for k in kids] == [pytest.approx(1 / 3), pytest.approx(2 / 3)]


def test_apply_rule_type_mismatch():
    s = configs.load("rect_square")
    keys = PathKeys(s)
    with pytest.raises(RuntimeError):
        apply_rule(root_tile(s, 0, keys), s.rules[1][0], keys)


def test_alternative_rules_share_edge_ids():
    s = configs.load("rect_square")
    ids = [sorted(c.edge_id for c in r.children) for r in s.rules[0]]
    assert all(i == ids[0] for i in ids)


@pytest.mark.parametrize("name", ["kakutani_third", "rect_square", "penrose_robinson", "pinwheel"])
def test_overlap_check_passes(name):
    rep = validate_scheme(configs.load(name), overlap_samples=20_000, seed=1)
    assert rep.ok, rep.failures()
    assert any(c.name.startswith("overlap") for c in rep.checks)
