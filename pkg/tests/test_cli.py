import json
import time

import pytest

from tilesplit import configs
from tilesplit.cli import analyze, main

PHI = (1 + 5 ** 0.5) / 2


@pytest.fixture
def beta_one(tmp_path):
    doc = json.loads(configs.text("kakutani_third"))
    doc["rules"][0]["children"][1]["alpha"] = "1"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_validate_exit_codes(tmp_path, beta_one, capsys):
    assert main(["validate", "--scheme", "bundled:rect_square"]) == 0
    assert main(["validate", "--scheme", beta_one]) == 1
    assert "edge 1" in capsys.readouterr().out
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["validate", "--scheme", str(bad)]) == 2
    assert main(["validate", "--scheme", "bundled:nope"]) == 2
    assert main(["validate", "--scheme", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_analyze_rect_square():
    doc = analyze(configs.load("rect_square"))
    assert doc["lambda"] == pytest.approx(2, abs=1e-10)
    assert doc["verdict"]["kind"] == "Incommensurable"
    assert doc["prediction"]["count_fraction"][1] == pytest.approx(25 / 43, abs=1e-12)


def test_analyze_penrose():
    doc = analyze(configs.load("penrose_robinson"))
    assert doc["mu"] == pytest.approx(PHI ** 2)
    assert doc["u"].tolist() == pytest.approx([PHI / (PHI + 1), 1 / (PHI + 1)])
    assert doc["w"].tolist() == pytest.approx([(PHI + 1) / (PHI + 2), 1 / (PHI + 2)])


def test_analyze_non_primitive():
    doc = analyze(configs.load("nonprimitive_square_rects"))
    assert doc["period"] == 2 and "prediction" not in doc


def test_analyze_rauzy_hint():
    assert "rationalize" in analyze(configs.load("rauzy"))["hint"]


@pytest.mark.parametrize("name", configs.names())
def test_analyze_fast(name, tmp_path):
    t = time.perf_counter()
    assert main(["analyze", "--scheme", f"bundled:{name}", "--out", str(tmp_path / "a.json")]) == 0
    assert time.perf_counter() - t < 1.0
    doc = json.loads((tmp_path / "a.json").read_text())
    assert len(doc["config_hash"]) == 64 and doc["seed"] == 0


def test_simulate_third_discrepancy(tmp_path):
    out = str(tmp_path / "k")
    assert main(["simulate", "--scheme", "bundled:kakutani_third", "--steps", "10000", "--discrepancy",
                 "--snapshot-every", "2500", "--out", out]) == 0
    doc = json.loads((tmp_path / "k.json").read_text())
    assert doc["snapshots"][-1]["discrepancy"] < 0.05
    assert (tmp_path / "k.discrepancy.csv").read_text().startswith("N,value,kind")


def test_simulate_penrose_generation(tmp_path):
    out = str(tmp_path / "p")
    assert main(["simulate", "--scheme", "bundled:penrose_robinson", "--mode", "generation", "--steps", "12",
                 "--out", out]) == 0
    doc = json.loads((tmp_path / "p.json").read_text())
    assert doc["snapshots"][-1]["type_counts"] == [75025, 46368]


def test_simulate_deterministic(tmp_path):
    for tag in ("a", "b"):
        assert main(["simulate", "--scheme", "bundled:rect_square", "--steps", "60", "--seed", "5",
                     "--tiles", "--out", str(tmp_path / tag)]) == 0
    for ext in (".csv", ".json", ".tiles.csv"):
        assert (tmp_path / f"a{ext}").read_bytes() == (tmp_path / f"b{ext}").read_bytes()


def test_replicates_parallel(tmp_path):
    assert main(["simulate", "--scheme", "bundled:rect_square", "--steps", "50", "--replicates", "2", "--jobs", "2",
                 "--tiles", "--out", str(tmp_path / "r")]) == 0
    a = (tmp_path / "r.seed0.tiles.csv").read_text()
    b = (tmp_path / "r.seed1.tiles.csv").read_text()
    assert a != b


def test_stats_writes_comparison(tmp_path, capsys):
    out = str(tmp_path / "s")
    assert main(["stats", "--scheme", "bundled:rect_square", "--max-tiles", "20000", "--out", out]) == 0
    assert "max tail deviation" in capsys.readouterr().out
    assert (tmp_path / "s.comparison.csv").exists()
    assert main(["stats", "--scheme", "bundled:penrose_robinson", "--steps", "60", "--out", out]) == 0
    doc = json.loads((tmp_path / "s.json").read_text())
    assert all(o["oscillating"] for o in doc["oscillation"])


def test_render_cli(tmp_path):
    out = tmp_path / "p.svg"
    assert main(["render", "--scheme", "bundled:penrose_robinson", "--mode", "generation", "--steps", "3",
                 "--out", str(out)]) == 0
    assert out.read_text().count("<polygon") == 21
    assert main(["render", "--scheme", "bundled:rauzy", "--steps", "2", "--out", str(out)]) == 1


def test_rationalize_cli(tmp_path):
    out = str(tmp_path / "tr")
    assert main(["rationalize", "--scheme", "bundled:tr_triangle_rhombus", "--allow-numeric", "--out", out]) == 0
    assert len(json.loads((tmp_path / "tr.json").read_text())["prototiles"]) == 6
    assert json.loads((tmp_path / "tr.index.json").read_text())["a"] == 2
    assert main(["rationalize", "--scheme", "bundled:kakutani_golden", "--allow-numeric", "--out", out]) == 0
    assert len(json.loads((tmp_path / "tr.json").read_text())["prototiles"]) == 2
    assert main(["rationalize", "--scheme", "bundled:kakutani_third", "--out", out]) == 1


def test_rationalized_config_reloads(tmp_path):
    out = str(tmp_path / "g")
    main(["rationalize", "--scheme", "bundled:penrose_robinson", "--allow-numeric", "--out", out])
    assert main(["validate", "--scheme", out + ".json"]) == 0
    assert main(["simulate", "--scheme", out + ".json", "--mode", "generation", "--steps", "4",
                 "--out", str(tmp_path / "gg")]) == 0
