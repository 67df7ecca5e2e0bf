import csv
import io
import json

import numpy as np

from tilesplit import configs
from tilesplit.engine import run, tile_records
from tilesplit.reports import config_hash, dumps, tiles_to_csv, trace_to_csv, trace_to_json
from tilesplit.scheme import dump_scheme, load_scheme


def test_config_hash_stable_under_reformatting():
    s = configs.load("rect_square")
    again = load_scheme(json.dumps(json.loads(dump_scheme(s)), indent=7))
    assert config_hash(s) == config_hash(again)
    assert config_hash(s) != config_hash(configs.load("kakutani_third"))


def test_trace_csv_columns():
    tr, _ = run(configs.load("kakutani_third"), max_steps=5)
    rows = list(csv.reader(io.StringIO(trace_to_csv(tr))))
    assert rows[0][:5] == ["step", "level", "tiles", "max_volume", "discrepancy"]
    assert "edge0_count" in rows[0] and "wall" not in ",".join(rows[0])
    assert len(rows) == 7


def test_trace_json_roundtrip():
    tr, _ = run(configs.load("rect_square"), max_steps=5)
    doc = json.loads(dumps(trace_to_json(tr, config_hash="x")))
    assert doc["config_hash"] == "x" and doc["labels"] == ["R", "S"]
    assert doc["snapshots"][-1]["tiles"] == tr.final.tiles


def test_tiles_csv_rows():
    s = configs.load("rect_square")
    _, st = run(s, max_steps=4, track_geometry=True)
    text = tiles_to_csv(tile_records(st), s.labels)
    assert len(text.splitlines()) == st.tile_count + 1


def test_dumps_numpy():
    assert json.loads(dumps({"a": np.arange(3), "b": np.float64(0.5), "c": np.int64(2)})) == {"a": [0, 1, 2], "b": 0.5, "c": 2}
