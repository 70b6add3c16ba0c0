import math

import numpy as np
import pytest

from stwave.errors import InvalidArgumentError
from stwave.io import CsvTable, read_csv, read_json, write_csv, write_json


def test_empty_table_is_header_only(tmp_path):
    p = write_csv(CsvTable(["a", "b"]), tmp_path / "t.csv")
    assert p.read_bytes() == b"a,b\n"


def test_one_by_one(tmp_path):
    p = write_csv(CsvTable(["x"], [[0.5]]), tmp_path / "t.csv")
    assert p.read_bytes() == b"x\n0.5\n"


def test_binary64_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    vals = np.concatenate([rng.standard_normal(500) * 10.0 ** rng.integers(-300, 300, 500), rng.uniform(-1, 1, 500)])
    t = CsvTable(["v"], [[float(v)] for v in vals])
    back = read_csv(write_csv(t, tmp_path / "v.csv"))
    got = np.array(back.column("v"), dtype=float)
    assert np.array_equal(got.view(np.uint64), vals.view(np.uint64))


def test_format_and_lf(tmp_path):
    t = CsvTable(["k", "ok", "x"], [[3, True, 1 / 3]])
    p = write_csv(t, tmp_path / "a" / "t.csv")
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[1] == f"3,true,{format(1 / 3, '.17g')}"
    back = read_csv(p)
    assert back.rows == [[3, True, 1 / 3]]


def test_rectangular():
    with pytest.raises(InvalidArgumentError):
        CsvTable(["a", "b"], [[1]])
    t = CsvTable(["a"])
    with pytest.raises(InvalidArgumentError):
        t.append([1, 2])


def test_json_roundtrip(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), np.array([1.0, 2.0])], "inf": math.inf, "flag": np.bool_(True)}
    p = write_json(obj, tmp_path / "x.json")
    assert read_json(p) == {"a": [2, [1.0, 2.0]], "b": 1.5, "flag": True, "inf": "inf"}
    assert p.read_text().index('"a"') < p.read_text().index('"b"')
