"""Artifact writers: dialect, round-trips, matrix format."""
import numpy as np
import pytest

from rbmsim.errors import ConfigError
from rbmsim.io import (
    fmt,
    read_csv_columns,
    read_matrix_csv,
    write_columns,
    write_csv,
    write_json,
    write_matrix_csv,
)


def test_fmt_shortest_roundtrip():
    for x in (0.1, 1.0, 1e-05, 0.30000000000000004, np.float64(2.5), -0.0):
        assert float(fmt(x)) == float(x)
    assert fmt(0.1) == "0.1"
    assert fmt(3) == "3"
    assert fmt(np.int64(7)) == "7"
    assert fmt(True) == "true"


def test_csv_dialect(tmp_path):
    p = tmp_path / "a.csv"
    write_csv(p, ["t", "v"], [(0.0, 1.5), (0.1, -2.0)])
    raw = p.read_bytes()
    assert raw == b"t,v\n0.0,1.5\n0.1,-2.0\n"
    assert b"\r" not in raw


def test_columns_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    t = np.cumsum(rng.random(50))
    v = rng.standard_normal(50) * 1e-7
    p = tmp_path / "cols.csv"
    write_columns(p, ["t", "v"], t, v)
    back = read_csv_columns(p)
    assert np.array_equal(back["t"], t)
    assert np.array_equal(back["v"], v)


def test_columns_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_columns(tmp_path / "x.csv", ["a"], [1.0], [2.0])


def test_matrix_roundtrip(tmp_path):
    q = np.array([[0.0, 0.25], [1.0, 0.5]])
    p = tmp_path / "q.csv"
    write_matrix_csv(p, q)
    assert p.read_text().splitlines()[0] == "n=2"
    assert np.array_equal(read_matrix_csv(p), q)


def test_matrix_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0.0,1.0\n1.0,0.0\n")
    with pytest.raises(ConfigError):
        read_matrix_csv(bad)
    bad.write_text("n=3\n0,1\n1,0\n")
    with pytest.raises(ConfigError):
        read_matrix_csv(bad)
    bad.write_text("n=2\n0,1\n1,zebra\n")
    with pytest.raises(ConfigError):
        read_matrix_csv(bad)
    with pytest.raises(ConfigError):
        write_matrix_csv(tmp_path / "x.csv", np.zeros((2, 3)))


def test_json_utf8_lf(tmp_path):
    p = tmp_path / "o.json"
    write_json(p, {"b": 1, "a": [1.5, None]})
    raw = p.read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw
    assert raw.index(b'"a"') < raw.index(b'"b"')  # sorted keys, deterministic


def test_read_csv_rejects_ragged(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b\n1.0\n")
    with pytest.raises(ConfigError):
        read_csv_columns(p)
