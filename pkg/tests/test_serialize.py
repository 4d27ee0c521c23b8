"""Output formatting: 17-significant-digit numbers, schema versioning."""

import json

import pytest

from relaydde import serialize
from relaydde.errors import LostBranch
from relaydde.atlas import mode_trace


def test_float_formatting_full_precision():
    x = 1.0 / 3.0
    assert serialize.fmt(x) == "0.33333333333333331"
    assert float(serialize.fmt(x)) == x
    assert serialize.fmt(0.1) == "0.10000000000000001"
    assert serialize.fmt(2.0) == "2"
    assert serialize.fmt(True) == "true"
    assert serialize.fmt(None) == ""
    assert serialize.fmt(float("nan")) == "nan"


def test_json_line_schema_and_round_trip():
    line = serialize.json_line({"value": 1.0 / 7.0, "items": [0.1, 2]})
    doc = json.loads(line)
    assert doc["schema_version"] == 1
    assert doc["value"] == 1.0 / 7.0
    assert doc["items"][0] == 0.1
    assert "0.14285714285714285" in line


def test_csv_text_deterministic():
    rows = [(0.1, -1, "a"), (2.0 / 3.0, 5, "b")]
    a = serialize.csv_text(["x", "n", "tag"], rows)
    b = serialize.csv_text(["x", "n", "tag"], rows)
    assert a == b
    assert a.splitlines()[0] == "x,n,tag"
    assert a.splitlines()[1].startswith("0.10000000000000001,-1,")


def test_threads_env_fallback(monkeypatch):
    from relaydde.cli import _default_threads
    monkeypatch.setenv("RELAY_DDE_THREADS", "3")
    assert _default_threads() == 3
    monkeypatch.setenv("RELAY_DDE_THREADS", "junk")
    assert _default_threads() >= 1


def test_mode_trace_lost_branch_reports_last_good():
    # the slow-mode root leaves double precision partway through this range
    with pytest.raises(LostBranch) as err:
        mode_trace(0, 0.45, (30.0, 60.0), sigma=-1, samples=40)
    assert err.value.last_good is not None
    assert err.value.last_good.Omega < 50.0
