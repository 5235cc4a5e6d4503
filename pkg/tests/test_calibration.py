import json
import math

import pytest

from delta2d.calibration import (SECTIONS, build_fixture, check_fixture, compare, dumps, entry_problems,
                                 load_fixture, write_fixture, _constant)


@pytest.fixture(scope="module")
def recorded():
    return load_fixture()


def test_shipped_fixture_shape(recorded):
    assert set(recorded["results"]) == set(SECTIONS)
    for sec, entries in recorded["results"].items():
        for name, e in entries.items():
            assert e["kind"] in ("constant", "tolerance")
            assert math.isfinite(e["value"])
            if e["kind"] == "constant":
                assert e["stability"] <= 2.0, name


def test_constant_entry():
    e = _constant({"a": 1.0, "b": 1.5}, "env")
    assert e["value"] == 1.5 and e["stability"] == 1.5
    assert _constant({"a": 0.0, "b": 0.0}, "env")["stability"] == 1
    assert entry_problems("x", _constant({"a": 1.0, "b": 3.0}, "env"))


def test_compare_flags_regressions():
    old = {"s": {"t": {"kind": "tolerance", "value": 0.01}, "c": {"kind": "constant", "value": 3.0, "stability": 1.0}}}
    ok = {"s": {"t": {"kind": "tolerance", "value": 0.0104}, "c": {"kind": "constant", "value": 5.0, "stability": 1.0}}}
    bad = {"s": {"t": {"kind": "tolerance", "value": 0.02}, "c": {"kind": "constant", "value": 7.0, "stability": 1.0}}}
    assert compare(old, ok) == []
    assert len(compare(old, bad)) == 2
    assert compare(old, {"s": {"new": {"kind": "tolerance", "value": 0.0}}})


def test_write_is_reproducible(tmp_path):
    path = tmp_path / "fix.json"
    write_fixture(build_fixture(sections=["decomposition"]), path)
    first = path.read_text()
    write_fixture(build_fixture(sections=["decomposition"]), path)
    assert path.read_text() == first
    doc = json.loads(first)
    assert doc["parent_hash"] is None and len(doc["content_hash"]) == 64


def test_parent_chain_on_input_change(tmp_path):
    path = tmp_path / "fix.json"
    doc = build_fixture(sections=["decomposition"])
    first = write_fixture(doc, path)
    changed = dict(doc, input_hash="0" * 64)
    second = write_fixture(changed, path)
    assert second["parent_hash"] == first["content_hash"]


def test_check_passes_and_detects_tampering(tmp_path, recorded):
    assert check_fixture(sections=["decomposition"]) == []
    bad = json.loads(dumps(recorded))
    bad["results"]["decomposition"]["toy3,P=4"]["value"] = 1e-3
    path = tmp_path / "bad.json"
    path.write_text(dumps(bad))
    problems = check_fixture(path, sections=["decomposition"])
    assert any("toy3,P=4" in p for p in problems)
    bad["version"] = 99
    path.write_text(dumps(bad))
    assert any("version" in p for p in check_fixture(path, sections=["decomposition"]))
