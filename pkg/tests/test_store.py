from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigworld.builder import build, empty_world
from bigworld.core import iso_equal
from bigworld.rules import multicast
from bigworld.store import SCHEMA_VERSION, BigraphParseError, LoadError, dumps, load, save, to_dot, to_json
from helpers import road_network_world, shire_world, synthetic_extracts

FIXTURES = {
    "empty": empty_world,
    "road-network": road_network_world,
    "shire": shire_world,
    "messages": lambda: multicast(shire_world(), "m", "Shire")[0],
}


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_round_trip(name, tmp_path):
    wb = FIXTURES[name]()
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    save(wb, first)
    back = load(first)
    assert iso_equal(back.bigraph, wb.bigraph)
    save(back, second)
    assert first.read_bytes() == second.read_bytes()
    assert back.name_index == wb.name_index


@pytest.mark.parametrize("name", ["road-network", "shire", "messages"])
def test_size_budget(name):
    wb = FIXTURES[name]()
    assert len(dumps(wb).encode()) <= 256 * wb.bigraph.n_nodes


def test_layout_invariants():
    data = to_json(shire_world())
    assert data["schema"] == SCHEMA_VERSION
    assert [row[0] for row in data["nodes"]] == list(range(len(data["nodes"])))
    for key in ("rn", "rs", "nn", "ns"):
        assert data["place"][key] == sorted(data["place"][key])
    keys = [(outer is not None, outer or "", min(v for v, _ in ports)) for outer, ports in data["links"]]
    assert keys == sorted(keys)
    assert all(ports == sorted(ports) for _, ports in data["links"])
    assert data["names"]["frodo.Bag End.Hill Road.Hobbiton.Shire"] >= 0


def test_deterministic():
    assert dumps(shire_world()) == dumps(shire_world())


def test_wrong_schema(tmp_path):
    path = tmp_path / "w.json"
    data = to_json(shire_world())
    data["schema"] = 99
    path.write_text(json.dumps(data))
    with pytest.raises(LoadError, match="schema version 99"):
        load(path)


def test_missing_schema(tmp_path):
    path = tmp_path / "w.json"
    path.write_text("[]")
    with pytest.raises(LoadError):
        load(path)


def test_truncated(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(dumps(shire_world())[:100])
    with pytest.raises(BigraphParseError):
        load(path)


def test_orphan_node(tmp_path):
    data = to_json(shire_world())
    data["place"]["rn"] = data["place"]["rn"][1:]
    path = tmp_path / "w.json"
    path.write_text(json.dumps(data))
    with pytest.raises(LoadError):
        load(path)


def test_dot():
    text = to_dot(road_network_world())
    assert text.startswith("digraph bigraph {") and text.rstrip().endswith("}")
    assert 'label="Boundary"' in text and "color=green" in text
    assert text.count("subgraph cluster_r") == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 3), st.integers(0, 999))
def test_round_trip_synthetic(regions, streets, buildings, seed):
    from bigworld.store import from_json

    wb = build("Land", *synthetic_extracts(regions, streets, buildings, seed))
    back = from_json(json.loads(dumps(wb)))
    assert iso_equal(back.bigraph, wb.bigraph)
    assert dumps(back) == dumps(wb)
