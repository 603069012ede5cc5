"""JSON persistence and DOT rendering of world bigraphs.

The JSON layout (schema 1)::

    {"schema": 1,
     "controls": [[name, arity], ...],
     "nodes": [[id, control index] or [id, control index, parameter], ...],
     "place": {"regions": r, "sites": s, "rn": [[i, j], ...], "rs": ..., "nn": ..., "ns": ...},
     "links": [[outer or null, [[node, port], ...]], ...],
     "names": {spatial name: node id, ...}}

Every list is sorted, so saving the same world twice gives identical bytes.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

from .builder import WorldBigraph
from .core import Bigraph, Control, Link, PlaceGraph, region_code

__all__ = ["SCHEMA_VERSION", "LoadError", "BigraphParseError", "to_json", "from_json", "save", "load", "to_dot"]

SCHEMA_VERSION = 1


class LoadError(ValueError):
    """The file is not a readable world bigraph."""


class BigraphParseError(LoadError):
    """The file is not valid JSON (for example, truncated)."""


def _link_key(lk: Link) -> tuple:
    return (lk.outer is not None, lk.outer or "", min((v for v, _ in lk.ports), default=-1))


def to_json(wb: WorldBigraph) -> dict[str, Any]:
    b = wb.bigraph
    table = sorted({(c.name, c.arity) for c in b.controls})
    index = {c: i for i, c in enumerate(table)}
    nodes: list[list[Any]] = []
    for v, c in enumerate(b.controls):
        row: list[Any] = [v, index[(c.name, c.arity)]]
        if c.parameter is not None:
            row.append(c.parameter)
        nodes.append(row)
    p = b.place
    place = {
        "regions": p.regions,
        "sites": p.sites,
        "rn": [list(e) for e in p.rn.entries()],
        "rs": [list(e) for e in p.rs.entries()],
        "nn": [list(e) for e in p.nn.entries()],
        "ns": [list(e) for e in p.ns.entries()],
    }
    links = [[lk.outer, sorted([v, i] for v, i in lk.ports)] for lk in sorted(b.links, key=_link_key)]
    return {
        "schema": SCHEMA_VERSION,
        "controls": [list(c) for c in table],
        "nodes": nodes,
        "place": place,
        "links": links,
        "names": dict(sorted(wb.name_index.items())),
    }


def from_json(data: Any) -> WorldBigraph:
    if not isinstance(data, dict) or "schema" not in data:
        raise LoadError("not a bigraph file: missing schema field")
    if data["schema"] != SCHEMA_VERSION:
        raise LoadError(f"unsupported schema version {data['schema']!r}; this build reads {SCHEMA_VERSION}")
    try:
        table = [Control(name, arity) for name, arity in data["controls"]]
        controls: list[Control] = []
        for expect, row in enumerate(data["nodes"]):
            if row[0] != expect:
                raise LoadError(f"node ids must be dense and sorted; got {row[0]} at position {expect}")
            base = table[row[1]]
            controls.append(base if len(row) < 3 else Control(base.name, base.arity, row[2]))
        pl = data["place"]
        n = len(controls)
        node_parent = [None] * n
        site_parent = [None] * pl["sites"]
        for r, j in pl["rn"]:
            node_parent[j] = region_code(r)
        for i, j in pl["nn"]:
            node_parent[j] = i
        for r, s in pl["rs"]:
            site_parent[s] = region_code(r)
        for i, s in pl["ns"]:
            site_parent[s] = i
        if any(x is None for x in node_parent) or any(x is None for x in site_parent):
            raise LoadError("place graph leaves a node or site without a parent")
        links = [Link(outer, frozenset((v, i) for v, i in ports)) for outer, ports in data["links"]]
        place = PlaceGraph(pl["regions"], pl["sites"], node_parent, site_parent)  # type: ignore[arg-type]
        wb = WorldBigraph(Bigraph(controls, place, links))
    except LoadError:
        raise
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise LoadError(f"malformed bigraph file: {exc}") from exc
    names = data.get("names")
    if isinstance(names, dict):
        wb.__dict__["name_index"] = {str(k): int(v) for k, v in names.items()}
    return wb


def dumps(wb: WorldBigraph) -> str:
    return json.dumps(to_json(wb), ensure_ascii=False, separators=(",", ":")) + "\n"


def save(wb: WorldBigraph, path: str | os.PathLike[str]) -> None:
    Path(path).write_text(dumps(wb), encoding="utf-8")


def load(path: str | os.PathLike[str]) -> WorldBigraph:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BigraphParseError(f"{path}: {exc}") from exc
    return from_json(data)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(wb: WorldBigraph) -> str:
    """Graphviz rendering: containment as nested clusters, links as edges."""
    b = wb.bigraph
    p = b.place
    out = ["digraph bigraph {", "  compound=true;", "  node [shape=box, style=rounded];"]

    def label(v: int) -> str:
        return str(b.controls[v])

    def emit(code: int, indent: str) -> None:
        for v in p.node_children(code):
            kids = p.node_children(v) or p.site_children(v)
            if kids:
                out.append(f"{indent}subgraph cluster_n{v} {{ label={_quote(label(v))};")
                out.append(f"{indent}  n{v} [label={_quote(label(v))}, shape=point];")
                emit(v, indent + "  ")
                out.append(f"{indent}}}")
            else:
                out.append(f"{indent}n{v} [label={_quote(label(v))}];")
        for s in p.site_children(code):
            out.append(f"{indent}s{s} [label=\"{s}\", style=dashed];")

    for r in range(p.regions):
        out.append(f"  subgraph cluster_r{r} {{ label=\"{r}\"; style=dashed;")
        emit(region_code(r), "    ")
        out.append("  }")
    for k, lk in enumerate(b.links):
        ends = sorted(v for v, _ in lk.ports)
        if lk.outer is not None:
            out.append(f"  o{k} [label={_quote(lk.outer)}, shape=plaintext];")
            ends_label = f"o{k}"
            for v in ends:
                out.append(f"  n{v} -> {ends_label} [dir=none, color=green];")
        else:
            for a, c in zip(ends, ends[1:]):
                out.append(f"  n{a} -> n{c} [dir=none, color=green];")
    out.append("}")
    return "\n".join(out) + "\n"
