"""OpenStreetMap XML parsing and classification of map features.

Classification picks out the three kinds of entity a world is assembled
from: named buildings, streets (a fixed set of ``highway`` values) and
administrative boundaries.
"""
from __future__ import annotations

import io
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Mapping, Union

log = logging.getLogger(__name__)

__all__ = [
    "OsmParseError",
    "DataError",
    "OsmNode",
    "OsmWay",
    "OsmMember",
    "OsmRelation",
    "OsmDocument",
    "StreetId",
    "BuildingEntry",
    "RegionExtract",
    "STREET_HIGHWAYS",
    "parse_osm",
    "serialize_osm",
    "classify_building",
    "classify_street",
    "classify_boundary",
    "extract_region",
    "derive_hierarchy",
]

STREET_HIGHWAYS = (
    "motorway",
    "trunk",
    "primary",
    "secondary",
    "tertiary",
    "unclassified",
    "residential",
    "motorway_link",
    "trunk_link",
    "primary_link",
    "secondary_link",
    "tertiary_link",
)
_STREET_SET = frozenset(STREET_HIGHWAYS)


class OsmParseError(ValueError):
    """Malformed OSM XML."""

    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DataError(ValueError):
    """Inconsistent input data, such as cyclic boundary containment."""


@dataclass
class OsmNode:
    id: int
    lat: float | None
    lon: float | None
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class OsmWay:
    id: int
    refs: list[int] = field(default_factory=list)
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class OsmMember:
    type: str
    ref: int
    role: str = ""


@dataclass
class OsmRelation:
    id: int
    members: list[OsmMember] = field(default_factory=list)
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class OsmDocument:
    """Parsed elements keyed by id; each element type has its own id space."""

    nodes: dict[int, OsmNode] = field(default_factory=dict)
    ways: dict[int, OsmWay] = field(default_factory=dict)
    relations: dict[int, OsmRelation] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


Source = Union[bytes, str, "os.PathLike[str]", BinaryIO]


def _open(source: Source) -> BinaryIO:
    if isinstance(source, bytes):
        return io.BytesIO(source)
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb")
    return source


def _int(elem: ET.Element, key: str) -> int:
    raw = elem.get(key)
    try:
        return int(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise OsmParseError(f"<{elem.tag}> has bad {key}={raw!r}") from None


def _float(raw: str | None) -> float | None:
    return None if raw is None else float(raw)


def _tags(elem: ET.Element) -> dict[str, str]:
    return {t.get("k", ""): t.get("v", "") for t in elem.iter("tag")}


def _extra(elem: ET.Element, skip: Iterable[str]) -> dict[str, str]:
    skip = set(skip)
    return {k: v for k, v in elem.attrib.items() if k not in skip}


def parse_osm(source: Source) -> OsmDocument:
    """Parse OSM XML from bytes, a path or a binary stream."""
    doc = OsmDocument()
    stream = _open(source)
    close = not (stream is source)
    parser = ET.XMLPullParser(events=("start", "end"))
    depth = 0
    try:
        while True:
            chunk = stream.read(1 << 16)
            if not chunk:
                break
            try:
                parser.feed(chunk)
                for event, elem in parser.read_events():
                    if event == "start":
                        depth += 1
                        if depth == 1:
                            if elem.tag != "osm":
                                raise OsmParseError(f"root element is <{elem.tag}>, expected <osm>")
                            doc.attrs = dict(elem.attrib)
                        continue
                    depth -= 1
                    if depth == 1:
                        _element(doc, elem)
                        elem.clear()
            except ET.ParseError as exc:
                raise OsmParseError(str(exc), exc.position[0]) from None
        try:
            parser.close()
        except ET.ParseError as exc:
            raise OsmParseError(str(exc), exc.position[0]) from None
    finally:
        if close:
            stream.close()
    if depth != 0:
        raise OsmParseError("unexpected end of document")
    for way in doc.ways.values():
        for ref in way.refs:
            if ref not in doc.nodes:
                doc.warnings.append(f"way {way.id} refers to missing node {ref}")
    for w in doc.warnings[:5]:
        log.debug(w)
    return doc


def _element(doc: OsmDocument, elem: ET.Element) -> None:
    tag = elem.tag
    if tag == "node":
        nid = _int(elem, "id")
        doc.nodes[nid] = OsmNode(
            nid,
            _float(elem.get("lat")),
            _float(elem.get("lon")),
            _tags(elem),
            _extra(elem, ("id", "lat", "lon")),
        )
    elif tag == "way":
        wid = _int(elem, "id")
        refs = [_int(nd, "ref") for nd in elem.iter("nd")]
        doc.ways[wid] = OsmWay(wid, refs, _tags(elem), _extra(elem, ("id",)))
    elif tag == "relation":
        rid = _int(elem, "id")
        members = [OsmMember(m.get("type", ""), _int(m, "ref"), m.get("role", "")) for m in elem.iter("member")]
        doc.relations[rid] = OsmRelation(rid, members, _tags(elem), _extra(elem, ("id",)))


def serialize_osm(doc: OsmDocument) -> bytes:
    """Write a document back to OSM XML (nodes, ways, relations by id)."""
    root = ET.Element("osm", doc.attrs or {"version": "0.6"})

    def add_tags(parent: ET.Element, tags: Mapping[str, str]) -> None:
        for k, v in tags.items():
            ET.SubElement(parent, "tag", {"k": k, "v": v})

    for nid in sorted(doc.nodes):
        n = doc.nodes[nid]
        attrs = {"id": str(nid)}
        if n.lat is not None:
            attrs["lat"] = repr(n.lat)
        if n.lon is not None:
            attrs["lon"] = repr(n.lon)
        attrs.update(n.attrs)
        add_tags(ET.SubElement(root, "node", attrs), n.tags)
    for wid in sorted(doc.ways):
        w = doc.ways[wid]
        el = ET.SubElement(root, "way", {"id": str(wid), **w.attrs})
        for ref in w.refs:
            ET.SubElement(el, "nd", {"ref": str(ref)})
        add_tags(el, w.tags)
    for rid in sorted(doc.relations):
        r = doc.relations[rid]
        el = ET.SubElement(root, "relation", {"id": str(rid), **r.attrs})
        for m in r.members:
            ET.SubElement(el, "member", {"type": m.type, "ref": str(m.ref), "role": m.role})
        add_tags(el, r.tags)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


# -- classification ---------------------------------------------------------

@dataclass(frozen=True, order=True)
class StreetId:
    """Street identity; ``kind`` is ``name``, ``ref`` or ``way`` in that precedence."""

    kind: str
    value: str

    @classmethod
    def of_name(cls, name: str) -> StreetId:
        return cls("name", name)

    @classmethod
    def of_ref(cls, ref: str) -> StreetId:
        return cls("ref", ref)

    @classmethod
    def of_way(cls, way_id: int) -> StreetId:
        return cls("way", str(way_id))

    @property
    def label(self) -> str:
        """Identifier used for the street's ID node."""
        return f"way {self.value}" if self.kind == "way" else self.value

    def __str__(self) -> str:
        return self.label


def classify_building(tags: Mapping[str, str]) -> str | None:
    if "building" not in tags:
        return None
    name = tags.get("name")
    if name:
        return name
    number, street = tags.get("addr:housenumber"), tags.get("addr:street")
    if number and street:
        return f"{number} {street}"
    return None


def classify_street(tags: Mapping[str, str], way_id: int) -> StreetId | None:
    if tags.get("highway") not in _STREET_SET:
        return None
    if tags.get("name"):
        return StreetId.of_name(tags["name"])
    if tags.get("ref"):
        return StreetId.of_ref(tags["ref"])
    return StreetId.of_way(way_id)


def classify_boundary(tags: Mapping[str, str]) -> tuple[str, int] | None:
    if tags.get("boundary") != "administrative":
        return None
    try:
        level = int(tags.get("admin_level", ""))
    except ValueError:
        return None
    if not 2 <= level <= 11:
        return None
    name = tags.get("short_name") or tags.get("name")
    if not name:
        return None
    return name, level


# -- extraction ---------------------------------------------------------------

@dataclass(frozen=True)
class BuildingEntry:
    name: str
    street: str | None
    element: tuple[str, int]


@dataclass
class RegionExtract:
    """Streets, buildings and junctions found inside one boundary.

    ``way_nodes`` keeps the node sequence of every street way so that a
    parent region can tell which of its ways belong to no child.
    """

    boundary: str
    streets: dict[StreetId, set[int]] = field(default_factory=dict)
    buildings: list[BuildingEntry] = field(default_factory=list)
    junctions: dict[int, set[StreetId]] = field(default_factory=dict)
    crossing_nodes: set[int] = field(default_factory=set)
    way_nodes: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def street_of_way(self) -> dict[int, StreetId]:
        return {w: sid for sid, ways in self.streets.items() for w in ways}


def junctions_of(streets: Mapping[StreetId, Iterable[int]], way_nodes: Mapping[int, Iterable[int]]) -> dict[int, set[StreetId]]:
    """OSM nodes shared by ways of two or more distinct streets."""
    seen: dict[int, set[StreetId]] = {}
    for sid, ways in streets.items():
        for w in ways:
            for n in way_nodes.get(w, ()):
                seen.setdefault(n, set()).add(sid)
    return {n: sids for n, sids in seen.items() if len(sids) >= 2}


def extract_region(doc: OsmDocument, boundary: str, crossing: Iterable[int] = ()) -> RegionExtract:
    """Group a region's query result into streets, buildings and junctions."""
    out = RegionExtract(boundary)
    for wid in sorted(doc.ways):
        way = doc.ways[wid]
        sid = classify_street(way.tags, wid)
        if sid is not None:
            out.streets.setdefault(sid, set()).add(wid)
            out.way_nodes[wid] = tuple(way.refs)
    for kind, table in (("node", doc.nodes), ("way", doc.ways), ("relation", doc.relations)):
        for eid in sorted(table):
            tags = table[eid].tags
            name = classify_building(tags)
            if name is not None:
                out.buildings.append(BuildingEntry(name, tags.get("addr:street"), (kind, eid)))
    out.junctions = junctions_of(out.streets, out.way_nodes)
    out.crossing_nodes = set(crossing)
    return out


def derive_hierarchy(descendants: Mapping[str, Iterable[str]]) -> dict[str, list[str]]:
    """Immediate children from descendant sets.

    A descendant of ``r`` is an immediate child unless it is also a
    descendant of another descendant of ``r``.  Children are sorted by name.
    """
    desc = {r: set(ds) for r, ds in descendants.items()}
    for r, ds in desc.items():
        if r in ds:
            raise DataError(f"boundary {r!r} contains itself")
    _check_acyclic(desc)
    out: dict[str, list[str]] = {}
    for r, ds in desc.items():
        nested: set[str] = set()
        for d in ds:
            nested |= desc.get(d, set()) & ds
        out[r] = sorted(ds - nested)
    return out


def _check_acyclic(desc: Mapping[str, set[str]]) -> None:
    state: dict[str, int] = {}

    def visit(r: str, path: list[str]) -> None:
        mark = state.get(r)
        if mark == 2:
            return
        if mark == 1:
            raise DataError("cyclic boundary containment: " + " > ".join(path + [r]))
        state[r] = 1
        for d in sorted(desc.get(r, ())):
            visit(d, path + [r])
        state[r] = 2

    for r in sorted(desc):
        visit(r, [])
