"""Assembly of world bigraphs from per-region OSM extracts.

A world bigraph has two regions.  Region 0 (the ID perspective) holds one
``ID(name)`` node per named entity; region 1 (the Physical perspective)
holds the containment tree of boundaries, streets, buildings and junctions.
Each entity is tied to its ID node by a closed two-port link.  Junctions of
streets meeting at the same OSM node share a link named ``node <id>``; the
link stays open only where the node lies on a street crossing the region's
boundary.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .core import (
    Bigraph,
    Control,
    Link,
    atom,
    close_all,
    elementary_id,
    ion,
    merge,
    merge_all,
    merge_prod,
    nest,
    placing,
    ppar,
    ppar_all,
    region_code,
)
from .osm import DataError, RegionExtract, StreetId
from .vocab import AGENT, BOUNDARY, BUILDING, ID, JUNCTION, STREET, WORLD, junction_name

log = logging.getLogger(__name__)

__all__ = [
    "BuildError",
    "AmbiguousNameError",
    "SpatialName",
    "WorldBigraph",
    "WorldStats",
    "ID_REGION",
    "PHYSICAL_REGION",
    "build",
    "build_algebraic",
    "spatial_name",
    "resolve",
    "combine_parallel",
    "connector",
    "nest_into_context",
    "add_entity",
    "add_agent",
    "stats",
    "empty_world",
]

ID_REGION = region_code(0)
PHYSICAL_REGION = region_code(1)


class BuildError(RuntimeError):
    """Inputs needed for a build are missing."""


class AmbiguousNameError(LookupError):
    """A spatial name denotes more than one node."""

    def __init__(self, name: str, candidates: Sequence[int]) -> None:
        super().__init__(f"{name!r} is ambiguous: nodes {sorted(candidates)}")
        self.name = name
        self.candidates = sorted(candidates)


@dataclass(frozen=True)
class SpatialName:
    """Dot-joined path of identifiers, object first and root last."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("spatial name needs at least one segment")
        for seg in self.segments:
            if "." in seg:
                raise ValueError(f"segment {seg!r} contains '.'")

    @classmethod
    def parse(cls, text: str) -> SpatialName:
        return cls(tuple(text.split(".")))

    def __str__(self) -> str:
        return ".".join(self.segments)


@dataclass(frozen=True)
class WorldStats:
    nodes: int
    edges: int
    outer_names: int
    subdivisions: int
    streets: int
    buildings: int
    junctions: int

    HEADER = ("nodes", "edges", "outer_names", "subdivisions", "streets", "buildings", "junctions")

    def row(self) -> tuple[int, ...]:
        return tuple(getattr(self, k) for k in self.HEADER)


@dataclass(frozen=True)
class WorldBigraph:
    bigraph: Bigraph

    @cached_property
    def identifiers(self) -> dict[int, str]:
        """Identifier of each node tied to an ID node by a link."""
        b = self.bigraph
        out: dict[int, str] = {}
        for lk in b.links:
            ids = [v for v, _ in lk.ports if b.controls[v].name == "ID"]
            if len(ids) != 1:
                continue
            name = b.controls[ids[0]].parameter or ""
            for v, _ in lk.ports:
                if v != ids[0]:
                    out[v] = name
        return out

    def identifier(self, node: int) -> str | None:
        return self.identifiers.get(node)

    def children(self, code: int) -> list[int]:
        return self.bigraph.place.node_children(code)

    @cached_property
    def name_index(self) -> dict[str, int]:
        """Spatial name of every nameable physical node; ambiguous names are left out."""
        seen: dict[str, list[int]] = {}
        for v in sorted(self.identifiers):
            if self.bigraph.controls[v].name in ("ID", "Message"):
                continue
            try:
                text = str(spatial_name(self, v))
            except (LookupError, ValueError):
                continue
            seen.setdefault(text, []).append(v)
        return {k: vs[0] for k, vs in seen.items() if len(vs) == 1}

    def in_physical(self, node: int) -> bool:
        p = node
        while p >= 0:
            p = self.bigraph.place.node_parent[p]
        return p == PHYSICAL_REGION


# -- direct assembly ----------------------------------------------------------

@dataclass
class _Assembly:
    controls: list[Control] = field(default_factory=list)
    parent: list[int] = field(default_factory=list)
    closed: list[frozenset[tuple[int, int]]] = field(default_factory=list)

    def node(self, control: Control, parent: int) -> int:
        self.controls.append(control)
        self.parent.append(parent)
        return len(self.controls) - 1

    def entity(self, control: Control, ident: str, parent: int) -> int:
        if "." in ident:
            log.warning("identifier %r contains '.'; it cannot appear in spatial names", ident)
        v = self.node(control, parent)
        i = self.node(ID(ident), ID_REGION)
        self.closed.append(frozenset({(v, 0), (i, 0)}))
        return v


def _check_hierarchy(region: str, hierarchy: Mapping[str, Sequence[str]], extracts: Mapping[str, RegionExtract]) -> None:
    state: dict[str, int] = {}

    def visit(r: str, path: list[str]) -> None:
        if state.get(r) == 1:
            raise DataError("cyclic region hierarchy: " + " > ".join(path + [r]))
        if state.get(r) == 2:
            raise DataError(f"region {r!r} appears under two parents")
        if r not in extracts:
            raise BuildError(f"no extract for region {r!r}")
        state[r] = 1
        for c in hierarchy.get(r, ()):
            visit(c, path + [r])
        state[r] = 2

    visit(region, [])


def _own_parts(
    ext: RegionExtract, children: Iterable[RegionExtract]
) -> tuple[dict[StreetId, list[int]], list]:
    """Street ways and buildings of a region that lie in none of its children."""
    child_ways: set[int] = set()
    child_buildings: set[tuple[str, int]] = set()
    for c in children:
        child_ways.update(c.way_nodes)
        child_ways.update(w for ws in c.streets.values() for w in ws)
        child_buildings.update(b.element for b in c.buildings)
    streets: dict[StreetId, list[int]] = {}
    for sid in sorted(ext.streets):
        ways = sorted(w for w in ext.streets[sid] if w not in child_ways)
        if ways:
            streets[sid] = ways
    buildings = [b for b in ext.buildings if b.element not in child_buildings]
    return streets, buildings


def _street_junctions(ext: RegionExtract, ways: Iterable[int]) -> list[int]:
    hits = set()
    for w in ways:
        for n in ext.way_nodes.get(w, ()):
            if n in ext.junctions or n in ext.crossing_nodes:
                hits.add(n)
    return sorted(hits)


def _assemble(
    asm: _Assembly,
    region: str,
    parent: int,
    hierarchy: Mapping[str, Sequence[str]],
    extracts: Mapping[str, RegionExtract],
) -> dict[int, list[int]]:
    ext = extracts[region]
    boundary = asm.entity(BOUNDARY, region, parent)
    junctions: dict[int, list[int]] = {}
    kids = list(hierarchy.get(region, ()))
    for child in kids:
        for osm, nodes in _assemble(asm, child, boundary, hierarchy, extracts).items():
            junctions.setdefault(osm, []).extend(nodes)
    streets, buildings = _own_parts(ext, (extracts[c] for c in kids))
    by_name: dict[str, int] = {}
    for sid, ways in streets.items():
        s = asm.entity(STREET, sid.label, boundary)
        if sid.kind == "name":
            by_name[sid.value] = s
        for osm in _street_junctions(ext, ways):
            junctions.setdefault(osm, []).append(asm.node(JUNCTION, s))
    for b in buildings:
        home = by_name.get(b.street or "", boundary) if b.street else boundary
        asm.entity(BUILDING, b.name, home)
    for osm in sorted(junctions):
        if osm not in ext.crossing_nodes:
            asm.closed.append(frozenset((v, 0) for v in junctions.pop(osm)))
    return junctions


def build(
    region: str,
    hierarchy: Mapping[str, Sequence[str]],
    extracts: Mapping[str, RegionExtract],
) -> WorldBigraph:
    """Build the world bigraph of ``region`` and everything below it."""
    _check_hierarchy(region, hierarchy, extracts)
    asm = _Assembly()
    open_links = _assemble(asm, region, PHYSICAL_REGION, hierarchy, extracts)
    links = [Link(None, ports) for ports in asm.closed]
    links += [Link(junction_name(osm), frozenset((v, 0) for v in open_links[osm])) for osm in sorted(open_links)]
    return WorldBigraph(Bigraph.from_parents(asm.controls, 2, asm.parent, [], links))


# -- algebraic assembly ---------------------------------------------------------

def _regroup(body: Bigraph, groups: Sequence[Sequence[int]]) -> Bigraph:
    """Merge the listed roots of ``body`` into one region per group."""
    order = [r for g in groups for r in g]
    routed = nest(placing(order), body)
    return nest(ppar_all(merge(len(g)) for g in groups), routed)


def _algebraic(
    region: str, path: str, hierarchy: Mapping[str, Sequence[str]], extracts: Mapping[str, RegionExtract]
) -> Bigraph:
    ext = extracts[region]
    kids = list(hierarchy.get(region, ()))
    parts = [_algebraic(c, f"{path}/{c}", hierarchy, extracts) for c in kids]
    streets, buildings = _own_parts(ext, (extracts[c] for c in kids))
    housed: dict[str, list] = {}
    loose = []
    named = {sid.value for sid in streets if sid.kind == "name"}
    for b in buildings:
        if b.street and b.street in named:
            housed.setdefault(b.street, []).append(b)
        else:
            loose.append(b)

    def building_part(b) -> tuple[Bigraph, Bigraph]:
        x = f"id:{path}/building:{b.element[0]}:{b.element[1]}"
        return atom(ID(b.name), [x]), atom(BUILDING, [x])

    for sid, ways in streets.items():
        x = f"id:{path}/street:{sid.kind}:{sid.value}"
        inner = [atom(JUNCTION, [junction_name(osm)]) for osm in _street_junctions(ext, ways)]
        ids = [atom(ID(sid.label), [x])]
        for b in housed.get(sid.value, []) if sid.kind == "name" else []:
            i, e = building_part(b)
            ids.append(i)
            inner.append(e)
        parts.append(ppar(merge_all(ids), nest(ion(STREET, [x]), merge_all(inner))))
    for b in loose:
        i, e = building_part(b)
        parts.append(ppar(i, e))
    body = ppar_all(parts)
    k = len(parts)
    grouped = _regroup(body, [[2 * i for i in range(k)], [2 * i + 1 for i in range(k)]])
    x = f"id:{path}/boundary"
    top = ppar(merge_prod(atom(ID(region), [x]), elementary_id()), ion(BOUNDARY, [x]))
    world = nest(top, grouped)
    private = [n for n in world.outer_names if n.startswith("id:")]
    private += [
        junction_name(osm)
        for osm in {int(n.split(" ", 1)[1]) for n in world.outer_names if n.startswith("node ")}
        if osm not in ext.crossing_nodes
    ]
    return close_all(private, world)


def build_algebraic(
    region: str,
    hierarchy: Mapping[str, Sequence[str]],
    extracts: Mapping[str, RegionExtract],
) -> WorldBigraph:
    """Same world as :func:`build`, composed from ions with nest, merge and close.

    Much slower; it exists to cross-check the direct assembly.
    """
    _check_hierarchy(region, hierarchy, extracts)
    return WorldBigraph(_algebraic(region, region, hierarchy, extracts))


# -- naming -------------------------------------------------------------------

def spatial_name(wb: WorldBigraph, node: int) -> SpatialName:
    b = wb.bigraph
    if not 0 <= node < b.n_nodes:
        raise LookupError(f"no node {node}")
    if not wb.in_physical(node):
        raise LookupError(f"node {node} is not in the Physical perspective")
    segs: list[str] = []
    v = node
    while v >= 0:
        ident = wb.identifier(v)
        if ident is None:
            raise LookupError(f"node {v} ({b.controls[v]}) has no identifier")
        segs.append(ident)
        v = b.place.node_parent[v]
    if len(segs) > 1 and segs[-1] == WORLD:
        segs.pop()
    return SpatialName(tuple(segs))


def resolve(wb: WorldBigraph, name: SpatialName | str) -> int | None:
    """Node denoted by ``name``, or ``None`` if some segment matches nothing."""
    if isinstance(name, str):
        name = SpatialName.parse(name)
    segs = list(reversed(name.segments))
    frontier = [PHYSICAL_REGION]
    tops = wb.children(PHYSICAL_REGION)
    worlds = [v for v in tops if wb.identifier(v) == WORLD]
    if segs[0] != WORLD and worlds:
        frontier += worlds
    for seg in segs:
        frontier = [c for f in frontier for c in wb.children(f) if wb.identifier(c) == seg]
        if not frontier:
            return None
    if len(frontier) > 1:
        raise AmbiguousNameError(str(name), frontier)
    return frontier[0]


# -- combination ----------------------------------------------------------------

def empty_world() -> WorldBigraph:
    return WorldBigraph(Bigraph.from_parents([], 2, [], [], []))


def combine_parallel(a: WorldBigraph, b: WorldBigraph) -> WorldBigraph:
    """Juxtapose two worlds, fusing shared outer names, and re-merge perspectives."""
    body = ppar(a.bigraph, b.bigraph)
    ra, rb = a.bigraph.regions, b.bigraph.regions
    if ra != 2 or rb != 2:
        raise ValueError("combine_parallel expects two-region worlds")
    return WorldBigraph(_regroup(body, [[0, 2], [1, 3]]))


def connector(regions: int, id_site: int, target_site: int) -> Bigraph:
    """Placing that routes a two-region world into two given context sites.

    It has ``regions`` regions and ``regions + 2`` sites; region ``i``
    holds site ``i``, and the last two sites (the world's ID and Physical
    roots) join ``id_site`` and ``target_site`` respectively.
    """
    parents = [region_code(i) for i in range(regions)]
    parents += [region_code(id_site), region_code(target_site)]
    return Bigraph.from_parents([], regions, [], parents, [])


def nest_into_context(context: Bigraph, phi: Bigraph, child: WorldBigraph) -> WorldBigraph:
    """``context . phi . (id || ... || child)``, padding with identities."""
    pad = phi.sites - child.bigraph.regions
    if pad < 0:
        raise ValueError("placing has fewer sites than the child has regions")
    inner = ppar(ppar_all(elementary_id() for _ in range(pad)), child.bigraph)
    return WorldBigraph(nest(context, nest(phi, inner)))


# -- editing ------------------------------------------------------------------------

def add_entity(wb: WorldBigraph, control: Control, ident: str, at: int) -> tuple[WorldBigraph, int]:
    """Place a new entity with a linked ID node under physical node ``at``."""
    b = wb.bigraph
    if not (0 <= at < b.n_nodes and wb.in_physical(at)):
        raise LookupError(f"node {at} is not a physical node")
    v, i = b.n_nodes, b.n_nodes + 1
    controls = list(b.controls) + [control, ID(ident)]
    parents = list(b.place.node_parent) + [at, ID_REGION]
    links = list(b.links) + [Link(None, frozenset({(v, 0), (i, 0)}))]
    out = Bigraph.from_parents(controls, b.regions, parents, b.place.site_parent, links)
    return WorldBigraph(out), v


def add_agent(wb: WorldBigraph, at: SpatialName | str | int, agent_id: str) -> tuple[WorldBigraph, int]:
    if not isinstance(at, int):
        node = resolve(wb, at)
        if node is None:
            raise LookupError(f"no place named {at}")
        at = node
    return add_entity(wb, AGENT, agent_id, at)


def stats(wb: WorldBigraph) -> WorldStats:
    b = wb.bigraph
    counts: dict[str, int] = {}
    for c in b.controls:
        counts[c.name] = counts.get(c.name, 0) + 1
    return WorldStats(
        nodes=b.n_nodes,
        edges=sum(1 for lk in b.links if lk.outer is None),
        outer_names=len(b.outer_names),
        subdivisions=max(counts.get("Boundary", 0) - 1, 0),
        streets=counts.get("Street", 0),
        buildings=counts.get("Building", 0),
        junctions=counts.get("Junction", 0),
    )

