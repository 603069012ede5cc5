"""Shared fixtures: hand-made OSM extracts, small worlds and random inputs."""
from __future__ import annotations

import random
from pathlib import Path

from bigworld.builder import WorldBigraph, add_agent, build
from bigworld.core import Bigraph
from bigworld.osm import BuildingEntry, OsmDocument, OsmNode, OsmWay, RegionExtract, StreetId, extract_region, junctions_of, parse_osm
from bigworld.sparse import SparseBoolMatrix

DATA = Path(__file__).parent / "data"


# -- OSM extracts ----------------------------------------------------------------

def road_network_doc() -> OsmDocument:
    return parse_osm(DATA / "road_network.osm")


def road_network_world(region: str = "West Cambridge", assemble=build) -> WorldBigraph:
    ext = extract_region(road_network_doc(), region)
    return assemble(region, {region: []}, {region: ext})


def region_doc(streets: dict[str, list[list[int]]], buildings: dict[str, str | None], first_way: int = 1) -> OsmDocument:
    """Small OSM document: named streets as lists of node chains, buildings by name."""
    doc = OsmDocument()
    wid = first_way
    for name, chains in streets.items():
        for chain in chains:
            for n in chain:
                doc.nodes.setdefault(n, OsmNode(n, 0.0, 0.0))
            doc.ways[wid] = OsmWay(wid, list(chain), {"highway": "residential", "name": name})
            wid += 1
    for k, (name, street) in enumerate(buildings.items()):
        tags = {"building": "yes", "name": name}
        if street:
            tags["addr:street"] = street
        doc.nodes[10_000_000 + first_way * 1000 + k] = OsmNode(10_000_000 + first_way * 1000 + k, 0.0, 0.0, tags)
    return doc


SHIRE_AGENTS = {
    "frodo": "Bag End.Hill Road.Hobbiton.Shire",
    "sam": "Bag End.Hill Road.Hobbiton.Shire",
    "rosie": "Green Dragon.Bywater Road.Hobbiton.Shire",
    "merry": "Brandy Hall.Buck Lane.Buckland.Shire",
    "pippin": "Buck Lane.Buckland.Shire",
}


def shire_world(agents: dict[str, str] | None = None, assemble=build) -> WorldBigraph:
    """Four levels: Shire > 2 boundaries > 2 streets each > 3 buildings each, plus agents."""
    hobbiton = region_doc(
        {"Hill Road": [[1, 2, 3]], "Bywater Road": [[3, 4, 5]]},
        {
            "Bag End": "Hill Road",
            "Bagshot Row": "Hill Road",
            "The Mill": "Hill Road",
            "Green Dragon": "Bywater Road",
            "Bywater Pool": "Bywater Road",
            "Old Grange": "Bywater Road",
        },
        first_way=1,
    )
    buckland = region_doc(
        {"Buck Lane": [[11, 12, 13]], "Hay Gate": [[13, 14]]},
        {
            "Brandy Hall": "Buck Lane",
            "Crickhollow": "Buck Lane",
            "Ferry House": "Buck Lane",
            "North Gate": "Hay Gate",
            "Gate Lodge": "Hay Gate",
            "Hedge House": "Hay Gate",
        },
        first_way=10,
    )
    extracts = {
        "Hobbiton": extract_region(hobbiton, "Hobbiton"),
        "Buckland": extract_region(buckland, "Buckland"),
        "Shire": RegionExtract("Shire"),
    }
    wb = assemble("Shire", {"Shire": ["Buckland", "Hobbiton"]}, extracts)
    for agent, place in (SHIRE_AGENTS if agents is None else agents).items():
        wb, _ = add_agent(wb, place, agent)
    return wb


def toy_county(region: str, crossing_node: int, first_way: int, buildings: int = 2) -> RegionExtract:
    """One street ending at a boundary-crossing node, with a few buildings."""
    doc = region_doc(
        {f"{region} High Street": [[first_way * 100 + 1, first_way * 100 + 2, crossing_node]]},
        {f"{region} House {k}": f"{region} High Street" for k in range(buildings)},
        first_way=first_way,
    )
    return extract_region(doc, region, crossing=[crossing_node])


# -- synthetic worlds -------------------------------------------------------------

def synthetic_extracts(
    n_regions: int, streets_per_region: int, buildings_per_street: int, seed: int = 0
) -> tuple[dict[str, list[str]], dict[str, RegionExtract]]:
    """A two-level hierarchy of regions with chained streets and housed buildings.

    Consecutive streets of a region share one OSM node, so each region has
    ``streets_per_region - 1`` junction links.
    """
    rng = random.Random(seed)
    hierarchy: dict[str, list[str]] = {"Land": [f"R{r}" for r in range(n_regions)]}
    extracts: dict[str, RegionExtract] = {"Land": RegionExtract("Land")}
    node = 1
    way = 1
    for r in range(n_regions):
        name = f"R{r}"
        ext = RegionExtract(name)
        prev_end = None
        for s in range(streets_per_region):
            sid = StreetId.of_name(f"{name} Street {s}")
            start = prev_end if prev_end is not None else node
            if prev_end is None:
                node += 1
            length = rng.randint(2, 4)
            refs = (start,) + tuple(range(node, node + length - 1))
            node += length - 1
            prev_end = refs[-1]
            ext.streets[sid] = {way}
            ext.way_nodes[way] = refs
            way += 1
            for b in range(buildings_per_street):
                ext.buildings.append(BuildingEntry(f"{name} S{s} B{b}", sid.value, ("node", 10 * way + b)))
        ext.junctions = junctions_of(ext.streets, ext.way_nodes)
        extracts[name] = ext
    return hierarchy, extracts


def synthetic_world(target_nodes: int, seed: int = 0) -> WorldBigraph:
    """A world with roughly ``target_nodes`` nodes (within a few percent)."""
    streets, buildings = 20, 10
    per_region = 2 * (1 + streets + streets * buildings) + 2 * (streets - 1)
    n_regions = max(1, round((target_nodes - 2) / per_region))
    hierarchy, extracts = synthetic_extracts(n_regions, streets, buildings, seed)
    return build("Land", hierarchy, extracts)


# -- random inputs -------------------------------------------------------------------

def random_forest(n: int, rng: random.Random, max_depth: int | None = None) -> list[int]:
    """Parent array of a random forest; -1 marks a root."""
    parent = []
    depth = []
    for v in range(n):
        if v == 0 or rng.random() < 0.1:
            parent.append(-1)
            depth.append(0)
            continue
        for _ in range(20):
            p = rng.randrange(v)
            if max_depth is None or depth[p] < max_depth:
                break
        else:
            p = -1
        parent.append(p)
        depth.append(0 if p < 0 else depth[p] + 1)
    return parent


def forest_matrix(parent: list[int]) -> SparseBoolMatrix:
    n = len(parent)
    return SparseBoolMatrix.from_pairs(n, n, [(p, v) for v, p in enumerate(parent) if p >= 0])


def random_dag(n: int, rng: random.Random, density: float) -> SparseBoolMatrix:
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return SparseBoolMatrix.from_pairs(n, n, pairs)


def floyd_warshall(m: SparseBoolMatrix) -> set[tuple[int, int]]:
    """Dense Boolean Floyd-Warshall closure (paths of length at least one)."""
    n = m.shape[0]
    reach = [[False] * n for _ in range(n)]
    for i, j in m.entries():
        reach[i][j] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return {(i, j) for i in range(n) for j in range(n) if reach[i][j]}


def agents_below(b: Bigraph, node: int) -> int:
    """Brute-force count of Agent nodes strictly inside ``node`` by walking parents."""
    count = 0
    for v in range(b.n_nodes):
        if b.controls[v].name != "Agent":
            continue
        p = b.place.node_parent[v]
        while p >= 0:
            if p == node:
                count += 1
                break
            p = b.place.node_parent[p]
    return count


# -- brute-force matching ---------------------------------------------------------

def _place_children(b: Bigraph, code: int) -> tuple[set[int], set[int]]:
    nodes = {v for v, p in enumerate(b.place.node_parent) if p == code}
    sites = {s for s, p in enumerate(b.place.site_parent) if p == code}
    return nodes, sites


def _ancestors(b: Bigraph, u: int) -> set[int]:
    out = set()
    p = b.place.node_parent[u]
    while p >= 0:
        out.add(p)
        p = b.place.node_parent[p]
    return out


def brute_force_matches(target: Bigraph, redex: Bigraph) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every (node map, root locations) pair under which ``redex`` occurs in ``target``.

    Written straight from the definition by trying all injective node maps
    and all root locations; only usable on tiny inputs.  Redex outer names
    are assumed to have at least one port.
    """
    from itertools import permutations, product

    n, m = redex.n_nodes, target.n_nodes
    places = [-(r + 1) for r in range(target.regions)] + list(range(m))
    port_link = {p: k for k, lk in enumerate(target.links) for p in lk.ports}
    found = set()
    for eta in permutations(range(m), n):
        if any(redex.controls[v].key != target.controls[eta[v]].key for v in range(n)):
            continue
        image = set(eta)
        ok = True
        root_of: dict[int, int] = {}
        for v in range(n):
            p = redex.place.node_parent[v]
            tp = target.place.node_parent[eta[v]]
            if p >= 0:
                ok = tp == eta[p]
            else:
                r = -p - 1
                ok = root_of.setdefault(r, tp) == tp
            if not ok:
                break
            if not any(s for s, q in enumerate(redex.place.site_parent) if q == v) and not redex.place.ns.chl(v):
                kids, sites = _place_children(target, eta[v])
                want = {eta[c] for c in range(n) if redex.place.node_parent[c] == v}
                ok = kids == want and not sites
                if not ok:
                    break
        if not ok:
            continue
        for lk in redex.links:
            got = {port_link[(eta[v], i)] for v, i in lk.ports}
            if len(got) != 1:
                ok = False
                break
            tl = target.links[got.pop()]
            if lk.outer is None and (tl.outer is not None or tl.ports != {(eta[v], i) for v, i in lk.ports}):
                ok = False
                break
        if not ok:
            continue
        free = [r for r in range(redex.regions) if r not in root_of]
        for extra in product(places, repeat=len(free)):
            rho = dict(root_of)
            rho.update(zip(free, extra))
            locs = tuple(rho[r] for r in range(redex.regions))
            context_ok = all(loc < 0 or (loc not in image and not (_ancestors(target, loc) & image)) for loc in locs)
            if context_ok:
                found.add((tuple(eta), locs))
    return found


def random_instance(rng: random.Random, max_nodes: int = 8) -> tuple[Bigraph, Bigraph]:
    """A ground target of at most ``max_nodes`` nodes and a small redex over the same controls."""
    from bigworld.core import Control, Link, region_code

    controls = [Control("A"), Control("B"), Control("P", arity=2)]

    def random_bigraph(n: int, regions: int, sites: int, names: list[str], closed_bias: float) -> Bigraph:
        ctrl = [rng.choice(controls[:2] if rng.random() < 0.8 else controls) for _ in range(n)]
        parent = []
        for v in range(n):
            if v == 0 or rng.random() < 0.35:
                parent.append(region_code(rng.randrange(regions)))
            else:
                parent.append(rng.randrange(v))
        site_parent = [rng.choice([region_code(rng.randrange(regions))] + list(range(n))) for _ in range(sites)]
        ports = [(v, i) for v in range(n) for i in range(ctrl[v].arity)]
        rng.shuffle(ports)
        groups: dict[str, set] = {}
        closed: list[set] = []
        for p in ports:
            if rng.random() < closed_bias:
                if closed and rng.random() < 0.5:
                    rng.choice(closed).add(p)
                else:
                    closed.append({p})
            else:
                groups.setdefault(rng.choice(names), set()).add(p)
        links = [Link(x, frozenset(ps)) for x, ps in sorted(groups.items())]
        links += [Link(None, frozenset(ps)) for ps in closed]
        # Build children by order to keep the forest acyclic (parents precede children).
        return Bigraph.from_parents(ctrl, regions, parent, site_parent, links)

    target = random_bigraph(rng.randint(1, max_nodes), rng.randint(1, 2), 0, ["x", "y", "z"], 0.4)
    redex = random_bigraph(rng.randint(1, 3), rng.randint(1, 2), rng.randint(0, 2), ["x", "y"], 0.15)
    return target, redex


# -- world context -----------------------------------------------------------------

def world_context() -> Bigraph:
    """Context holding World > UK > England > {Essex, Cambridgeshire and Peterborough}.

    Two regions and six sites: site 0 sits in the ID region, sites 1-5
    inside World, UK, England, Essex and Cambridgeshire and Peterborough.
    The outer name ``node 215742`` is idle.
    """
    from bigworld.core import Link, region_code
    from bigworld.vocab import BOUNDARY, ID

    names = ["World", "UK", "England", "Essex", "Cambridgeshire and Peterborough"]
    controls = [ID(n) for n in names] + [BOUNDARY] * 5
    world, uk, england, essex, cap = range(5, 10)
    node_parent = [region_code(0)] * 5 + [region_code(1), world, uk, england, england]
    site_parent = [region_code(0), world, uk, england, essex, cap]
    links = [Link(None, frozenset({(i, 0), (i + 5, 0)})) for i in range(5)]
    links.append(Link("node 215742", frozenset()))
    return Bigraph.from_parents(controls, 2, node_parent, site_parent, links)
