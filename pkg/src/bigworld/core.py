"""Bigraph values and the composition algebra.

A bigraph couples a place graph (a forest of regions, nodes and sites)
with a link graph (hyperedges over node ports, some carrying outer names).
Places are addressed by a single integer *place code*: a non-negative code
is a node id, and a negative code ``-(r + 1)`` stands for region ``r``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx

from .sparse import SparseBoolMatrix, trans

__all__ = [
    "ArityError",
    "CompositionError",
    "ValidationError",
    "Control",
    "Link",
    "PlaceGraph",
    "Bigraph",
    "region_code",
    "code_region",
    "ion",
    "atom",
    "elementary_id",
    "identity",
    "one",
    "epsilon",
    "join",
    "merge",
    "symmetry",
    "placing",
    "nest",
    "ppar",
    "ppar_all",
    "merge_prod",
    "merge_all",
    "close",
    "close_all",
    "iso_equal",
]


class ArityError(ValueError):
    """Port count does not match a control's arity."""


class CompositionError(ValueError):
    """Interfaces of the operands do not fit together."""


class ValidationError(ValueError):
    """A bigraph violates a structural invariant."""


def region_code(r: int) -> int:
    return -(r + 1)


def code_region(code: int) -> int:
    return -code - 1


@dataclass(frozen=True)
class Control:
    """Node type: name, port count and an optional string parameter."""

    name: str
    arity: int = 1
    parameter: str | None = None

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise ArityError(f"negative arity for {self.name}")

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.name, self.arity, "" if self.parameter is None else "\x00" + self.parameter)

    def __str__(self) -> str:
        if self.parameter is None:
            return self.name
        return f"{self.name}({self.parameter})"


@dataclass(frozen=True)
class Link:
    """A hyperedge; ``outer`` is ``None`` for a closed link."""

    outer: str | None
    ports: frozenset[tuple[int, int]]

    @property
    def closed(self) -> bool:
        return self.outer is None


class PlaceGraph:
    """Forest structure as four sparse matrices (rn, rs, nn, ns).

    Parent lookups are kept alongside the matrices since every node and
    site has exactly one parent.
    """

    __slots__ = ("regions", "sites", "nodes", "rn", "rs", "nn", "ns", "node_parent", "site_parent", "_closure")

    def __init__(self, regions: int, sites: int, node_parent: Sequence[int], site_parent: Sequence[int]) -> None:
        n = len(node_parent)
        if len(site_parent) != sites:
            raise ValidationError(f"{sites} sites but {len(site_parent)} site parents")
        self.regions = regions
        self.sites = sites
        self.nodes = n
        self.node_parent = tuple(node_parent)
        self.site_parent = tuple(site_parent)
        self.rn = SparseBoolMatrix(regions, n)
        self.rs = SparseBoolMatrix(regions, sites)
        self.nn = SparseBoolMatrix(n, n)
        self.ns = SparseBoolMatrix(n, sites)
        for j, p in enumerate(self.node_parent):
            if p >= 0:
                if p >= n:
                    raise ValidationError(f"node {j} has parent {p}, outside {n} nodes")
                self.nn.add(p, j)
            else:
                r = code_region(p)
                if r >= regions:
                    raise ValidationError(f"node {j} has parent region {r}, outside {regions} regions")
                self.rn.add(r, j)
        for s, p in enumerate(self.site_parent):
            if p >= 0:
                if p >= n:
                    raise ValidationError(f"site {s} has parent {p}, outside {n} nodes")
                self.ns.add(p, s)
            else:
                r = code_region(p)
                if r >= regions:
                    raise ValidationError(f"site {s} has parent region {r}, outside {regions} regions")
                self.rs.add(r, s)
        self._closure: SparseBoolMatrix | None = None
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        parent = self.node_parent
        state = [0] * self.nodes  # 0 unseen, 1 on path, 2 done
        for start in range(self.nodes):
            path = []
            v = start
            while v >= 0 and state[v] == 0:
                state[v] = 1
                path.append(v)
                v = parent[v]
            if v >= 0 and state[v] == 1:
                raise ValidationError(f"place graph cycle through node {v}")
            for u in path:
                state[u] = 2

    def node_children(self, code: int) -> list[int]:
        if code >= 0:
            return sorted(self.nn.r_major.get(code, ()))
        return sorted(self.rn.r_major.get(code_region(code), ()))

    def site_children(self, code: int) -> list[int]:
        if code >= 0:
            return sorted(self.ns.r_major.get(code, ()))
        return sorted(self.rs.r_major.get(code_region(code), ()))

    def child_count(self, code: int) -> int:
        if code >= 0:
            return len(self.nn.r_major.get(code, ())) + len(self.ns.r_major.get(code, ()))
        r = code_region(code)
        return len(self.rn.r_major.get(r, ())) + len(self.rs.r_major.get(r, ()))

    def closure(self) -> SparseBoolMatrix:
        """Transitive closure of the node-to-node relation, computed once."""
        if self._closure is None:
            self._closure = trans(self.nn)
        return self._closure

    def descendants(self, v: int) -> list[int]:
        return sorted(self.closure().r_major.get(v, ()))

    def depth(self) -> int:
        """Longest root-to-node chain, counted in nodes."""
        memo: dict[int, int] = {}
        best = 0
        for v in range(self.nodes):
            chain = []
            u = v
            while u >= 0 and u not in memo:
                chain.append(u)
                u = self.node_parent[u]
            d = memo[u] if u >= 0 else 0
            for w in reversed(chain):
                d += 1
                memo[w] = d
            best = max(best, memo[v])
        return best

    def entry_count(self) -> int:
        return len(self.rn) + len(self.rs) + len(self.nn) + len(self.ns)


class Bigraph:
    """Immutable bigraph: node controls, place graph and link graph.

    Node ``i`` has control ``controls[i]``.  Links are ordered; their order
    carries no meaning beyond deterministic output.
    """

    __slots__ = ("controls", "place", "links", "_port_link", "_by_name", "_memo")

    def __init__(self, controls: Sequence[Control], place: PlaceGraph, links: Iterable[Link]) -> None:
        self.controls = tuple(controls)
        self.place = place
        self.links = tuple(links)
        self._port_link: dict[tuple[int, int], int] | None = None
        self._by_name: dict[str, int] | None = None
        self._memo: dict = {}
        if place.nodes != len(self.controls):
            raise ValidationError(f"{place.nodes} place nodes but {len(self.controls)} controls")
        self._check_links()

    @classmethod
    def from_parents(
        cls,
        controls: Sequence[Control],
        regions: int,
        node_parent: Sequence[int],
        site_parent: Sequence[int],
        links: Iterable[Link],
    ) -> Bigraph:
        return cls(controls, PlaceGraph(regions, len(site_parent), node_parent, site_parent), links)

    def _check_links(self) -> None:
        seen: dict[tuple[int, int], int] = {}
        names: dict[str, int] = {}
        n = len(self.controls)
        for k, link in enumerate(self.links):
            if link.outer is None and not link.ports:
                raise ValidationError("closed link without ports")
            if link.outer is not None:
                if link.outer in names:
                    raise ValidationError(f"outer name {link.outer!r} used twice")
                names[link.outer] = k
            for v, p in link.ports:
                if not 0 <= v < n:
                    raise ValidationError(f"link port on unknown node {v}")
                if not 0 <= p < self.controls[v].arity:
                    raise ValidationError(f"port {p} outside arity of node {v} ({self.controls[v]})")
                if (v, p) in seen:
                    raise ValidationError(f"port {(v, p)} in two links")
                seen[(v, p)] = k
        for v, c in enumerate(self.controls):
            for p in range(c.arity):
                if (v, p) not in seen:
                    raise ArityError(f"port {p} of node {v} ({c}) is not linked")
        self._port_link = seen
        self._by_name = names

    # -- interface -----------------------------------------------------
    @property
    def regions(self) -> int:
        return self.place.regions

    @property
    def sites(self) -> int:
        return self.place.sites

    @property
    def n_nodes(self) -> int:
        return self.place.nodes

    @property
    def outer_names(self) -> frozenset[str]:
        assert self._by_name is not None
        return frozenset(self._by_name)

    def link_of(self, node: int, port: int = 0) -> int:
        """Index into ``links`` of the link holding a port."""
        assert self._port_link is not None
        return self._port_link[(node, port)]

    def link_named(self, name: str) -> int | None:
        assert self._by_name is not None
        return self._by_name.get(name)

    def by_control(self) -> dict[tuple, list[int]]:
        """Node ids grouped by control key, ascending."""
        index = self._memo.get("by_control")
        if index is None:
            index = {}
            for v, c in enumerate(self.controls):
                index.setdefault(c.key, []).append(v)
            self._memo["by_control"] = index
        return index

    def parent(self, node: int) -> int:
        return self.place.node_parent[node]

    def closed_links(self) -> list[Link]:
        return [lk for lk in self.links if lk.outer is None]

    def count(self, name: str) -> int:
        return sum(1 for c in self.controls if c.name == name)

    def structurally_equal(self, other: Bigraph) -> bool:
        """Equality with node ids taken literally (no relabelling)."""
        return (
            self.controls == other.controls
            and self.place.regions == other.place.regions
            and self.place.node_parent == other.place.node_parent
            and self.place.site_parent == other.place.site_parent
            and set(self.links) == set(other.links)
        )

    def __repr__(self) -> str:
        return (
            f"Bigraph(regions={self.regions}, sites={self.sites}, nodes={self.n_nodes}, "
            f"links={len(self.links)}, outer={sorted(self.outer_names)})"
        )


# -- elementary bigraphs ------------------------------------------------

def ion(control: Control, names: Sequence[str]) -> Bigraph:
    """One region holding one node that holds one site."""
    if len(names) != control.arity:
        raise ArityError(f"{control} has arity {control.arity}, got {len(names)} names")
    if len(set(names)) != len(names):
        raise ArityError(f"ion names must be distinct: {list(names)}")
    links = [Link(x, frozenset({(0, i)})) for i, x in enumerate(names)]
    return Bigraph.from_parents([control], 1, [region_code(0)], [0], links)


def atom(control: Control, names: Sequence[str]) -> Bigraph:
    """An ion with nothing inside, i.e. ``K.1``."""
    return nest(ion(control, names), one())


def placing(perm: Sequence[int]) -> Bigraph:
    """``n`` regions and ``n`` sites with region ``i`` holding site ``perm[i]``."""
    perm = list(perm)
    if sorted(perm) != list(range(len(perm))):
        raise ValidationError(f"not a permutation: {perm}")
    site_parent = [0] * len(perm)
    for i, s in enumerate(perm):
        site_parent[s] = region_code(i)
    return Bigraph.from_parents([], len(perm), [], site_parent, [])


def merge(n: int) -> Bigraph:
    """One region holding ``n`` sites; ``merge(2)`` is join, ``merge(0)`` is 1."""
    return Bigraph.from_parents([], 1, [], [region_code(0)] * n, [])


def elementary_id() -> Bigraph:
    return merge(1)


def identity(n: int) -> Bigraph:
    return placing(range(n))


def one() -> Bigraph:
    return merge(0)


def epsilon() -> Bigraph:
    """The empty bigraph: no regions, no sites."""
    return Bigraph.from_parents([], 0, [], [], [])


def join() -> Bigraph:
    return merge(2)


def symmetry() -> Bigraph:
    return placing([1, 0])


# -- operations ---------------------------------------------------------

def _merge_links(first: Iterable[Link], second: Iterable[Link]) -> list[Link]:
    out = list(first)
    index = {lk.outer: k for k, lk in enumerate(out) if lk.outer is not None}
    for lk in second:
        k = index.get(lk.outer) if lk.outer is not None else None
        if k is None:
            if lk.outer is not None:
                index[lk.outer] = len(out)
            out.append(lk)
        else:
            out[k] = Link(lk.outer, out[k].ports | lk.ports)
    return out


def _shift_links(links: Iterable[Link], offset: int) -> list[Link]:
    if offset == 0:
        return list(links)
    return [Link(lk.outer, frozenset((v + offset, p) for v, p in lk.ports)) for lk in links]


def ppar(g: Bigraph, f: Bigraph) -> Bigraph:
    """Parallel product; links sharing an outer name are fused."""
    off = g.n_nodes
    roff = g.regions

    def shift(code: int) -> int:
        return code + off if code >= 0 else region_code(code_region(code) + roff)

    node_parent = list(g.place.node_parent) + [shift(p) for p in f.place.node_parent]
    site_parent = list(g.place.site_parent) + [shift(p) for p in f.place.site_parent]
    links = _merge_links(g.links, _shift_links(f.links, off))
    return Bigraph.from_parents(g.controls + f.controls, g.regions + f.regions, node_parent, site_parent, links)


def ppar_all(items: Iterable[Bigraph]) -> Bigraph:
    out = epsilon()
    for b in items:
        out = ppar(out, b)
    return out


def nest(g: Bigraph, f: Bigraph) -> Bigraph:
    """Composition ``g.f``: root ``i`` of ``f`` is plugged into site ``i`` of ``g``."""
    if f.regions != g.sites:
        raise CompositionError(f"cannot nest {f.regions} regions into {g.sites} sites")
    off = g.n_nodes
    gsp = g.place.site_parent

    def route(code: int) -> int:
        return code + off if code >= 0 else gsp[code_region(code)]

    node_parent = list(g.place.node_parent) + [route(p) for p in f.place.node_parent]
    site_parent = [route(p) for p in f.place.site_parent]
    links = _merge_links(g.links, _shift_links(f.links, off))
    return Bigraph.from_parents(g.controls + f.controls, g.regions, node_parent, site_parent, links)


def merge_prod(g: Bigraph, f: Bigraph) -> Bigraph:
    """Merge product ``g | f``: every region of both operands in one region."""
    return nest(merge(g.regions + f.regions), ppar(g, f))


def merge_all(items: Iterable[Bigraph]) -> Bigraph:
    items = list(items)
    body = ppar_all(items)
    return nest(merge(body.regions), body)


def close(name: str, b: Bigraph) -> Bigraph:
    """Remove outer name ``name``; closing an absent name changes nothing."""
    k = b.link_named(name)
    if k is None:
        return b
    links = list(b.links)
    lk = links[k]
    if lk.ports:
        links[k] = Link(None, lk.ports)
    else:
        del links[k]
    return Bigraph(b.controls, b.place, links)


def close_all(names: Iterable[str], b: Bigraph) -> Bigraph:
    """Close several names in one pass."""
    names = set(names)
    if not names:
        return b
    links = []
    for lk in b.links:
        if lk.outer in names:
            if lk.ports:
                links.append(Link(None, lk.ports))
        else:
            links.append(lk)
    return Bigraph(b.controls, b.place, links)


# -- isomorphism --------------------------------------------------------

def _labelled(b: Bigraph) -> nx.DiGraph:
    g = nx.DiGraph()
    for r in range(b.regions):
        g.add_node(("r", r), lab=("region", r))
    for s in range(b.sites):
        g.add_node(("s", s), lab=("site", s))
    for v, c in enumerate(b.controls):
        g.add_node(("n", v), lab=("node",) + c.key)

    def key(code: int) -> tuple:
        return ("n", code) if code >= 0 else ("r", code_region(code))

    for v, p in enumerate(b.place.node_parent):
        g.add_edge(key(p), ("n", v))
    for s, p in enumerate(b.place.site_parent):
        g.add_edge(key(p), ("s", s))
    for k, lk in enumerate(b.links):
        g.add_node(("l", k), lab=("link", "" if lk.outer is None else "\x00" + lk.outer))
        for v, p in lk.ports:
            if b.controls[v].arity == 1:
                g.add_edge(("n", v), ("l", k))
            else:
                g.add_node(("p", v, p), lab=("port", p))
                g.add_edge(("n", v), ("p", v, p))
                g.add_edge(("p", v, p), ("l", k))
    return g


def _refine(graphs: list[nx.DiGraph]) -> None:
    """Colour refinement run jointly so colours are comparable across graphs."""
    palette: dict = {}
    for g in graphs:
        for v, lab in g.nodes(data="lab"):
            g.nodes[v]["c"] = palette.setdefault(lab, len(palette))
    classes = len(palette)
    while True:
        palette = {}
        fresh = []
        for g in graphs:
            col = {}
            for v in g.nodes:
                sig = (
                    g.nodes[v]["c"],
                    tuple(sorted(g.nodes[u]["c"] for u in g.predecessors(v))),
                    tuple(sorted(g.nodes[u]["c"] for u in g.successors(v))),
                )
                col[v] = palette.setdefault(sig, len(palette))
            fresh.append(col)
        for g, col in zip(graphs, fresh):
            nx.set_node_attributes(g, col, "c")
        if len(palette) == classes:
            return
        classes = len(palette)


def iso_equal(a: Bigraph, b: Bigraph) -> bool:
    """Isomorphism up to node identity; regions, sites and names are fixed."""
    if (a.regions, a.sites, a.n_nodes, len(a.links)) != (b.regions, b.sites, b.n_nodes, len(b.links)):
        return False
    if a.outer_names != b.outer_names:
        return False
    if Counter(c.key for c in a.controls) != Counter(c.key for c in b.controls):
        return False
    if a.structurally_equal(b):
        return True
    ga, gb = _labelled(a), _labelled(b)
    _refine([ga, gb])
    if Counter(c for _, c in ga.nodes(data="c")) != Counter(c for _, c in gb.nodes(data="c")):
        return False
    return nx.vf2pp_is_isomorphic(ga, gb, node_label="c")
