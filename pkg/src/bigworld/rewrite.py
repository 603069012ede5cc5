"""Reaction rules: occurrence search, application and successor sets.

A match records where each redex node, region, site and link lands in the
target.  Parameter content is described by *top places*: non-negative
entries are target node ids, negative entries ``-(s + 1)`` are target
site ``s``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .core import Bigraph, Control, Link, code_region, iso_equal

__all__ = [
    "ApplicationError",
    "RuleError",
    "NegCondition",
    "ReactionRule",
    "Match",
    "occurrences",
    "iter_occurrences",
    "check_conditions",
    "apply",
    "rewrite_first",
    "step",
]


class RuleError(ValueError):
    """A reaction rule is malformed."""


class ApplicationError(ValueError):
    """A match does not describe an occurrence of the rule's redex."""


@dataclass(frozen=True)
class NegCondition:
    """Pattern that must not occur inside the parameter of a match."""

    pattern: Bigraph


@dataclass(frozen=True)
class ReactionRule:
    name: str
    redex: Bigraph
    reactum: Bigraph
    inst_map: tuple[int, ...] | None = None
    conditions: tuple[NegCondition, ...] = field(default=())

    def __post_init__(self) -> None:
        lhs, rhs = self.redex, self.reactum
        if lhs.outer_names != rhs.outer_names:
            raise RuleError(
                f"{self.name}: outer names differ, {sorted(lhs.outer_names)} vs {sorted(rhs.outer_names)}"
            )
        if lhs.regions != rhs.regions:
            raise RuleError(f"{self.name}: redex has {lhs.regions} regions, reactum {rhs.regions}")
        inst = self.inst_map
        if inst is None:
            if lhs.sites != rhs.sites:
                raise RuleError(f"{self.name}: site counts differ and no instantiation map given")
            inst = tuple(range(rhs.sites))
        inst = tuple(inst)
        if len(inst) != rhs.sites or any(not 0 <= s < lhs.sites for s in inst):
            raise RuleError(f"{self.name}: bad instantiation map {inst}")
        object.__setattr__(self, "inst_map", inst)
        object.__setattr__(self, "conditions", tuple(self.conditions))


@dataclass(frozen=True)
class Match:
    nodes: tuple[int, ...]
    roots: tuple[int, ...]
    sites: tuple[tuple[int, ...], ...]
    links: tuple[int | None, ...]


# -- matching -------------------------------------------------------------

class _Pattern:
    """Per-pattern lookup tables used by the search."""

    def __init__(self, p: Bigraph) -> None:
        self.b = p
        n = p.n_nodes
        self.n = n
        self.keys = [c.key for c in p.controls]
        self.parent = list(p.place.node_parent)
        self.children: list[list[int]] = [[] for _ in range(n)]
        self.has_site = [False] * n
        self.root_children: list[list[int]] = [[] for _ in range(p.regions)]
        self.root_sites: list[list[int]] = [[] for _ in range(p.regions)]
        self.node_sites: list[list[int]] = [[] for _ in range(n)]
        for v, q in enumerate(self.parent):
            if q >= 0:
                self.children[q].append(v)
            else:
                self.root_children[code_region(q)].append(v)
        for s, q in enumerate(p.place.site_parent):
            if q >= 0:
                self.has_site[q] = True
                self.node_sites[q].append(s)
            else:
                self.root_sites[code_region(q)].append(s)
        self.port_link = [[p.link_of(v, i) for i in range(p.controls[v].arity)] for v in range(n)]
        self.link_closed = [lk.outer is None for lk in p.links]
        self.link_size = [len(lk.ports) for lk in p.links]


class _Search:
    def __init__(self, pattern: Bigraph, target: Bigraph, anchors: dict[int, int] | None = None) -> None:
        self.p = _Pattern(pattern)
        self.t = target
        self.anchors = anchors
        self.tparent = target.place.node_parent
        self.by_control = target.by_control()
        self.eta = [-1] * self.p.n
        self.used: set[int] = set()
        self.rho: list[int | None] = [None] * pattern.regions
        self.rho_count = [0] * pattern.regions
        self.lmap: dict[int, int] = {}
        self.lmap_count: dict[int, int] = {}
        self.closed_claim: dict[int, int] = {}
        self.open_claim: Counter[int] = Counter()
        if anchors is not None:
            self.site_tops: dict[int, list[int]] = {}
            for t, s in sorted(anchors.items()):
                self.site_tops.setdefault(s, []).append(t)
        self.order = self._order()

    def _order(self) -> list[int]:
        p = self.p
        freq = {v: len(self.by_control.get(p.keys[v], ())) for v in range(p.n)}
        remaining = set(range(p.n))
        order: list[int] = []
        placed: set[int] = set()
        while remaining:
            adjacent = []
            for v in remaining:
                q = p.parent[v]
                near = (q >= 0 and q in placed) or any(c in placed for c in p.children[v])
                if not near and q < 0:
                    near = any(u in placed for u in p.root_children[code_region(q)])
                if not near:
                    near = any(
                        u in placed for lk in p.port_link[v] for (u, _) in p.b.links[lk].ports
                    )
                if near:
                    adjacent.append(v)
            pool = adjacent or list(remaining)
            v = min(pool, key=lambda u: (freq[u], u))
            order.append(v)
            placed.add(v)
            remaining.discard(v)
        return order

    # candidate generation -------------------------------------------------
    def _candidates(self, v: int) -> list[int]:
        p, t = self.p, self.t
        key = p.keys[v]
        q = p.parent[v]
        if q >= 0 and self.eta[q] >= 0:
            pool = t.place.node_children(self.eta[q])
        else:
            pool = None
            for c in p.children[v]:
                if self.eta[c] >= 0:
                    tp = self.tparent[self.eta[c]]
                    pool = [tp] if tp >= 0 else []
                    break
            if pool is None and q < 0 and self.rho[code_region(q)] is not None:
                loc = self.rho[code_region(q)]
                if self.anchors is not None:
                    pool = self.site_tops.get(loc, [])
                else:
                    pool = t.place.node_children(loc)
            if pool is None:
                for i, lk in enumerate(p.port_link[v]):
                    tl = self.lmap.get(lk)
                    if tl is not None:
                        pool = sorted({u for (u, j) in t.links[tl].ports if j == i})
                        break
            if pool is None:
                if q < 0 and self.anchors is not None:
                    pool = [u for u in self.site_tops_all() if t.controls[u].key == key]
                else:
                    pool = self.by_control.get(key, [])
        return [u for u in pool if u not in self.used and t.controls[u].key == key]

    def site_tops_all(self) -> list[int]:
        return sorted(self.anchors) if self.anchors else []

    # assignment -------------------------------------------------------------
    def _try(self, v: int, u: int) -> list | None:
        p, t = self.p, self.t
        q = p.parent[v]
        tparent = self.tparent[u]
        undo: list = []
        if q >= 0:
            if self.eta[q] >= 0 and tparent != self.eta[q]:
                return None
        else:
            r = code_region(q)
            if self.anchors is not None:
                loc = self.anchors.get(u)
                if loc is None:
                    return None
            else:
                loc = tparent
            if self.rho[r] is not None and self.rho[r] != loc:
                return None
        for c in p.children[v]:
            if self.eta[c] >= 0 and self.tparent[self.eta[c]] != u:
                return None
        need = len(p.children[v])
        have = t.place.child_count(u)
        if have < need or (not p.has_site[v] and have != need):
            return None
        for i, lk in enumerate(p.port_link[v]):
            tl = t.link_of(u, i)
            known = self.lmap.get(lk)
            if known is not None:
                if known != tl:
                    self._undo(undo)
                    return None
                self.lmap_count[lk] += 1
                undo.append(("lk", lk, tl))
                continue
            if p.link_closed[lk]:
                tlink = t.links[tl]
                if (
                    tlink.outer is not None
                    or len(tlink.ports) != p.link_size[lk]
                    or tl in self.closed_claim
                    or self.open_claim[tl]
                ):
                    self._undo(undo)
                    return None
                self.closed_claim[tl] = lk
            else:
                if tl in self.closed_claim:
                    self._undo(undo)
                    return None
                self.open_claim[tl] += 1
            self.lmap[lk] = tl
            self.lmap_count[lk] = 1
            undo.append(("lk", lk, tl))
        if q < 0:
            r = code_region(q)
            if self.rho[r] is None:
                self.rho[r] = loc
            self.rho_count[r] += 1
            undo.append(("rho", r))
        self.eta[v] = u
        self.used.add(u)
        undo.append(("node", v, u))
        return undo

    def _undo(self, undo: list) -> None:
        for entry in reversed(undo):
            if entry[0] == "lk":
                _, lk, tl = entry
                self.lmap_count[lk] -= 1
                if self.lmap_count[lk] == 0:
                    del self.lmap_count[lk]
                    del self.lmap[lk]
                    if self.p.link_closed[lk]:
                        del self.closed_claim[tl]
                    else:
                        self.open_claim[tl] -= 1
            elif entry[0] == "rho":
                r = entry[1]
                self.rho_count[r] -= 1
                if self.rho_count[r] == 0:
                    self.rho[r] = None
            else:
                _, v, u = entry
                self.eta[v] = -1
                self.used.discard(u)
        undo.clear()

    # driver -------------------------------------------------------------
    def run(self) -> Iterator[Match]:
        yield from self._extend(0)

    def _extend(self, depth: int) -> Iterator[Match]:
        if depth == len(self.order):
            yield from self._finish()
            return
        v = self.order[depth]
        for u in self._candidates(v):
            undo = self._try(v, u)
            if undo is None:
                continue
            yield from self._extend(depth + 1)
            self._undo(undo)

    def _finish(self) -> Iterator[Match]:
        p = self.p
        empty = [r for r in range(len(self.rho)) if self.rho[r] is None]
        if not empty:
            m = self._close_match(list(self.rho))
            if m is not None:
                yield m
            return
        if self.anchors is not None:
            spots: list[int] = sorted(set(self.anchors.values()))
        else:
            spots = [-(r + 1) for r in range(self.t.regions)] + [
                u for u in range(self.t.n_nodes) if u not in self.used
            ]
        rho = list(self.rho)

        def fill(i: int) -> Iterator[Match]:
            if i == len(empty):
                m = self._close_match(rho)
                if m is not None:
                    yield m
                return
            for loc in spots:
                rho[empty[i]] = loc
                yield from fill(i + 1)

        _ = p
        yield from fill(0)

    def _close_match(self, rho: list[int]) -> Match | None:
        p, t = self.p, self.t
        links = tuple(self.lmap.get(k) for k in range(len(p.b.links)))
        if self.anchors is not None:
            return Match(tuple(self.eta), tuple(rho), (), links)
        used = self.used
        if len(rho) > 1:
            closure = None
            for loc in rho:
                if loc >= 0:
                    if loc in used:
                        return None
                    if closure is None:
                        closure = t.place.closure()
                    if not used.isdisjoint(closure.c_major.get(loc, ())):
                        return None
        sites: list[tuple[int, ...]] = [()] * p.b.sites
        for v in range(p.n):
            if p.node_sites[v]:
                u = self.eta[v]
                taken = {self.eta[c] for c in p.children[v]}
                rest = [w for w in t.place.node_children(u) if w not in taken]
                rest += [-(s + 1) for s in t.place.site_children(u)]
                sites[p.node_sites[v][0]] = tuple(rest)
        groups: dict[int, list[int]] = {}
        for r, loc in enumerate(rho):
            groups.setdefault(loc, []).append(r)
        for loc, rs in groups.items():
            holders = [r for r in rs if p.root_sites[r]]
            if not holders:
                continue
            taken = {self.eta[c] for r in rs for c in p.root_children[r]}
            rest = [w for w in t.place.node_children(loc) if w not in taken]
            rest += [-(s + 1) for s in t.place.site_children(loc)]
            sites[p.root_sites[holders[0]][0]] = tuple(rest)
        return Match(tuple(self.eta), tuple(rho), tuple(sites), links)


def iter_occurrences(target: Bigraph, redex: Bigraph) -> Iterator[Match]:
    """Lazily enumerate occurrences of ``redex`` in ``target``."""
    keys = Counter(c.key for c in redex.controls)
    index = target.by_control()
    if any(len(index.get(k, ())) < n for k, n in keys.items()):
        return iter(())
    return _Search(redex, target).run()


def occurrences(target: Bigraph, redex: Bigraph) -> list[Match]:
    """All occurrences, sorted by root location and then node images."""
    return sorted(iter_occurrences(target, redex), key=lambda m: (m.roots, m.nodes))


def _anchors(match: Match) -> dict[int, int]:
    return {t: s for s, tops in enumerate(match.sites) for t in tops if t >= 0}


def check_conditions(match: Match, rule: ReactionRule, target: Bigraph) -> bool:
    """True when no negative condition occurs inside the match's parameter."""
    if not rule.conditions:
        return True
    anchors = _anchors(match)
    for cond in rule.conditions:
        if any(c.key not in target.by_control() for c in cond.pattern.controls):
            continue
        for _ in _Search(cond.pattern, target, anchors).run():
            return False
    return True


# -- application ------------------------------------------------------------

def _validate(rule: ReactionRule, target: Bigraph, m: Match) -> None:
    lhs = rule.redex
    if len(m.nodes) != lhs.n_nodes or len(m.roots) != lhs.regions or len(m.sites) != lhs.sites:
        raise ApplicationError(f"{rule.name}: match shape does not fit the redex")
    if len(set(m.nodes)) != len(m.nodes):
        raise ApplicationError(f"{rule.name}: node map is not injective")
    for v, u in enumerate(m.nodes):
        if not 0 <= u < target.n_nodes or target.controls[u].key != lhs.controls[v].key:
            raise ApplicationError(f"{rule.name}: redex node {v} mapped to incompatible node {u}")
    for s, tops in enumerate(m.sites):
        for t in tops:
            if t >= 0 and t in m.nodes:
                raise ApplicationError(f"{rule.name}: site {s} holds a matched node")


def _subtree(target: Bigraph, tops: Sequence[int]) -> tuple[list[int], list[int]]:
    """Nodes (pre-order) and sites below the given top places."""
    nn, ns = target.place.nn.r_major, target.place.ns.r_major
    nodes: list[int] = []
    sites: list[int] = []
    stack = []
    for t in reversed(tops):
        if t >= 0:
            stack.append(t)
        else:
            sites.append(-t - 1)
    while stack:
        u = stack.pop()
        nodes.append(u)
        sites.extend(sorted(ns.get(u, ())))
        stack.extend(sorted(nn.get(u, ()), reverse=True))
    return nodes, sites


def apply(rule: ReactionRule, target: Bigraph, match: Match) -> Bigraph:
    """Replace the matched redex by the reactum, instantiating the parameter."""
    _validate(rule, target, match)
    lhs, rhs = rule.redex, rule.reactum
    inst = rule.inst_map
    assert inst is not None
    uses = Counter(inst)
    param = [_subtree(target, tops) for tops in match.sites]
    for s, (_, tsites) in enumerate(param):
        if tsites and uses[s] != 1:
            raise ApplicationError(f"{rule.name}: cannot copy or drop target sites held by redex site {s}")

    matched = set(match.nodes)
    dropped = set(matched)
    for s, (pnodes, _) in enumerate(param):
        if uses[s] == 0:
            dropped.update(pnodes)

    controls: list[Control] = []
    new_id: dict[int, int] = {}
    for u in range(target.n_nodes):
        if u not in dropped:
            new_id[u] = len(controls)
            controls.append(target.controls[u])
    q_id = []
    for c in rhs.controls:
        q_id.append(len(controls))
        controls.append(c)

    tpar = target.place.node_parent
    node_parent: list[int] = [0] * len(controls)
    site_parent = [new_id.get(c, c) if c >= 0 else c for c in target.place.site_parent]

    def ctx(code: int) -> int:
        return new_id[code] if code >= 0 else code

    roots = [ctx(loc) for loc in match.roots]

    def rloc(code: int) -> int:
        return q_id[code] if code >= 0 else roots[code_region(code)]

    for u, nu in new_id.items():
        # parameter tops still point at matched nodes here; they are re-homed below
        node_parent[nu] = new_id.get(tpar[u], tpar[u]) if tpar[u] >= 0 else tpar[u]
    for q, nq in enumerate(q_id):
        node_parent[nq] = rloc(rhs.place.node_parent[q])

    copy_ports: dict[int, set[tuple[int, int]]] = {}
    seen: set[int] = set()
    for j, s in enumerate(inst):
        where = rloc(rhs.place.site_parent[j])
        tops = match.sites[s]
        pnodes, psites = param[s]
        if s not in seen:
            seen.add(s)
            for t in tops:
                if t >= 0:
                    node_parent[new_id[t]] = where
                else:
                    site_parent[-t - 1] = where
            continue
        fresh = {}
        for u in pnodes:
            fresh[u] = len(controls)
            controls.append(target.controls[u])
            node_parent.append(0)
        top_set = {t for t in tops if t >= 0}
        for u in pnodes:
            node_parent[fresh[u]] = where if u in top_set else fresh[tpar[u]]
            for i in range(target.controls[u].arity):
                copy_ports.setdefault(target.link_of(u, i), set()).add((fresh[u], i))

    # links
    from_rhs: dict[int, set[tuple[int, int]]] = {}
    extra: list[Link] = []
    for lk in rhs.links:
        ports = {(q_id[v], i) for v, i in lk.ports}
        if lk.outer is None:
            extra.append(Link(None, frozenset(ports)))
            continue
        k = lhs.link_named(lk.outer)
        tl = match.links[k] if k is not None else None
        if tl is None:
            if ports:
                extra.append(Link(None, frozenset(ports)))
            continue
        from_rhs.setdefault(tl, set()).update(ports)
    links: list[Link] = []
    for k, lk in enumerate(target.links):
        ports = {(new_id[v], i) for v, i in lk.ports if v in new_id}
        ports |= copy_ports.get(k, set())
        ports |= from_rhs.get(k, set())
        if ports or lk.outer is not None:
            links.append(Link(lk.outer, frozenset(ports)))
    links.extend(extra)
    return Bigraph.from_parents(controls, target.regions, node_parent, site_parent, links)


def rewrite_first(rule: ReactionRule, target: Bigraph) -> Bigraph | None:
    for m in occurrences(target, rule.redex):
        if check_conditions(m, rule, target):
            return apply(rule, target, m)
    return None


def _shape_key(b: Bigraph) -> tuple:
    depth = b.place.node_parent
    return (
        b.n_nodes,
        len(b.links),
        tuple(sorted(Counter(c.key for c in b.controls).items())),
        tuple(sorted(Counter(p < 0 for p in depth).items())),
    )


def step(rules: Sequence[ReactionRule], state: Bigraph) -> list[tuple[str, Bigraph]]:
    """All one-step successors of ``state``, deduplicated up to isomorphism."""
    out: list[tuple[str, Bigraph]] = []
    buckets: dict[tuple, list[Bigraph]] = {}
    for rule in rules:
        for m in occurrences(state, rule.redex):
            if not check_conditions(m, rule, state):
                continue
            nxt = apply(rule, state, m)
            bucket = buckets.setdefault(_shape_key(nxt), [])
            if any(iso_equal(nxt, prev) for prev in bucket):
                continue
            bucket.append(nxt)
            out.append((rule.name, nxt))
    return out
