"""Reaction-rule library: agent motion, contact formation and messaging.

Rule shapes follow the usual term notation, e.g. ``leave_building`` is
``Building_x.(id | Agent_y) -> Building_x | Agent_y``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable

from .builder import (
    ID_REGION,
    PHYSICAL_REGION,
    SpatialName,
    WorldBigraph,
    resolve,
)
from .core import (
    Bigraph,
    Control,
    Link,
    atom,
    close,
    elementary_id,
    ion,
    merge_all,
    nest,
    one,
    ppar,
)
from .rewrite import NegCondition, ReactionRule, apply, check_conditions, iter_occurrences
from .vocab import (
    AGENT,
    BOUNDARY,
    BUILDING,
    CONTACT,
    ID,
    JUNCTION,
    MESSAGE,
    STREET,
    WORLD,
)

__all__ = [
    "AGENT",
    "BOUNDARY",
    "BUILDING",
    "CONTACT",
    "ID",
    "JUNCTION",
    "MESSAGE",
    "STREET",
    "leave_rule",
    "enter_rule",
    "motion_rules",
    "alternative_enter_rules",
    "connect_rule",
    "rule_library",
    "propagate_rule",
    "delete_message_rule",
    "copy_rule",
    "cleanup_rule",
    "fire_once",
    "run_to_fixpoint",
    "unicast",
    "multicast",
]

_ID = elementary_id


def _in(control: Control, name: str, *parts: Bigraph) -> Bigraph:
    """``control_name.(p1 | p2 | ...)``"""
    return nest(ion(control, [name]), merge_all(parts))


def leave_rule(control: Control) -> ReactionRule:
    """``C_x.(id | Agent_y) -> C_x | Agent_y``"""
    redex = _in(control, "x", _ID(), ion(AGENT, ["y"]))
    reactum = merge_all([ion(control, ["x"]), ion(AGENT, ["y"])])
    return ReactionRule(f"leave_{control.name.lower()}", redex, reactum)


def enter_rule(control: Control) -> ReactionRule:
    """``C_x | Agent_y -> C_x.(id | Agent_y)``"""
    redex = merge_all([ion(control, ["x"]), ion(AGENT, ["y"])])
    reactum = _in(control, "x", _ID(), ion(AGENT, ["y"]))
    return ReactionRule(f"enter_{control.name.lower()}", redex, reactum)


def _move_across() -> ReactionRule:
    junction = atom(JUNCTION, ["w"])
    redex = ppar(
        _in(STREET, "x1", _ID(), ion(AGENT, ["y"]), junction),
        _in(STREET, "x2", junction, _ID()),
    )
    reactum = ppar(
        _in(STREET, "x1", _ID(), junction),
        _in(STREET, "x2", junction, ion(AGENT, ["y"]), _ID()),
    )
    return ReactionRule("move_across_linked_streets", redex, reactum)


def motion_rules() -> list[ReactionRule]:
    return [
        leave_rule(BUILDING),
        leave_rule(STREET),
        enter_rule(BUILDING),
        enter_rule(STREET),
        _move_across(),
    ]


def _enter_from(outer: Control) -> ReactionRule:
    """``C_x.(id | Building_y | Agent_z) -> C_x.(id | Building_y.(id | Agent_z))``"""
    redex = _in(outer, "x", _ID(), ion(BUILDING, ["y"]), ion(AGENT, ["z"]))
    reactum = _in(outer, "x", _ID(), _in(BUILDING, "y", _ID(), ion(AGENT, ["z"])))
    return ReactionRule(f"enter_building_from_{outer.name.lower()}", redex, reactum)


def alternative_enter_rules() -> list[ReactionRule]:
    return [_enter_from(STREET), _enter_from(BOUNDARY)]


def connect_rule() -> ReactionRule:
    """Link two agents in one building by a fresh pair of Contact nodes."""
    redex = _in(BUILDING, "x", _ID(), ion(AGENT, ["y"]), ion(AGENT, ["z"]))
    contact = atom(CONTACT, ["w"])
    reactum = close(
        "w",
        _in(
            BUILDING,
            "x",
            _ID(),
            _in(AGENT, "y", _ID(), contact),
            _in(AGENT, "z", _ID(), contact),
        ),
    )
    pattern = close("w", ppar(contact, contact))
    return ReactionRule("connect_to_nearby_agent", redex, reactum, conditions=(NegCondition(pattern),))


def rule_library() -> dict[str, ReactionRule]:
    rules = motion_rules() + alternative_enter_rules() + [connect_rule()]
    return {r.name: r for r in rules}


# -- messaging rules ------------------------------------------------------------

def _closed(b: Bigraph, *names: str) -> Bigraph:
    for n in names:
        b = close(n, b)
    return b


@lru_cache(maxsize=4096)
def propagate_rule(message_id: str, segment: str, control: Control) -> ReactionRule:
    """Move Message ``message_id`` into a sibling ``control`` node named ``segment``.

    ``ID(m)_e | ID(seg)_f  ||  Message_e | C_f.(id)  ->  ... || C_f.(id | Message_e)``
    """
    ids = merge_all([atom(ID(message_id), ["e"]), atom(ID(segment), ["f"])])
    msg = atom(MESSAGE, ["e"])
    redex = _closed(ppar(ids, merge_all([msg, ion(control, ["f"])])), "e", "f")
    reactum = _closed(ppar(ids, _in(control, "f", _ID(), msg)), "e", "f")
    return ReactionRule(f"propagate[{message_id}->{control.name}({segment})]", redex, reactum)


@lru_cache(maxsize=256)
def delete_message_rule(message_id: str) -> ReactionRule:
    """Remove a Message and its ID node wherever they are."""
    redex = _closed(ppar(atom(ID(message_id), ["e"]), ion(MESSAGE, ["e"])), "e")
    return ReactionRule(f"delete[{message_id}]", redex, ppar(one(), one()), inst_map=())


@lru_cache(maxsize=256)
def copy_rule(message_id: str, control: Control) -> ReactionRule:
    """Push a copy of a Message into a sibling ``control`` node lacking one.

    Redex sites: 0 the rest of the ID perspective, 1 the node's content,
    2 the message content.  Site 2 is instantiated twice.
    """
    ident = ID(message_id)
    redex = _closed(
        ppar(
            merge_all([atom(ident, ["e"]), _ID()]),
            merge_all([ion(control, ["c"]), ion(MESSAGE, ["e"])]),
        ),
        "e",
    )
    reactum = _closed(
        ppar(
            merge_all([atom(ident, ["e"]), atom(ident, ["f"]), _ID()]),
            merge_all([_in(control, "c", _ID(), ion(MESSAGE, ["e"])), ion(MESSAGE, ["f"])]),
        ),
        "e",
        "f",
    )
    already = close("k", ppar(atom(ident, ["k"]), ion(MESSAGE, ["k"])))
    return ReactionRule(
        f"copy[{message_id}->{control.name}]",
        redex,
        reactum,
        inst_map=(0, 1, 2, 2),
        conditions=(NegCondition(already),),
    )


@lru_cache(maxsize=256)
def cleanup_rule(message_id: str, control: Control) -> ReactionRule:
    """Delete a Message sitting directly inside a ``control`` node."""
    redex = _closed(
        ppar(atom(ID(message_id), ["e"]), _in(control, "c", _ID(), ion(MESSAGE, ["e"]))),
        "e",
    )
    reactum = ppar(one(), ion(control, ["c"]))
    return ReactionRule(f"cleanup[{message_id}<-{control.name}]", redex, reactum, inst_map=(0,))


# -- drivers ------------------------------------------------------------------------

def fire_once(rule: ReactionRule, state: Bigraph) -> Bigraph | None:
    """Apply ``rule`` at its first admissible occurrence, if any."""
    for m in iter_occurrences(state, rule.redex):
        if check_conditions(m, rule, state):
            return apply(rule, state, m)
    return None


def run_to_fixpoint(rules: Iterable[ReactionRule], state: Bigraph, limit: int = 1_000_000) -> tuple[Bigraph, int]:
    """Fire rules (first applicable in list order) until none applies."""
    rules = list(rules)
    fired = 0
    while fired < limit:
        for rule in rules:
            nxt = fire_once(rule, state)
            if nxt is not None:
                state = nxt
                fired += 1
                break
        else:
            return state, fired
    raise RuntimeError(f"no fixed point after {limit} rule applications")


def _spawn_message(wb: WorldBigraph, message_id: str) -> Bigraph:
    """Add ``Message`` inside the World boundary (or at the Physical root) with its ID."""
    b = wb.bigraph
    home = PHYSICAL_REGION
    for v in wb.children(PHYSICAL_REGION):
        if b.controls[v].name == "Boundary" and wb.identifier(v) == WORLD:
            home = v
            break
    m, i = b.n_nodes, b.n_nodes + 1
    return Bigraph.from_parents(
        list(b.controls) + [MESSAGE, ID(message_id)],
        b.regions,
        list(b.place.node_parent) + [home, ID_REGION],
        b.place.site_parent,
        list(b.links) + [Link(None, frozenset({(m, 0), (i, 0)}))],
    )


_CONTAINERS = (BOUNDARY, STREET, BUILDING)


def _propagate(state: Bigraph, message_id: str, segments: list[str], last: tuple[Control, ...]) -> Bigraph | None:
    for k, seg in enumerate(segments):
        choices = last if k == len(segments) - 1 else _CONTAINERS
        for control in choices:
            nxt = fire_once(propagate_rule(message_id, seg, control), state)
            if nxt is not None:
                state = nxt
                break
        else:
            return None
    return state


def _as_name(name: SpatialName | str) -> SpatialName | None:
    if isinstance(name, SpatialName):
        return name
    try:
        return SpatialName.parse(name)
    except ValueError:
        return None


def unicast(wb: WorldBigraph, message_id: str, destination: SpatialName | str) -> tuple[WorldBigraph, bool]:
    """Route a new Message down the hierarchy into the destination Agent."""
    name = _as_name(destination)
    state = _spawn_message(wb, message_id)
    if name is not None:
        done = _propagate(state, message_id, list(reversed(name.segments)), (AGENT,))
        if done is not None:
            return WorldBigraph(done), True
    gone = fire_once(delete_message_rule(message_id), state)
    assert gone is not None
    return WorldBigraph(gone), False


def _messages_in_agents(b: Bigraph, message_id: str) -> int:
    count = 0
    for lk in b.links:
        kinds = sorted(b.controls[v].name for v, _ in lk.ports)
        if kinds != ["ID", "Message"]:
            continue
        ident = next(b.controls[v] for v, _ in lk.ports if b.controls[v].name == "ID")
        if ident.parameter != message_id:
            continue
        msg = next(v for v, _ in lk.ports if b.controls[v].name == "Message")
        p = b.place.node_parent[msg]
        if p >= 0 and b.controls[p].name == "Agent":
            count += 1
    return count


def multicast(wb: WorldBigraph, message_id: str, area: SpatialName | str) -> tuple[WorldBigraph, int]:
    """Deliver a copy of a Message to every Agent inside ``area``."""
    name = _as_name(area)
    if name is None:
        return wb, 0
    try:
        if resolve(wb, name) is None:
            return wb, 0
    except LookupError:
        return wb, 0
    before = _messages_in_agents(wb.bigraph, message_id)
    state = _spawn_message(wb, message_id)
    final = (BOUNDARY, STREET, BUILDING, AGENT)
    done = _propagate(state, message_id, list(reversed(name.segments)), final)
    if done is None:
        gone = fire_once(delete_message_rule(message_id), state)
        assert gone is not None
        return WorldBigraph(gone), 0
    copies = [copy_rule(message_id, c) for c in final]
    done, _ = run_to_fixpoint(copies, done)
    cleanups = [cleanup_rule(message_id, c) for c in _CONTAINERS]
    done, _ = run_to_fixpoint(cleanups, done)
    return WorldBigraph(done), _messages_in_agents(done, message_id) - before

