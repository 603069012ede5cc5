"""Control vocabulary shared by the builder and the rule library."""
from __future__ import annotations

from .core import Control

__all__ = [
    "BOUNDARY",
    "STREET",
    "BUILDING",
    "JUNCTION",
    "AGENT",
    "CONTACT",
    "MESSAGE",
    "ID",
    "ENTITY_CONTROLS",
    "PHYSICAL_CONTROLS",
    "WORLD",
    "junction_name",
]

BOUNDARY = Control("Boundary", 1)
STREET = Control("Street", 1)
BUILDING = Control("Building", 1)
JUNCTION = Control("Junction", 1)
AGENT = Control("Agent", 1)
CONTACT = Control("Contact", 1)
MESSAGE = Control("Message", 1)

#: Name of the synthetic top boundary of a contextual world; never part of a spatial name.
WORLD = "World"


def ID(parameter: str) -> Control:  # noqa: N802 - mirrors the control's name
    return Control("ID", 1, parameter)


ENTITY_CONTROLS = frozenset({"Boundary", "Street", "Building", "Agent"})
PHYSICAL_CONTROLS = frozenset({"Boundary", "Street", "Building", "Junction", "Agent", "Contact", "Message"})


def junction_name(osm_node: int) -> str:
    return f"node {osm_node}"
