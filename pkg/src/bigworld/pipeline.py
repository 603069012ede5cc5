"""From Overpass cache files to region extracts and a hierarchy."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable

from .builder import WorldBigraph, build
from .osm import OsmDocument, RegionExtract, classify_boundary, derive_hierarchy, extract_region, parse_osm
from .overpass import QueryKind, QuerySpec, fetch

log = logging.getLogger(__name__)

__all__ = ["Harvest", "merge_documents", "descendant_boundaries", "harvest", "build_region"]

Fetcher = Callable[..., "os.PathLike[str] | str"]


def merge_documents(*docs: OsmDocument) -> OsmDocument:
    out = OsmDocument()
    for d in docs:
        out.nodes.update(d.nodes)
        out.ways.update(d.ways)
        out.relations.update(d.relations)
    return out


@dataclass
class Harvest:
    region: str
    hierarchy: dict[str, list[str]] = field(default_factory=dict)
    extracts: dict[str, RegionExtract] = field(default_factory=dict)
    relation_ids: dict[str, int | None] = field(default_factory=dict)


def descendant_boundaries(doc: OsmDocument, exclude_name: str, exclude_id: int | None) -> dict[str, int]:
    """Administrative boundaries in a descendants result, by name."""
    found: dict[str, int] = {}
    for rid in sorted(doc.relations):
        rel = doc.relations[rid]
        got = classify_boundary(rel.tags)
        if got is None or rid == exclude_id or got[0] == exclude_name:
            continue
        name = got[0]
        if name in found:
            log.warning("two boundaries named %r (relations %d and %d); keeping the first", name, found[name], rid)
            continue
        found[name] = rid
    return found


def harvest(
    region: str,
    cache_dir: str | os.PathLike[str],
    *,
    endpoint: str | None = None,
    relation_id: int | None = None,
    fetcher: Fetcher = fetch,
) -> Harvest:
    """Fetch (or read from cache) everything needed to build ``region``."""

    def get(name: str, kind: QueryKind, rid: int | None) -> OsmDocument:
        return parse_osm(fetcher(QuerySpec(name, kind, rid), endpoint, cache_dir))

    out = Harvest(region)
    out.relation_ids[region] = relation_id
    top = descendant_boundaries(get(region, QueryKind.DESCENDANTS, relation_id), region, relation_id)
    desc: dict[str, set[str]] = {region: set(top)}
    for name, rid in top.items():
        out.relation_ids[name] = rid
        inner = descendant_boundaries(get(name, QueryKind.DESCENDANTS, rid), name, rid)
        desc[name] = set(inner) & set(top)
    out.hierarchy = derive_hierarchy(desc)
    todo = [region]
    while todo:
        name = todo.pop()
        rid = out.relation_ids.get(name)
        doc = merge_documents(get(name, QueryKind.STREETS, rid), get(name, QueryKind.BUILDINGS, rid))
        crossing = get(name, QueryKind.CROSSINGS, rid)
        out.extracts[name] = extract_region(doc, name, crossing.nodes.keys())
        todo.extend(out.hierarchy.get(name, []))
    return out


def build_region(region: str, cache_dir: str | os.PathLike[str], **kwargs) -> WorldBigraph:
    h = harvest(region, cache_dir, **kwargs)
    return build(region, h.hierarchy, h.extracts)
