"""Overpass QL generation and cached HTTP fetches of region data."""
from __future__ import annotations

import logging
import os
import re
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

import requests

from .osm import STREET_HIGHWAYS

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_ENDPOINT",
    "FetchError",
    "QueryKind",
    "QuerySpec",
    "render_query",
    "cache_path",
    "resolve_endpoint",
    "fetch",
]

DEFAULT_ENDPOINT = "https://overpass-api.de/api/interpreter"
_AREA_OFFSET = 3_600_000_000  # Overpass area id of a relation = relation id + offset


class FetchError(RuntimeError):
    """The Overpass request failed; ``status`` is the HTTP code if any."""

    def __init__(self, message: str, status: int | None = None) -> None:
        super().__init__(message if status is None else f"{message} (HTTP {status})")
        self.status = status


class QueryKind(str, Enum):
    BUILDINGS = "buildings"
    STREETS = "streets"
    CROSSINGS = "crossings"
    DESCENDANTS = "descendants"


@dataclass(frozen=True)
class QuerySpec:
    region: str
    kind: QueryKind
    relation_id: int | None = None

    def __post_init__(self) -> None:
        if not self.region:
            raise ValueError("region name must be non-empty")
        object.__setattr__(self, "kind", QueryKind(self.kind))


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


_HIGHWAY_RE = "^(" + "|".join(STREET_HIGHWAYS) + ")$"
_LEVEL_RE = "^([2-9]|1[01])$"


def _area(spec: QuerySpec) -> str:
    if spec.relation_id is not None:
        return f"area(id:{_AREA_OFFSET + spec.relation_id})->.region;"
    return f'area["boundary"="administrative"]["name"={_quote(spec.region)}]->.region;'


def _boundary(spec: QuerySpec) -> str:
    if spec.relation_id is not None:
        return f"rel({spec.relation_id})->.edge;"
    return f'rel["boundary"="administrative"]["name"={_quote(spec.region)}]->.edge;'


def render_query(spec: QuerySpec) -> str:
    """Overpass QL text for one query kind; a pure function of ``spec``."""
    head = ["[out:xml][timeout:900];", _area(spec)]
    kind = spec.kind
    if kind is QueryKind.BUILDINGS:
        body = [
            'node["building"](area.region)->.points;',
            'way["building"](area.region)->.outlines;',
            'rel["building"](area.region)->.multis;',
            ".points out body;",
            "foreach.outlines->.w(",
            "  node(w.w:1)->.first;",
            "  node.first(area.region)->.inside;",
            "  if (inside.count(nodes) > 0) { .w out body; }",
            ");",
            "foreach.multis->.r(",
            "  way(r.r)->.parts;",
            "  node(w.parts:1)->.firsts;",
            "  node.firsts(area.region)->.inside;",
            "  if (inside.count(nodes) > 0) { .r out body; }",
            ");",
        ]
    elif kind is QueryKind.STREETS:
        body = [
            f'way["highway"~"{_HIGHWAY_RE}"](area.region)->.streets;',
            ".streets out body;",
            "node(w.streets)->.street_nodes;",
            ".street_nodes out skel qt;",
        ]
    elif kind is QueryKind.CROSSINGS:
        body = [
            _boundary(spec),
            f'way["highway"~"{_HIGHWAY_RE}"](around.edge:0)->.crossing;',
            "foreach.crossing->.w(",
            "  node(w.w:1)->.first;",
            "  .first out skel qt;",
            ");",
        ]
    else:
        body = [
            f'rel["boundary"="administrative"]["admin_level"~"{_LEVEL_RE}"](area.region)->.candidates;',
            "foreach.candidates->.r(",
            "  way(r.r)->.parts;",
            "  node(w.parts)->.all;",
            "  node.all(area.region)->.inside;",
            "  if (inside.count(nodes) == all.count(nodes)) { .r out tags; }",
            ");",
        ]
    return "\n".join(head + body) + "\n"


def _slug(region: str) -> str:
    return re.sub(r"[\\/\x00]", "_", region)


def cache_path(spec: QuerySpec, cache_dir: str | os.PathLike[str]) -> Path:
    return Path(cache_dir) / f"{_slug(spec.region)}.{spec.kind.value}.osm"


def resolve_endpoint(endpoint: str | None) -> str:
    """Flag beats environment beats the public default."""
    if endpoint is not None:
        return endpoint
    return os.environ.get("OVERPASS_ENDPOINT", DEFAULT_ENDPOINT)


def fetch(
    spec: QuerySpec,
    endpoint: str | None = None,
    cache_dir: str | os.PathLike[str] = ".",
    *,
    session: requests.Session | None = None,
    attempts: int = 3,
    backoff: float = 2.0,
    timeout: float = 960.0,
    sleep: Callable[[float], None] = time.sleep,
) -> Path:
    """Return the cache file for ``spec``, querying Overpass on a miss.

    An existing cache file is never rewritten.  HTTP 429 responses are
    retried with exponential backoff.
    """
    path = cache_path(spec, cache_dir)
    if path.exists():
        return path
    url = resolve_endpoint(endpoint)
    if not url:
        raise FetchError(f"no endpoint configured and {path} is not cached")
    http = session or requests.Session()
    query = render_query(spec)
    status: int | None = None
    for attempt in range(attempts):
        try:
            resp = http.post(url, data={"data": query}, timeout=timeout)
        except requests.RequestException as exc:
            raise FetchError(f"request to {url} failed: {exc}") from exc
        status = resp.status_code
        if status == 429:
            delay = backoff * (2**attempt)
            log.warning("rate limited by %s, retrying in %.1fs", url, delay)
            if attempt + 1 < attempts:
                sleep(delay)
            continue
        if status != 200:
            raise FetchError(f"Overpass query for {spec.region} ({spec.kind.value}) failed", status)
        _atomic_write(path, resp.content)
        return path
    raise FetchError(f"rate limited after {attempts} attempts", status)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        if path.exists():  # another writer won the race; keep theirs
            os.unlink(tmp)
            return
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
