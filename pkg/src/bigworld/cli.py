"""Command-line entry point: ``bigworld <command> ...``.

Exit status is 0 on success, 1 when a command fails and 2 for usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import builder, pipeline, rewrite, rules, store
from .overpass import FetchError
from .osm import DataError, OsmParseError

log = logging.getLogger("bigworld")


class CommandError(RuntimeError):
    """A command could not complete; reported on stderr with exit status 1."""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bigworld", description="Build and rewrite bigraphs of real-world places.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def net(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--region", required=True)
        sp.add_argument("--relation-id", type=int, default=None, help="OSM relation id, to disambiguate names")
        sp.add_argument("--endpoint", default=None, help="Overpass endpoint (default: $OVERPASS_ENDPOINT or public)")
        sp.add_argument("--cache-dir", default="osm-cache")

    net(sub.add_parser("fetch", help="download region data into the cache"))
    b = sub.add_parser("build", help="build a world bigraph and save it as JSON")
    net(b)
    b.add_argument("--out", required=True)

    s = sub.add_parser("stats", help="print node/link statistics as TSV")
    s.add_argument("--in", dest="inp", required=True)

    s = sub.add_parser("spatial-name", help="spatial name of a node")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--node", type=int, required=True)

    s = sub.add_parser("resolve", help="node id for a spatial name")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--name", required=True)

    s = sub.add_parser("agent-add", help="add an agent at a named place")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--at", required=True)
    s.add_argument("--id", dest="agent_id", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("react", help="apply a reaction rule")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--rule", required=True, choices=sorted(rules.rule_library()))
    s.add_argument("--all", action="store_true", help="write every successor as OUT-stem.N.json")
    s.add_argument("--out", required=True)

    s = sub.add_parser("unicast", help="send a message to one agent")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--to", required=True)
    s.add_argument("--message-id", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("multicast", help="send a message to every agent in an area")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--area", required=True)
    s.add_argument("--message-id", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("export-dot", help="render as Graphviz DOT")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    return p


def _net_kwargs(args: argparse.Namespace) -> dict:
    return {"endpoint": args.endpoint, "relation_id": args.relation_id}


def _run(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "fetch":
        h = pipeline.harvest(args.region, args.cache_dir, **_net_kwargs(args))
        print(f"cached {len(h.extracts)} regions under {args.cache_dir}")
        return 0
    if cmd == "build":
        wb = pipeline.build_region(args.region, args.cache_dir, **_net_kwargs(args))
        store.save(wb, args.out)
        return 0

    wb = store.load(args.inp)
    if cmd == "stats":
        st = builder.stats(wb)
        print("\t".join(st.HEADER))
        print("\t".join(str(x) for x in st.row()))
    elif cmd == "spatial-name":
        try:
            print(builder.spatial_name(wb, args.node))
        except LookupError as exc:
            raise CommandError(str(exc)) from None
    elif cmd == "resolve":
        node = builder.resolve(wb, args.name)
        if node is None:
            raise CommandError(f"{args.name}: not found")
        print(node)
    elif cmd == "agent-add":
        out, node = builder.add_agent(wb, args.at, args.agent_id)
        store.save(out, args.out)
        print(node)
    elif cmd == "react":
        rule = rules.rule_library()[args.rule]
        if args.all:
            succ = rewrite.step([rule], wb.bigraph)
            out = Path(args.out)
            for k, (_, b) in enumerate(succ):
                store.save(builder.WorldBigraph(b), out.with_name(f"{out.stem}.{k}{out.suffix or '.json'}"))
            print(len(succ))
        else:
            b = rewrite.rewrite_first(rule, wb.bigraph)
            if b is None:
                raise CommandError(f"rule {args.rule} does not apply")
            store.save(builder.WorldBigraph(b), args.out)
    elif cmd == "unicast":
        out, delivered = rules.unicast(wb, args.message_id, args.to)
        store.save(out, args.out)
        print("delivered" if delivered else "not delivered")
    elif cmd == "multicast":
        out, count = rules.multicast(wb, args.message_id, args.area)
        store.save(out, args.out)
        print(count)
    elif cmd == "export-dot":
        Path(args.out).write_text(store.to_dot(wb), encoding="utf-8")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except (
        CommandError,
        FetchError,
        OsmParseError,
        DataError,
        builder.BuildError,
        builder.AmbiguousNameError,
        store.LoadError,
        LookupError,
        OSError,
    ) as exc:
        print(f"bigworld: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
