"""Command-line interface.

    greyharvest cite URI [--format bibtex]           resolve and print one record
    greyharvest cite --offline page.html [--as-uri]  extract from a local file
    greyharvest batch uris.txt --report out.tsv      resolve a list, write a TSV report
    greyharvest embed --record r.json                print markup for a page
    greyharvest serve [--port 8192]                  run the REST service
    greyharvest purl URI                             allocate and print a PURL

stdout carries only the requested output; diagnostics go to stderr, errors as
one-line JSON. Exit codes: 0 ok, 1 empty record, 2 usage, 3 I/O or network.
"""

import argparse
import asyncio
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Awaitable, Callable, TypeVar
from urllib.parse import quote

import httpx

from .config import Config, load_config
from .embedder import EmbedFormat, MissingTitle, RecordOverride, emit_markup, wrap_page
from .fetcher import FetchError, SourceDocument
from .lookup import Harvester
from .model import (
    BibRecord,
    CompletenessClass,
    Field,
    GreyharvestError,
    classify,
    format_timestamp,
    record_from_dict,
    utcnow,
)
from .resolver import Resolver
from .serializers import FORMATS
from .store import StoreError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_USAGE = 2
EXIT_IO = 3

REPORT_COLUMNS = ("uri", "class", *(f.value for f in Field))

T = TypeVar("T")


class UsageError(GreyharvestError):
    """Bad command line or unusable input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="Configuration file (JSON)")
    common.add_argument("--data-dir", help="Store directory (GREYHARVEST_DATA wins)")
    common.add_argument("--rules-dir", help="Directory of site rule files")
    common.add_argument("--log-level", help="Logging level for stderr diagnostics")

    parser = _Parser(prog="greyharvest", description="Bibliographic metadata for any URI")
    commands = parser.add_subparsers(dest="command", required=True)

    cite = commands.add_parser("cite", parents=[common], help="Resolve and print one record")
    cite.add_argument("uri", nargs="?", help="URI to resolve")
    cite.add_argument("--format", choices=sorted(FORMATS), default="json")
    cite.add_argument("--offline", metavar="FILE", help="Extract from a local file, no network")
    cite.add_argument("--as-uri", help="Pretend URI for --offline extraction")
    cite.set_defaults(handler=_cite)

    batch = commands.add_parser("batch", parents=[common], help="Resolve every URI in a file")
    batch.add_argument("uri_file", help="One URI per line; blank lines and # comments skipped")
    batch.add_argument("--report", help="TSV report path (stdout if omitted)")
    batch.add_argument("--jobs", type=int, default=4, help="Concurrent resolves")
    batch.set_defaults(handler=_batch)

    embed = commands.add_parser("embed", parents=[common], help="Print embeddable markup")
    embed.add_argument("--record", required=True, help="Record JSON file")
    embed.add_argument("--override", help="JSON file with authors and/or container")
    embed.add_argument("--formats", default="scholar,ogp,coins")
    embed.add_argument("--page", action="store_true", help="Wrap the markup in an HTML page")
    embed.set_defaults(handler=_embed)

    serve = commands.add_parser("serve", parents=[common], help="Run the REST service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--refresh-hours", type=float)
    serve.set_defaults(handler=_serve)

    purl = commands.add_parser("purl", parents=[common], help="Allocate a PURL for a URI")
    purl.add_argument("uri")
    purl.set_defaults(handler=_purl)

    return parser


def config_from_args(args: argparse.Namespace) -> Config:
    config = load_config(Path(args.config) if args.config else None)
    if args.data_dir and not os.getenv("GREYHARVEST_DATA"):
        config.store.data_dir = args.data_dir
    if args.rules_dir:
        config.resolver.rules_dir = args.rules_dir
    if args.log_level:
        config.service.log_level = args.log_level
    if getattr(args, "host", None):
        config.service.host = args.host
    if getattr(args, "port", None):
        config.service.port = args.port
    if getattr(args, "refresh_hours", None) is not None:
        config.service.refresh_hours = args.refresh_hours
    return config


def _emit_error(error: Exception, code: int) -> int:
    print(json.dumps({"error": type(error).__name__, "detail": str(error)}), file=sys.stderr)
    return code


def _write(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


async def _using_harvester(
    config: Config,
    transport: httpx.AsyncBaseTransport | None,
    action: Callable[[Harvester], Awaitable[T]],
) -> T:
    harvester = Harvester(config, transport=transport)
    try:
        return await action(harvester)
    finally:
        await harvester.close()


async def resolve_offline(path: Path | str, uri: str, config: Config | None = None) -> BibRecord:
    """Extract and merge a local file as if it had been fetched from ``uri``."""
    doc = SourceDocument.from_file(Path(path), uri)
    resolver = Resolver(config)
    return await resolver.resolve_document(doc, fetch_related=False)


def _offline_uri(args: argparse.Namespace) -> str:
    return args.as_uri or args.uri or f"http://localhost/{quote(Path(args.offline).name)}"


def _cite(args, config: Config, transport) -> int:
    if args.offline:
        record = asyncio.run(resolve_offline(args.offline, _offline_uri(args), config))
    elif args.uri:
        record = asyncio.run(_using_harvester(config, transport, lambda h: h.refresh(args.uri)))
    else:
        raise UsageError("cite needs a uri or --offline FILE")
    _write(FORMATS[args.format].render(record))
    return EXIT_EMPTY if classify(record) == CompletenessClass.NONE else EXIT_OK


def report_row(uri: str, outcome: BibRecord | Exception) -> list[str]:
    """uri, class, then the winning source for each field."""
    if isinstance(outcome, Exception):
        return [uri, "ERROR"] + [""] * len(Field)
    sources = [outcome.provenance[f].value if f in outcome.provenance else "" for f in Field]
    return [uri, classify(outcome).name, *sources]


async def run_batch(
    harvester: Harvester, uris: list[str], jobs: int = 4
) -> list[tuple[str, BibRecord | Exception]]:
    semaphore = asyncio.Semaphore(max(jobs, 1))

    async def one(uri: str):
        async with semaphore:
            try:
                return uri, await harvester.refresh(uri)
            except GreyharvestError as e:
                logger.warning(f"{uri}: {e}")
                return uri, e

    return await asyncio.gather(*(one(uri) for uri in uris))


def _read_uri_list(path: Path) -> list[str]:
    lines = (line.strip() for line in path.read_text(encoding="utf-8").splitlines())
    return [line for line in lines if line and not line.startswith("#")]


def _batch(args, config: Config, transport) -> int:
    uris = _read_uri_list(Path(args.uri_file))
    results = asyncio.run(
        _using_harvester(config, transport, lambda h: run_batch(h, uris, args.jobs))
    )

    if args.report:
        out = open(args.report, "w", encoding="utf-8", newline="")
    else:
        out = sys.stdout
    try:
        writer = csv.writer(out, delimiter="\t", lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(report_row(uri, outcome) for uri, outcome in results)
    finally:
        if out is not sys.stdout:
            out.close()

    failed = sum(isinstance(outcome, Exception) for _, outcome in results)
    logger.info(f"batch: {len(results)} uris, {failed} failed")
    return EXIT_IO if failed else EXIT_OK


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: not JSON ({e})") from e


def _embed(args, config: Config, transport) -> int:
    data = _load_json(args.record)
    data.setdefault("retrieved_at", format_timestamp(utcnow()))
    try:
        record = record_from_dict(data)
        override = RecordOverride.from_dict(_load_json(args.override)) if args.override else None
        formats = [EmbedFormat(f.strip()) for f in args.formats.split(",") if f.strip()]
    except (KeyError, ValueError) as e:
        raise UsageError(f"bad embed input: {e}") from e

    markup = emit_markup(record, override, formats)
    if args.page:
        _write(wrap_page(markup, title=record.title))
    else:
        _write(f"{markup.head_html}\n\n{markup.body_html}")
    return EXIT_OK


def _serve(args, config: Config, transport) -> int:
    from .service import serve

    serve(config)
    return EXIT_OK


def _purl(args, config: Config, transport) -> int:
    purl = asyncio.run(_using_harvester(config, transport, lambda h: h.purl(args.uri)))
    if purl is None:
        print(
            json.dumps({"error": "BelowThreshold", "detail": f"no purl for {args.uri}"}),
            file=sys.stderr,
        )
        return EXIT_EMPTY
    _write(purl.id)
    return EXIT_OK


def main(argv: list[str] | None = None, transport: httpx.AsyncBaseTransport | None = None) -> int:
    """Entry point; ``transport`` replaces the network in tests."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        return _emit_error(e, EXIT_USAGE)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK

    config = config_from_args(args)
    logging.basicConfig(
        stream=sys.stderr,
        level=config.service.log_level.upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args, config, transport)
    except (FetchError, StoreError, OSError, httpx.HTTPError) as e:
        return _emit_error(e, EXIT_IO)
    except (UsageError, MissingTitle, ValueError) as e:
        return _emit_error(e, EXIT_USAGE)
    except KeyboardInterrupt:
        logger.info("interrupted")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
