"""MCP server exposing greyharvest lookups as tools."""

import asyncio
import json
import logging
import threading
from typing import Any

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from .config import get_config
from .embedder import RecordOverride, emit_markup
from .lookup import Harvester
from .model import GreyharvestError, format_timestamp, record_from_dict, snapshot_to_dict, utcnow
from .serializers import render
from .tools import (
    TOOL_DEFINITIONS,
    AllocatePurlInput,
    CiteUriInput,
    EmbedMarkupInput,
    GetHistoryInput,
    ListArchivesInput,
)

logger = logging.getLogger(__name__)

server = Server("greyharvest")

_harvester: Harvester | None = None
_harvester_lock = threading.Lock()


def get_harvester() -> Harvester:
    """Shared harvester built from the global config."""
    global _harvester
    if _harvester is None:
        with _harvester_lock:
            if _harvester is None:
                _harvester = Harvester(get_config())
    return _harvester


@server.list_tools()
async def list_tools() -> list[Tool]:
    """Return tool list."""
    return [
        Tool(
            name=tool["name"],
            description=tool["description"],
            inputSchema=tool["inputSchema"],
        )
        for tool in TOOL_DEFINITIONS
    ]


@server.call_tool()
async def call_tool(name: str, arguments: dict[str, Any]) -> list[TextContent]:
    """Handle tool call."""
    try:
        result = await _execute_tool(name, arguments)
        return [TextContent(type="text", text=json.dumps(result, indent=2, ensure_ascii=False))]
    except Exception as e:
        logger.exception(f"{name} failed")
        error = {"error": str(e), "success": False}
        return [TextContent(type="text", text=json.dumps(error, indent=2))]


async def _execute_tool(name: str, args: dict[str, Any]) -> dict:
    """Execute tool."""
    logger.info(f"tool: {name}")
    try:
        if name == "cite_uri":
            params = CiteUriInput(**args)
            record = await get_harvester().lookup(params.uri)
            citation = render(record, params.format)
            return {"success": True, "format": params.format, "citation": citation}

        elif name == "list_archives":
            params = ListArchivesInput(**args)
            snapshots = await get_harvester().archives(params.uri)
            return {"success": True, "archives": [snapshot_to_dict(s) for s in snapshots]}

        elif name == "get_history":
            params = GetHistoryInput(**args)
            versions = get_harvester().history(params.uri)
            return {"success": True, "versions": versions, "total_versions": len(versions)}

        elif name == "embed_markup":
            params = EmbedMarkupInput(**args)
            data = {"retrieved_at": format_timestamp(utcnow()), **params.record}
            override = RecordOverride.from_dict(params.override) if params.override else None
            markup = emit_markup(record_from_dict(data), override, params.formats)
            return {"success": True, "head_html": markup.head_html, "body_html": markup.body_html}

        elif name == "allocate_purl":
            params = AllocatePurlInput(**args)
            purl = await get_harvester().purl(params.uri)
            if purl is None:
                reason = f"record for {params.uri} lacks title, container, date or authors"
                return {"success": False, "error": reason}
            return {"success": True, "purl": purl.id, "target_uri": purl.target_uri}

    except (GreyharvestError, ValueError, KeyError) as e:
        return {"success": False, "error": str(e)}

    return {"error": f"Unknown tool: {name}"}


async def run_server():
    """Run MCP server."""
    logger.info("server starting")
    try:
        async with stdio_server() as (read_stream, write_stream):
            logger.info("ready")
            await server.run(
                read_stream,
                write_stream,
                server.create_initialization_options(),
            )
    finally:
        if _harvester is not None:
            await _harvester.close()


def main():
    """Entry point."""
    config = get_config()
    logging.basicConfig(level=getattr(logging, config.service.log_level.upper(), logging.INFO))
    try:
        asyncio.run(run_server())
    except KeyboardInterrupt:
        logger.info("stopped")
    except Exception:
        logger.exception("fatal")


if __name__ == "__main__":
    main()
