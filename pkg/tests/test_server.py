"""Tests for MCP server."""

import json
from unittest.mock import patch

import pytest

from greyharvest import server
from greyharvest.lookup import Harvester
from greyharvest.model import ArchiveSnapshot
from greyharvest.server import _execute_tool, call_tool, get_harvester, list_tools

from .support import OBSERVED, Clock, Upstream, make_config

URI = "http://journal.example.org/articles/42"
PARTIAL_URI = "http://personal.example.org/notes/on-reuse"


@pytest.fixture
async def harvester(tmp_path):
    upstream = Upstream()
    upstream.add_fixture(URI, "scholar.html")
    upstream.add_fixture(PARTIAL_URI, "generic_meta.html")
    harvester = Harvester(make_config(tmp_path), transport=upstream.transport(), clock=Clock())
    with patch("greyharvest.server.get_harvester", return_value=harvester):
        yield harvester
    await harvester.close()


class TestListTools:
    """Test list_tools handler."""

    @pytest.mark.asyncio
    async def test_list_tools_returns_tools(self):
        tools = await list_tools()
        assert [t.name for t in tools] == [
            "cite_uri",
            "list_archives",
            "get_history",
            "embed_markup",
            "allocate_purl",
        ]

    @pytest.mark.asyncio
    async def test_tools_have_required_fields(self):
        for tool in await list_tools():
            assert tool.description
            assert tool.inputSchema["type"] == "object"
            assert "properties" in tool.inputSchema


class TestCallTool:
    """Test call_tool handler."""

    @pytest.mark.asyncio
    async def test_call_tool_returns_text_content(self):
        with patch("greyharvest.server._execute_tool") as mock_execute:
            mock_execute.return_value = {"success": True, "citation": "@misc{x}"}

            result = await call_tool("cite_uri", {"uri": URI})

            assert len(result) == 1
            assert result[0].type == "text"
            assert json.loads(result[0].text)["success"] is True

    @pytest.mark.asyncio
    async def test_call_tool_handles_errors(self):
        with patch("greyharvest.server._execute_tool") as mock_execute:
            mock_execute.side_effect = RuntimeError("store exploded")

            result = await call_tool("cite_uri", {"uri": URI})

            data = json.loads(result[0].text)
            assert data["success"] is False
            assert "store exploded" in data["error"]


class TestExecuteTool:
    """Test _execute_tool against a harvester with a scripted upstream."""

    @pytest.mark.asyncio
    async def test_unknown_tool(self):
        result = await _execute_tool("unknown_tool", {})
        assert "Unknown tool" in result["error"]

    @pytest.mark.asyncio
    async def test_cite_uri(self, harvester):
        result = await _execute_tool("cite_uri", {"uri": URI})
        assert result["success"] is True
        assert result["format"] == "bibtex"
        assert "title = {Ontology Reuse in Practice}" in result["citation"]

        result = await _execute_tool("cite_uri", {"uri": URI, "format": "json"})
        assert json.loads(result["citation"])["container-title"] == "Journal of Examples"

    @pytest.mark.asyncio
    async def test_cite_uri_rejects_bad_input(self, harvester):
        result = await _execute_tool("cite_uri", {"uri": URI, "format": "marc"})
        assert result["success"] is False

        result = await _execute_tool("cite_uri", {"uri": "ftp://files.example.org/x"})
        assert result["success"] is False
        assert "unsupported scheme" in result["error"]

    @pytest.mark.asyncio
    async def test_cite_uri_upstream_failure(self, harvester):
        result = await _execute_tool("cite_uri", {"uri": "http://gone.example.org/"})
        assert result["success"] is False
        assert "404" in result["error"]

    @pytest.mark.asyncio
    async def test_list_archives(self, harvester):
        result = await _execute_tool("list_archives", {"uri": URI})
        assert result == {"success": True, "archives": []}

    @pytest.mark.asyncio
    async def test_list_archives_normalizes_uri(self, harvester):
        snapshot = ArchiveSnapshot("internet_archive", "http://web.archive.org/web/1/x", OBSERVED)
        harvester.store.put_archives(URI, [snapshot], OBSERVED)

        result = await _execute_tool(
            "list_archives", {"uri": "HTTP://Journal.Example.org:80/articles/42#top"}
        )
        assert result["success"] is True
        assert [a["snapshot_uri"] for a in result["archives"]] == [snapshot.snapshot_uri]

    @pytest.mark.asyncio
    async def test_get_history(self, harvester):
        await _execute_tool("cite_uri", {"uri": URI})
        result = await _execute_tool("get_history", {"uri": URI})
        assert result["success"] is True
        assert result["total_versions"] == 1
        assert result["versions"][0]["class"] == "TCDA"

    @pytest.mark.asyncio
    async def test_embed_markup(self):
        result = await _execute_tool(
            "embed_markup",
            {
                "record": {"uri": URI, "title": "Ontology Reuse in Practice", "issued": [2012]},
                "override": {"authors": ["Ada Okafor"]},
                "formats": ["scholar"],
            },
        )
        assert result["success"] is True
        assert 'name="citation_author" content="Ada Okafor"' in result["head_html"]
        assert 'name="citation_publication_date" content="2012"' in result["head_html"]
        assert result["body_html"] == ""

    @pytest.mark.asyncio
    async def test_embed_markup_without_title(self):
        result = await _execute_tool("embed_markup", {"record": {"uri": URI}})
        assert result["success"] is False
        assert "no title" in result["error"]

    @pytest.mark.asyncio
    async def test_allocate_purl(self, harvester):
        result = await _execute_tool("allocate_purl", {"uri": URI})
        assert result["success"] is True
        assert result["target_uri"] == URI
        assert harvester.store.get_purl(result["purl"]) is not None

    @pytest.mark.asyncio
    async def test_allocate_purl_incomplete_record(self, harvester):
        result = await _execute_tool("allocate_purl", {"uri": PARTIAL_URI})
        assert result["success"] is False
        assert "lacks" in result["error"]


class TestGetHarvester:
    def test_shared_instance(self, tmp_path):
        with (
            patch("greyharvest.server.get_config", return_value=make_config(tmp_path)),
            patch.object(server, "_harvester", None),
        ):
            first = get_harvester()
            assert get_harvester() is first
