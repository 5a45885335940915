"""MCP tool definitions for greyharvest."""

from typing import Literal

from pydantic import BaseModel, Field


class CiteUriInput(BaseModel):
    """Input for cite_uri tool."""

    uri: str = Field(description="http(s) URI of the page to cite")
    format: Literal["json", "bibtex", "ris", "rdf", "wiki"] = Field(
        default="bibtex", description="Citation format"
    )


class ListArchivesInput(BaseModel):
    """Input for list_archives tool."""

    uri: str = Field(description="http(s) URI whose archive snapshots to list")


class GetHistoryInput(BaseModel):
    """Input for get_history tool."""

    uri: str = Field(description="http(s) URI whose stored record versions to list")


class EmbedMarkupInput(BaseModel):
    """Input for embed_markup tool."""

    record: dict = Field(
        description="Record as stored: uri, title, authors [{literal, given, family}], "
        "issued [year, month, day], container, canonical_uri"
    )
    override: dict | None = Field(
        default=None,
        description="Optional {authors: [...], container: ...} replacing extracted values",
    )
    formats: list[Literal["scholar", "ogp", "coins"]] = Field(
        default=["scholar", "ogp", "coins"], description="Markup flavours to emit"
    )


class AllocatePurlInput(BaseModel):
    """Input for allocate_purl tool."""

    uri: str = Field(description="http(s) URI to allocate a persistent URL for")


# Tool definitions for MCP registration
TOOL_DEFINITIONS = [
    {
        "name": "cite_uri",
        "description": """Resolve a URI to bibliographic metadata and render it as a citation.

Uses the stored record when there is one, resolving the page otherwise.
Formats: json (Citeproc), bibtex, ris, rdf (Dublin Core Turtle), wiki ({{cite web}}).""",
        "inputSchema": CiteUriInput.model_json_schema(),
    },
    {
        "name": "list_archives",
        "description": """List known web archive snapshots of a URI.""",
        "inputSchema": ListArchivesInput.model_json_schema(),
    },
    {
        "name": "get_history",
        "description": """List every stored version of a URI's record, oldest first.

Each entry has the version number, digest chain, retrieval time and completeness class.""",
        "inputSchema": GetHistoryInput.model_json_schema(),
    },
    {
        "name": "embed_markup",
        "description": """Generate Google Scholar and OGP meta tags plus a CoINS span for a record.

Put head_html in the page <head> and body_html in the <body>.""",
        "inputSchema": EmbedMarkupInput.model_json_schema(),
    },
    {
        "name": "allocate_purl",
        "description": """Allocate a persistent URL for a URI.

Only records with title, container, date and authors get one.""",
        "inputSchema": AllocatePurlInput.model_json_schema(),
    },
]
