"""Shared test helpers: fixture pages, a settable clock and a scripted upstream."""

import inspect
import io
from datetime import datetime, timedelta, timezone
from pathlib import Path

import httpx
from pypdf import PdfWriter

from greyharvest.config import Config, ContinuityConfig, FetchConfig, StoreConfig
from greyharvest.fetcher import SourceDocument

FIXTURES = Path(__file__).parent / "fixtures"
OBSERVED = datetime(2013, 6, 1, 12, 0, tzinfo=timezone.utc)

HTML = "text/html; charset=utf-8"
RSS = "application/rss+xml"
ATOM = "application/atom+xml"
PDF = "application/pdf"


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


def fixture_doc(name: str, uri: str, fetched_at: datetime = OBSERVED) -> SourceDocument:
    return SourceDocument.from_bytes(uri, fixture_bytes(name), fetched_at=fetched_at)


def make_config(tmp_path: Path, **service) -> Config:
    """Config with no politeness delay, an isolated store and no archive services."""
    config = Config()
    config.fetch = FetchConfig(timeout=5.0, per_host_delay=0)
    config.store = StoreConfig(data_dir=str(tmp_path / "data"))
    config.continuity = ContinuityConfig(archives=[])
    for key, value in service.items():
        setattr(config.service, key, value)
    return config


class Clock:
    def __init__(self, start: datetime = OBSERVED):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **delta) -> None:
        self.now += timedelta(**delta)


class Upstream:
    """Answers requests from a route table and remembers every URL asked for.

    A route is (status, headers, body) or a callable taking the request; the
    callable may be async and may raise httpx errors.
    """

    def __init__(self):
        self.routes: dict[str, object] = {}
        self.requests: list[str] = []

    def add(
        self,
        uri: str,
        body: bytes | str = b"",
        content_type: str = HTML,
        status: int = 200,
        headers: dict | None = None,
    ) -> None:
        if isinstance(body, str):
            body = body.encode("utf-8")
        all_headers = {"content-type": content_type, **(headers or {})}
        self.routes[uri] = (status, all_headers, body)

    def add_fixture(self, uri: str, name: str, content_type: str = HTML) -> None:
        self.add(uri, fixture_bytes(name), content_type)

    def count(self, uri: str) -> int:
        return self.requests.count(uri)

    async def handler(self, request: httpx.Request) -> httpx.Response:
        uri = str(request.url)
        self.requests.append(uri)
        route = self.routes.get(uri)
        if route is None:
            return httpx.Response(404, text="not found")
        if callable(route):
            result = route(request)
            if inspect.isawaitable(result):
                result = await result
            return result
        status, headers, body = route
        return httpx.Response(status, headers=headers, content=body)

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handler)


def make_pdf(title: str | None = None, author: str | None = None) -> bytes:
    """A one-page PDF whose Info dictionary carries the given Title and Author."""
    writer = PdfWriter()
    writer.add_blank_page(width=72, height=72)
    metadata = {}
    if title is not None:
        metadata["/Title"] = title
    if author is not None:
        metadata["/Author"] = author
    if metadata:
        writer.add_metadata(metadata)
    buffer = io.BytesIO()
    writer.write(buffer)
    return buffer.getvalue()
