"""HTTP fetcher with redirect capture, media-type detection and per-host politeness."""

import asyncio
import logging
import re
from collections import defaultdict
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import urlsplit
from urllib.robotparser import RobotFileParser

import httpx

from .config import FetchConfig
from .model import GreyharvestError, normalize_uri, utcnow

logger = logging.getLogger(__name__)

SNIFF_BYTES = 1024
REDIRECT_CODES = {301, 302, 303, 307, 308}


class FetchError(GreyharvestError):
    """Fetching a URI failed."""

    def __init__(self, uri: str, message: str):
        self.uri = uri
        super().__init__(f"{uri}: {message}")


class NetworkError(FetchError):
    """Connect failure or timeout."""


class TooManyRedirects(FetchError):
    """Redirect chain exceeded the limit."""


class BodyTooLarge(FetchError):
    """Response body exceeded the configured cap."""


class RobotsDisallowed(FetchError):
    """robots.txt forbids a background fetch."""


class HttpError(FetchError):
    """Upstream answered with status >= 400."""

    def __init__(self, uri: str, status: int):
        self.status = status
        super().__init__(uri, f"HTTP {status}")


class MediaType(str, Enum):
    HTML = "html"
    XML_FEED = "xml_feed"
    PDF = "pdf"
    OTHER = "other"


_HEADER_TYPES = {
    "text/html": MediaType.HTML,
    "application/xhtml+xml": MediaType.HTML,
    "application/pdf": MediaType.PDF,
    "application/rss+xml": MediaType.XML_FEED,
    "application/atom+xml": MediaType.XML_FEED,
}
_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?\s*([A-Za-z0-9._:-]+)""", re.I)
_FEED_ROOT = re.compile(rb"<(?:[A-Za-z0-9_-]+:)?(rss|feed)[\s>]")


def _header(headers: Mapping[str, str] | Iterable[tuple[str, str]], name: str) -> str | None:
    items = headers.items() if isinstance(headers, Mapping) else headers
    for key, value in items:
        if key.lower() == name:
            return value
    return None


def detect_media_type(
    headers: Mapping[str, str] | Iterable[tuple[str, str]], body_prefix: bytes
) -> tuple[MediaType, str]:
    """Route a response: Content-Type wins when recognized, otherwise sniff the body."""
    content_type = _header(headers, "content-type") or ""
    mime, _, params = content_type.partition(";")
    mime = mime.strip().lower()

    charset = None
    for param in params.split(";"):
        key, _, value = param.partition("=")
        if key.strip().lower() == "charset" and value.strip():
            charset = value.strip().strip("\"'").lower()

    media_type = _HEADER_TYPES.get(mime)
    if media_type is None:
        prefix = body_prefix[:SNIFF_BYTES].lstrip(b"\xef\xbb\xbf \t\r\n")
        lowered = prefix.lower()
        if prefix.startswith(b"%PDF"):
            media_type = MediaType.PDF
        elif (lowered.startswith(b"<?xml") or lowered.startswith((b"<rss", b"<feed"))) and (
            _FEED_ROOT.search(prefix)
        ):
            media_type = MediaType.XML_FEED
        elif b"<html" in lowered or b"<!doctype html" in lowered:
            media_type = MediaType.HTML
        else:
            media_type = MediaType.OTHER

    if charset is None and media_type == MediaType.HTML:
        if match := _META_CHARSET.search(body_prefix[:SNIFF_BYTES]):
            charset = match.group(1).decode("ascii").lower()

    return media_type, charset or "utf-8"


@dataclass(frozen=True)
class SourceDocument:
    """A fetched resource ready for extraction."""

    request_uri: str
    final_uri: str
    media_type: MediaType
    charset: str
    body: bytes
    fetched_at: datetime
    redirect_chain: tuple[tuple[int, str], ...] = ()
    headers: tuple[tuple[str, str], ...] = field(default=())

    def header(self, name: str) -> str | None:
        return _header(self.headers, name.lower())

    @cached_property
    def text(self) -> str:
        """Body transcoded to text; undecodable bytes are replaced."""
        try:
            return self.body.decode(self.charset, errors="replace")
        except LookupError:
            return self.body.decode("utf-8", errors="replace")

    @property
    def uris(self) -> frozenset[str]:
        return frozenset({self.request_uri, self.final_uri})

    @classmethod
    def from_bytes(
        cls,
        uri: str,
        body: bytes,
        headers: Iterable[tuple[str, str]] = (),
        fetched_at: datetime | None = None,
    ) -> "SourceDocument":
        """Build a document without fetching (offline extraction, tests)."""
        headers = tuple((k.lower(), v) for k, v in headers)
        media_type, charset = detect_media_type(headers, body[:SNIFF_BYTES])
        key = normalize_uri(uri)
        return cls(
            request_uri=key,
            final_uri=key,
            media_type=media_type,
            charset=charset,
            body=body,
            fetched_at=fetched_at or utcnow(),
            headers=headers,
        )

    @classmethod
    def from_file(
        cls, path: Path, uri: str, fetched_at: datetime | None = None
    ) -> "SourceDocument":
        return cls.from_bytes(uri, Path(path).read_bytes(), fetched_at=fetched_at)


class Fetcher:
    """Async fetcher; serializes requests per host and spaces them out."""

    def __init__(
        self,
        config: FetchConfig | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        clock: Callable[[], datetime] = utcnow,
    ):
        self.config = config or FetchConfig()
        self.clock = clock
        self.client = httpx.AsyncClient(
            transport=transport,
            follow_redirects=False,
            timeout=self.config.timeout,
            headers={"User-Agent": self.config.user_agent, "Accept-Encoding": "gzip"},
        )
        self._host_locks: dict[str, asyncio.Lock] = defaultdict(asyncio.Lock)
        self._last_request: dict[str, float] = defaultdict(lambda: float("-inf"))
        self._robots: dict[str, RobotFileParser | None] = {}

    @asynccontextmanager
    async def _host_slot(self, host: str):
        loop = asyncio.get_running_loop()
        async with self._host_locks[host]:
            wait = self._last_request[host] + self.config.per_host_delay - loop.time()
            if wait > 0:
                logger.debug(f"politeness wait {wait:.2f}s: {host}")
                await asyncio.sleep(wait)
            try:
                yield
            finally:
                self._last_request[host] = loop.time()

    async def fetch(self, uri: str, background: bool = False) -> SourceDocument:
        """Fetch a normalized URI, following and recording up to max_redirects hops."""
        try:
            return await asyncio.wait_for(self._fetch(uri, background), self.config.timeout)
        except asyncio.TimeoutError as e:
            raise NetworkError(uri, f"timeout after {self.config.timeout}s") from e

    async def _fetch(self, uri: str, background: bool) -> SourceDocument:
        request_uri = normalize_uri(uri)
        current = request_uri
        chain: list[tuple[int, str]] = []

        while True:
            if background and self.config.respect_robots and not await self._allowed(current):
                raise RobotsDisallowed(current, "disallowed by robots.txt")

            host = urlsplit(current).netloc
            async with self._host_slot(host):
                logger.info(f"fetch {current}")
                status, headers, body, location = await self._get(current)

            if status in REDIRECT_CODES:
                if not location:
                    raise FetchError(current, "redirect without location")
                try:
                    target = normalize_uri(location, base=current)
                except ValueError as e:
                    raise FetchError(current, f"bad redirect location {location!r}") from e
                chain.append((status, target))
                if len(chain) > self.config.max_redirects:
                    raise TooManyRedirects(request_uri, f"more than {self.config.max_redirects}")
                current = target
                continue

            if status >= 400:
                raise HttpError(current, status)

            media_type, charset = detect_media_type(headers, body[:SNIFF_BYTES])
            return SourceDocument(
                request_uri=request_uri,
                final_uri=current,
                media_type=media_type,
                charset=charset,
                body=body,
                fetched_at=self.clock(),
                redirect_chain=tuple(chain),
                headers=headers,
            )

    async def _get(self, uri: str) -> tuple[int, tuple[tuple[str, str], ...], bytes, str | None]:
        cap = self.config.max_body_bytes
        try:
            async with self.client.stream("GET", uri) as response:
                headers = tuple((k.lower(), v) for k, v in response.headers.multi_items())
                if response.status_code in REDIRECT_CODES or response.status_code >= 400:
                    return response.status_code, headers, b"", response.headers.get("location")

                declared = response.headers.get("content-length", "")
                if declared.isdigit() and int(declared) > cap:
                    raise BodyTooLarge(uri, f"declared {declared} bytes > {cap}")

                chunks = bytearray()
                async for chunk in response.aiter_bytes():
                    chunks.extend(chunk)
                    if len(chunks) > cap:
                        raise BodyTooLarge(uri, f"body exceeds {cap} bytes")
                return response.status_code, headers, bytes(chunks), None
        except httpx.TransportError as e:
            logger.warning(f"fetch failed {uri}: {e}")
            raise NetworkError(uri, str(e) or type(e).__name__) from e

    async def _allowed(self, uri: str) -> bool:
        parts = urlsplit(uri)
        origin = f"{parts.scheme}://{parts.netloc}"
        if origin not in self._robots:
            parser = None
            try:
                response = await self.client.get(f"{origin}/robots.txt")
                if response.status_code == 200:
                    parser = RobotFileParser()
                    parser.parse(response.text.splitlines())
            except httpx.HTTPError as e:
                logger.debug(f"robots.txt unavailable for {origin}: {e}")
            self._robots[origin] = parser
        parser = self._robots[origin]
        return parser is None or parser.can_fetch(self.config.user_agent, uri)

    async def close(self):
        await self.client.aclose()
