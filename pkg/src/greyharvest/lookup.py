"""Shared lookup path for the REST service, the CLI and the MCP tools."""

import asyncio
import logging
from datetime import datetime, timedelta
from typing import Callable

import httpx

from .config import Config, get_config
from .continuity import Continuity
from .fetcher import Fetcher
from .model import (
    ArchiveSnapshot,
    BibRecord,
    Purl,
    classify,
    format_timestamp,
    normalize_uri,
    utcnow,
)
from .resolver import Resolver
from .store import RecordVersion, Store

logger = logging.getLogger(__name__)


def version_summary(version: RecordVersion) -> dict:
    record = version.record
    return {
        "version": version.version,
        "digest": version.digest,
        "prev_digest": version.prev_digest,
        "retrieved_at": format_timestamp(record.retrieved_at),
        "class": classify(record).name,
        "title": record.title,
        "canonical_uri": record.canonical_uri,
    }


class Harvester:
    """Store, resolver and continuity wired together, with cache-then-resolve lookups."""

    def __init__(
        self,
        config: Config | None = None,
        store: Store | None = None,
        resolver: Resolver | None = None,
        continuity: Continuity | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        clock: Callable[[], datetime] = utcnow,
    ):
        self.config = config or get_config()
        self.clock = clock
        self.store = store or Store(self.config.store)
        self.resolver = resolver or Resolver(
            self.config,
            store=self.store,
            fetcher=Fetcher(self.config.fetch, transport=transport, clock=clock),
            clock=clock,
        )
        self.continuity = continuity or Continuity(
            self.store,
            self.config.continuity,
            self.config.fetch,
            transport=transport,
            clock=clock,
        )
        self._pending: dict[str, asyncio.Task] = {}
        self._background: set[asyncio.Task] = set()

    @property
    def refresh_window(self) -> timedelta:
        return timedelta(hours=self.config.service.refresh_hours)

    async def refresh(self, uri: str, background: bool = False) -> BibRecord:
        """Resolve now and record canonical status; callers for the same URI share one run."""
        key = normalize_uri(uri)
        task = self._pending.get(key)
        if task is None:
            task = asyncio.ensure_future(self._refresh(key, background))
            self._pending[key] = task

            def _done(finished, key=key):
                if self._pending.get(key) is finished:
                    del self._pending[key]

            task.add_done_callback(_done)
        return await asyncio.shield(task)

    async def _refresh(self, key: str, background: bool) -> BibRecord:
        record = await self.resolver.resolve(key, background=background)
        self.continuity.observe_canonical(key, record)
        self.continuity.allocate_purl(key, record)
        return record

    async def lookup(self, uri: str, timeout: float | None = None) -> BibRecord:
        """Stored record if there is one, resolving synchronously otherwise.

        Records older than the refresh window are still served; a background
        refresh is started for them.
        """
        key = normalize_uri(uri)
        record = self.store.get_latest(key)
        if record is None:
            if timeout is None:
                return await self.refresh(key)
            return await asyncio.wait_for(self.refresh(key), timeout=timeout)
        if self.clock() - record.retrieved_at >= self.refresh_window:
            self._refresh_later(key)
        return record

    def _refresh_later(self, key: str) -> None:
        if key in self._pending:
            return
        logger.info(f"refreshing stale record {key}")
        task = asyncio.ensure_future(self.refresh(key, background=True))
        self._background.add(task)

        def _done(finished):
            self._background.discard(finished)
            if not finished.cancelled() and finished.exception() is not None:
                logger.warning(f"background refresh of {key} failed: {finished.exception()}")

        task.add_done_callback(_done)

    async def drain(self) -> None:
        """Wait for background refreshes to finish."""
        if self._background:
            await asyncio.gather(*list(self._background), return_exceptions=True)

    async def _cancel_all(self) -> None:
        tasks = [*self._background, *self._pending.values()]
        for task in tasks:
            task.cancel()
        if tasks:
            await asyncio.gather(*tasks, return_exceptions=True)

    def history(self, uri: str) -> list[dict]:
        return [version_summary(v) for v in self.store.get_history(normalize_uri(uri))]

    async def archives(self, uri: str) -> list[ArchiveSnapshot]:
        key = normalize_uri(uri)
        await self.lookup(key)
        return self.store.get_archives(key)

    async def purl(self, uri: str) -> Purl | None:
        key = normalize_uri(uri)
        record = await self.lookup(key)
        return self.continuity.allocate_purl(key, record)

    async def close(self) -> None:
        await self._cancel_all()
        await self.resolver.close()
        await self.continuity.close()
