"""Canonical-URI tracking, PURLs, and web-archive lookup and submission."""

import asyncio
import base64
import hashlib
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Callable
from urllib.parse import quote

import httpx

from .config import ArchiveServiceConfig, ContinuityConfig, FetchConfig
from .model import (
    ArchiveSnapshot,
    BibRecord,
    CanonicalEvent,
    CompletenessClass,
    GreyharvestError,
    Purl,
    classify,
    format_timestamp,
    host_of,
    normalize_uri,
    parse_timestamp,
    registrable_domain,
    utcnow,
)
from .store import Store

logger = logging.getLogger(__name__)

PURL_LENGTH = 12
ARCHIVE_TIMESTAMP = "%Y%m%d%H%M%S"


class UnknownPurl(GreyharvestError):
    def __init__(self, purl_id: str):
        self.purl_id = purl_id
        super().__init__(f"unknown purl: {purl_id}")


class SubmissionFailed(GreyharvestError):
    """An on-demand archive refused or never answered a submission."""

    def __init__(self, uri: str, service: str, status: int | None, message: str = ""):
        self.uri = uri
        self.service = service
        self.status = status
        detail = f": {message}" if message else ""
        super().__init__(f"{service} submission of {uri} failed ({status}){detail}")


class SubmissionOutcome(str, Enum):
    SUBMITTED = "submitted"
    ALREADY_SUBMITTED = "already_submitted"
    BELOW_THRESHOLD = "below_threshold"
    BACKING_OFF = "backing_off"
    FAILED = "failed"
    NO_SERVICE = "no_service"


@dataclass
class PassReport:
    """What one periodic continuity pass did."""

    uris: int = 0
    archive_checks: int = 0
    submissions: int = 0
    failures: int = 0
    purls: int = 0


def purl_id(uri: str) -> str:
    """Lowercase base32 of the URI's sha256, truncated."""
    digest = hashlib.sha256(uri.encode("utf-8")).digest()
    return base64.b32encode(digest).decode("ascii").lower()[:PURL_LENGTH]


def _dig(data: Any, path: str) -> Any:
    for part in path.split("."):
        if isinstance(data, dict):
            data = data.get(part)
        elif isinstance(data, list) and part.isdigit() and int(part) < len(data):
            data = data[int(part)]
        else:
            return None
    return data


def parse_archive_timestamp(value: Any) -> datetime | None:
    text = str(value).strip() if value is not None else ""
    if len(text) == 14 and text.isdigit():
        try:
            return datetime.strptime(text, ARCHIVE_TIMESTAMP).replace(tzinfo=timezone.utc)
        except ValueError:
            return None
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        return None
    return parsed if parsed.tzinfo else parsed.replace(tzinfo=timezone.utc)


def _in_domains(uri: str, domains: list[str]) -> bool:
    host = host_of(uri)
    return any(host == d or host.endswith("." + d) for d in domains)


class Continuity:
    """Keeps URIs citable over time; state lives in the store."""

    def __init__(
        self,
        store: Store,
        config: ContinuityConfig | None = None,
        fetch_config: FetchConfig | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        clock: Callable[[], datetime] = utcnow,
    ):
        self.store = store
        self.config = config or ContinuityConfig()
        fetch_config = fetch_config or FetchConfig()
        self.clock = clock
        self.client = httpx.AsyncClient(
            transport=transport,
            timeout=fetch_config.timeout,
            follow_redirects=True,
            headers={"User-Agent": fetch_config.user_agent},
        )

    # Canonical tracking and PURLs

    def observe_canonical(self, uri: str, record: BibRecord) -> CanonicalEvent | None:
        """Append an event when canonical status changes; otherwise extend the last one.

        Only the record's declared canonical URI counts; redirects are ignored.
        """
        key = normalize_uri(uri)
        canonical = record.canonical_uri
        was_canonical = canonical in (None, key)
        now = self.clock()

        events = self.store.get_events(key)
        if events:
            last = events[-1]
            unchanged = last.was_canonical == was_canonical and (
                was_canonical or last.canonical_uri == canonical
            )
            if unchanged:
                self.store.extend_last_event(key, now)
                return None

        event = CanonicalEvent(
            uri=key,
            canonical_uri=canonical,
            was_canonical=was_canonical,
            first_observed=now,
            last_observed=now,
        )
        self.store.append_event(key, event)
        if events:
            logger.info(f"canonical change for {key}: {canonical or 'self'}")
        return event

    def allocate_purl(self, uri: str, record: BibRecord) -> Purl | None:
        """A PURL for records with at least title, container, date and authors."""
        key = normalize_uri(uri)
        pid = purl_id(key)
        if existing := self.store.get_purl(pid):
            return existing
        if classify(record) < CompletenessClass.TCDA:
            return None
        purl = self.store.put_purl(Purl(id=pid, target_uri=key, created_at=self.clock()))
        logger.info(f"allocated purl {pid} for {key}")
        return purl

    def resolve_purl(self, pid: str) -> str:
        """Latest declared canonical URI, adopted only within the same registrable domain."""
        purl = self.store.get_purl(pid)
        if purl is None:
            raise UnknownPurl(pid)
        events = self.store.get_events(purl.target_uri)
        if not events or events[-1].was_canonical or not events[-1].canonical_uri:
            return purl.target_uri
        canonical = events[-1].canonical_uri
        if registrable_domain(host_of(canonical)) != registrable_domain(host_of(purl.target_uri)):
            logger.warning(f"not following cross-domain canonical {canonical} for {pid}")
            return purl.target_uri
        return canonical

    # Archives

    async def _lookup(self, service: ArchiveServiceConfig, key: str) -> ArchiveSnapshot | None:
        url = service.availability_url.format(uri=quote(key, safe=""))
        try:
            response = await self.client.get(url)
            response.raise_for_status()
            data = response.json()
        except (httpx.HTTPError, ValueError) as e:
            logger.warning(f"archive {service.service} unavailable for {key}: {e}")
            return None

        snapshot_uri = _dig(data, service.snapshot_path)
        snapshot_time = parse_archive_timestamp(_dig(data, service.timestamp_path))
        if not snapshot_uri or snapshot_time is None:
            return None
        if not _in_domains(snapshot_uri, service.domains):
            logger.warning(f"archive {service.service} answered off-domain {snapshot_uri}")
            return None
        return ArchiveSnapshot(service.service, snapshot_uri, snapshot_time)

    async def check_archives(self, uri: str) -> list[ArchiveSnapshot]:
        """Ask every configured archive for a snapshot; unreachable ones are skipped."""
        key = normalize_uri(uri)
        services = [s for s in self.config.archives if s.availability_url]
        results = await asyncio.gather(*(self._lookup(s, key) for s in services))
        found = [snapshot for snapshot in results if snapshot is not None]

        known = self.store.put_archives(key, found, self.clock())
        latest = self.store.get_latest(key)
        if latest is not None and set(latest.archives) != set(known):
            self.store.put_extraction(key, replace(latest, archives=tuple(known)))
            logger.info(f"archives for {key}: {len(known)} snapshots")
        return found

    async def _submit(self, service: ArchiveServiceConfig, key: str) -> None:
        url = service.submit_url.format(uri=quote(key, safe=""))
        try:
            response = await self.client.get(url)
        except httpx.HTTPError as e:
            raise SubmissionFailed(key, service.service, None, str(e)) from e
        if response.status_code >= 400:
            raise SubmissionFailed(key, service.service, response.status_code)

    def _backoff(self, attempts: int) -> timedelta:
        hours = self.config.backoff_base_hours * 2 ** (attempts - 1)
        return timedelta(hours=min(hours, self.config.backoff_cap_hours))

    async def submit_for_archiving(self, uri: str, record: BibRecord) -> SubmissionOutcome:
        """Submit complete records once to the on-demand archive; failures back off."""
        key = normalize_uri(uri)
        if classify(record) < CompletenessClass.TCDA:
            return SubmissionOutcome.BELOW_THRESHOLD

        state = self.store.get_submission(key) or {"uri": key, "attempts": 0}
        if state.get("submitted_at"):
            return SubmissionOutcome.ALREADY_SUBMITTED
        now = self.clock()
        if state.get("next_attempt_at") and now < parse_timestamp(state["next_attempt_at"]):
            return SubmissionOutcome.BACKING_OFF

        service = next((s for s in self.config.archives if s.submit_url), None)
        if service is None:
            return SubmissionOutcome.NO_SERVICE

        try:
            await self._submit(service, key)
        except SubmissionFailed as e:
            attempts = state.get("attempts", 0) + 1
            state.update(
                service=service.service,
                attempts=attempts,
                last_status=e.status,
                last_error=str(e),
                next_attempt_at=format_timestamp(now + self._backoff(attempts)),
            )
            self.store.put_submission(key, state)
            logger.warning(f"{e}; retry after {state['next_attempt_at']}")
            return SubmissionOutcome.FAILED

        state.update(
            service=service.service,
            attempts=state.get("attempts", 0) + 1,
            submitted_at=format_timestamp(now),
            next_attempt_at=None,
        )
        self.store.put_submission(key, state)
        logger.info(f"submitted {key} to {service.service}")
        return SubmissionOutcome.SUBMITTED

    # Scheduling

    async def run_periodic_pass(self) -> PassReport:
        """Re-check stale archive links, retry due submissions, allocate missing PURLs."""
        report = PassReport()
        recheck = timedelta(days=self.config.recheck_days)
        for uri in self.store.known_uris():
            report.uris += 1
            checked_at = self.store.get_archive_checked_at(uri)
            if checked_at is None or self.clock() - checked_at >= recheck:
                await self.check_archives(uri)
                report.archive_checks += 1

            record = self.store.get_latest(uri)
            if record is None:
                continue
            had_purl = self.store.get_purl(purl_id(uri)) is not None
            if not had_purl and self.allocate_purl(uri, record) is not None:
                report.purls += 1
            outcome = await self.submit_for_archiving(uri, record)
            if outcome == SubmissionOutcome.SUBMITTED:
                report.submissions += 1
            elif outcome == SubmissionOutcome.FAILED:
                report.failures += 1
        logger.info(f"continuity pass: {report}")
        return report

    async def run_forever(self, stop: asyncio.Event | None = None):
        stop = stop or asyncio.Event()
        interval = self.config.pass_interval_minutes * 60
        while not stop.is_set():
            try:
                await self.run_periodic_pass()
            except Exception:
                logger.exception("continuity pass failed")
            try:
                await asyncio.wait_for(stop.wait(), timeout=interval)
            except asyncio.TimeoutError:
                pass

    async def close(self):
        await self.client.aclose()
