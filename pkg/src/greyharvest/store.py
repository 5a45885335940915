"""Append-only on-disk store for records, feed fragments and continuity state.

Layout under the data directory, with <key> the sha256 hex digest of the
normalized URI:

    records/<key>/00000001.json   one file per record version
    feeds/<key>.json              every feed fragment ever seen for the URI
    events/<key>.json             canonical-status event history
    archives/<key>.json           known archive snapshots and last check time
    submissions/<key>.json        on-demand archive submission attempts
    purls/<id>.json               allocated PURLs

Every value is canonical JSON (sorted keys, UTF-8). Files are written to a
temporary name and renamed into place.
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .config import StoreConfig
from .model import (
    ArchiveSnapshot,
    BibRecord,
    CanonicalEvent,
    GreyharvestError,
    MetadataFragment,
    Purl,
    event_from_dict,
    event_to_dict,
    format_timestamp,
    fragment_from_dict,
    fragment_to_dict,
    parse_timestamp,
    purl_from_dict,
    purl_to_dict,
    record_from_dict,
    record_to_dict,
    snapshot_from_dict,
    snapshot_to_dict,
)

logger = logging.getLogger(__name__)

VERSION_WIDTH = 8


class StoreError(GreyharvestError):
    """Reading or writing the data directory failed."""

    def __init__(self, path: Path, message: str, original_error: Exception | None = None):
        self.path = path
        self.original_error = original_error
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class RecordVersion:
    version: int
    digest: str
    prev_digest: str | None
    record: BibRecord


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def uri_key(uri: str) -> str:
    return hashlib.sha256(uri.encode("utf-8")).hexdigest()


def _digest(version: int, prev_digest: str | None, record: dict) -> str:
    payload = canonical_json({"version": version, "prev_digest": prev_digest, "record": record})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _fragment_identity(fragment: MetadataFragment) -> str:
    data = fragment_to_dict(fragment)
    data.pop("observed_at")
    data.pop("score")
    return canonical_json(data)


class Store:
    """File-backed store; one writer per key, any number of readers."""

    def __init__(self, config: StoreConfig | None = None, data_dir: Path | str | None = None):
        config = config or StoreConfig()
        self.root = Path(data_dir or config.data_dir).expanduser()
        self._locks: dict[tuple[str, str], threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock(self, kind: str, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[(kind, key)]

    # Low-level IO

    def _write(self, path: Path, data) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as f:
                    f.write(canonical_json(data))
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        except OSError as e:
            raise StoreError(path, f"write failed: {e}", e) from e

    def _read(self, path: Path, default=None):
        try:
            with open(path, encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError:
            return default
        except (OSError, json.JSONDecodeError) as e:
            raise StoreError(path, f"read failed: {e}", e) from e

    def _path(self, kind: str, uri: str) -> Path:
        return self.root / kind / f"{uri_key(uri)}.json"

    # Records

    def _record_dir(self, uri: str) -> Path:
        return self.root / "records" / uri_key(uri)

    def _version_files(self, uri: str) -> list[Path]:
        directory = self._record_dir(uri)
        if not directory.is_dir():
            return []
        files = [p for p in directory.glob("*.json") if p.stem.isdigit()]
        return sorted(files, key=lambda p: int(p.stem))

    def put_extraction(self, uri: str, record: BibRecord) -> int:
        """Append a new immutable version; returns its 1-based version id."""
        if record.uri != uri:
            raise ValueError(f"record is for {record.uri}, not {uri}")
        with self._lock("records", uri):
            files = self._version_files(uri)
            prev_digest = None
            version = 1
            if files:
                last = self._read(files[-1])
                prev_digest = last["digest"]
                version = last["version"] + 1
            data = record_to_dict(record)
            digest = _digest(version, prev_digest, data)
            path = self._record_dir(uri) / f"{version:0{VERSION_WIDTH}d}.json"
            self._write(
                path,
                {
                    "version": version,
                    "digest": digest,
                    "prev_digest": prev_digest,
                    "record": data,
                },
            )
        logger.debug(f"stored {uri} v{version}")
        return version

    def get_latest(self, uri: str) -> BibRecord | None:
        files = self._version_files(uri)
        if not files:
            return None
        return record_from_dict(self._read(files[-1])["record"])

    def get_history(self, uri: str) -> list[RecordVersion]:
        history = []
        for path in self._version_files(uri):
            data = self._read(path)
            history.append(
                RecordVersion(
                    version=data["version"],
                    digest=data["digest"],
                    prev_digest=data["prev_digest"],
                    record=record_from_dict(data["record"]),
                )
            )
        return history

    def verify_history(self, uri: str) -> bool:
        """Re-walk the digest chain; False on any gap, edit or broken link."""
        prev_digest = None
        for expected, path in enumerate(self._version_files(uri), start=1):
            data = self._read(path)
            if data["version"] != expected or data["prev_digest"] != prev_digest:
                logger.warning(f"history chain broken at {path}")
                return False
            if _digest(data["version"], data["prev_digest"], data["record"]) != data["digest"]:
                logger.warning(f"history digest mismatch at {path}")
                return False
            prev_digest = data["digest"]
        return True

    def known_uris(self) -> list[str]:
        """Every URI with at least one stored record."""
        base = self.root / "records"
        if not base.is_dir():
            return []
        uris = []
        for directory in sorted(base.iterdir()):
            files = sorted(directory.glob("*.json"))
            if files:
                uris.append(self._read(files[0])["record"]["uri"])
        return uris

    # Feed fragments

    def put_feed_fragment(self, entry_uri: str, fragment: MetadataFragment) -> None:
        """Keep a feed entry's fragment forever; identical claims only refresh observed_at."""
        path = self._path("feeds", entry_uri)
        with self._lock("feeds", entry_uri):
            stored = [fragment_from_dict(d) for d in self._read(path, default=[])]
            identity = _fragment_identity(fragment)
            for index, existing in enumerate(stored):
                if _fragment_identity(existing) == identity:
                    if fragment.observed_at > existing.observed_at:
                        stored[index] = fragment
                    break
            else:
                stored.append(fragment)
            self._write(path, [fragment_to_dict(f) for f in stored])

    def get_feed_fragments(self, uri: str) -> list[MetadataFragment]:
        return [fragment_from_dict(d) for d in self._read(self._path("feeds", uri), default=[])]

    # Canonical events

    def get_events(self, uri: str) -> list[CanonicalEvent]:
        return [event_from_dict(d) for d in self._read(self._path("events", uri), default=[])]

    def append_event(self, uri: str, event: CanonicalEvent) -> None:
        path = self._path("events", uri)
        with self._lock("events", uri):
            events = self._read(path, default=[])
            events.append(event_to_dict(event))
            self._write(path, events)

    def extend_last_event(self, uri: str, observed_at: datetime) -> CanonicalEvent | None:
        """Push the latest event's last_observed forward; no-op without events."""
        path = self._path("events", uri)
        with self._lock("events", uri):
            events = self._read(path, default=[])
            if not events:
                return None
            last = event_from_dict(events[-1])
            if observed_at > last.last_observed:
                events[-1]["last_observed"] = format_timestamp(observed_at)
                self._write(path, events)
            return event_from_dict(events[-1])

    # PURLs

    def get_purl(self, purl_id: str) -> Purl | None:
        data = self._read(self.root / "purls" / f"{purl_id}.json")
        return purl_from_dict(data) if data else None

    def put_purl(self, purl: Purl) -> Purl:
        """Store a PURL unless one with the same id exists; returns the stored one."""
        path = self.root / "purls" / f"{purl.id}.json"
        with self._lock("purls", purl.id):
            if existing := self._read(path):
                return purl_from_dict(existing)
            self._write(path, purl_to_dict(purl))
        return purl

    # Archives

    def get_archives(self, uri: str) -> list[ArchiveSnapshot]:
        data = self._read(self._path("archives", uri), default={})
        return [snapshot_from_dict(s) for s in data.get("snapshots", [])]

    def get_archive_checked_at(self, uri: str) -> datetime | None:
        data = self._read(self._path("archives", uri), default={})
        return parse_timestamp(data["checked_at"]) if data.get("checked_at") else None

    def put_archives(
        self, uri: str, snapshots: list[ArchiveSnapshot], checked_at: datetime
    ) -> list[ArchiveSnapshot]:
        """Merge snapshots by (service, snapshot_uri); returns the full known set."""
        path = self._path("archives", uri)
        with self._lock("archives", uri):
            data = self._read(path, default={})
            known = {
                (s.service, s.snapshot_uri): s
                for s in (snapshot_from_dict(d) for d in data.get("snapshots", []))
            }
            for snapshot in snapshots:
                known.setdefault((snapshot.service, snapshot.snapshot_uri), snapshot)
            merged = sorted(known.values(), key=lambda s: (s.service, s.snapshot_time))
            self._write(
                path,
                {
                    "uri": uri,
                    "checked_at": format_timestamp(checked_at),
                    "snapshots": [snapshot_to_dict(s) for s in merged],
                },
            )
        return merged

    # Submissions

    def get_submission(self, uri: str) -> dict | None:
        return self._read(self._path("submissions", uri))

    def put_submission(self, uri: str, data: dict) -> None:
        with self._lock("submissions", uri):
            self._write(self._path("submissions", uri), data)
