"""Bibliographic data model, URI normalization and completeness classes."""

import calendar
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Any
from urllib.parse import urljoin, urlsplit, urlunsplit

import tldextract


class GreyharvestError(Exception):
    """Base error for greyharvest."""


class MalformedUri(GreyharvestError, ValueError):
    """URI could not be parsed."""

    def __init__(self, raw: str, reason: str = "unparseable"):
        self.raw = raw
        super().__init__(f"malformed uri ({reason}): {raw!r}")


class UnsupportedScheme(GreyharvestError, ValueError):
    """URI scheme is not http or https."""

    def __init__(self, raw: str, scheme: str):
        self.raw = raw
        self.scheme = scheme
        super().__init__(f"unsupported scheme {scheme!r}: {raw!r}")


class Field(str, Enum):
    """The five bibliographic fields a fragment can claim."""

    TITLE = "title"
    AUTHORS = "authors"
    ISSUED = "issued"
    CONTAINER = "container"
    CANONICAL_URI = "canonical_uri"


class SourceKind(str, Enum):
    """Where a fragment came from.

    Declaration order is the merge tie-break order: earlier members win ties.
    """

    GOOGLE_SCHOLAR = "google_scholar"
    EPRINTS = "eprints"
    DUBLIN_CORE = "dublin_core"
    COINS = "coins"
    OGP = "ogp"
    W3C = "w3c"
    CEUR_WS = "ceur-ws"
    WORLDCAT = "worldcat"
    ORCID = "orcid"
    OPENLIBRARY = "openlibrary"
    SCIENCEDIRECT = "sciencedirect"
    MENDELEY = "mendeley"
    RSS = "rss"
    ATOM = "atom"
    PRISM = "prism"
    SCHEMA_ORG = "schema_org"
    GENERIC_META = "meta"
    PDF = "pdf"
    TWITTER = "twitter"
    HTML_TITLE = "html_title"
    SIBLING_INFERENCE = "sibling_inference"
    URI_DATE = "uri_date"

    @property
    def order(self) -> int:
        return _SOURCE_ORDER[self]


_SOURCE_ORDER = {kind: index for index, kind in enumerate(SourceKind)}

T, A, D, C, I = (Field.TITLE, Field.AUTHORS, Field.ISSUED, Field.CONTAINER, Field.CANONICAL_URI)

# Field letters each source may ever emit.
GRANTED_FIELDS: dict[SourceKind, frozenset[Field]] = {
    SourceKind.GOOGLE_SCHOLAR: frozenset({T, C, D, A}),
    SourceKind.EPRINTS: frozenset({T, C, D, A}),
    SourceKind.DUBLIN_CORE: frozenset({T, C, D, A}),
    SourceKind.COINS: frozenset({T, C, D, A, I}),
    SourceKind.OGP: frozenset({T, C, D, A, I}),
    SourceKind.W3C: frozenset({T, C, D, A, I}),
    SourceKind.CEUR_WS: frozenset({T, C, D, A}),
    SourceKind.WORLDCAT: frozenset({T, D, A}),
    SourceKind.ORCID: frozenset({T, C, A}),
    SourceKind.OPENLIBRARY: frozenset({T, C, D, I}),
    SourceKind.SCIENCEDIRECT: frozenset({T, C, D}),
    SourceKind.MENDELEY: frozenset({T, C, D, A}),
    SourceKind.RSS: frozenset({T, C, D, A, I}),
    SourceKind.ATOM: frozenset({T, C, D, A, I}),
    SourceKind.PRISM: frozenset({C, D}),
    SourceKind.SCHEMA_ORG: frozenset({T, D}),
    SourceKind.GENERIC_META: frozenset({T, C, D, A}),
    SourceKind.PDF: frozenset({T, A}),
    SourceKind.TWITTER: frozenset({T, C, A, I}),
    SourceKind.HTML_TITLE: frozenset({T}),
    SourceKind.SIBLING_INFERENCE: frozenset({C, A}),
    SourceKind.URI_DATE: frozenset({D}),
}


class CompletenessClass(IntEnum):
    """How much of T/C/D/A(/I) a record carries. Ordered."""

    NONE = 0
    PARTIAL = 1
    TCDA = 2
    TCDAI = 3


@dataclass(frozen=True)
class Person:
    """An author as found, optionally split into given/family."""

    literal: str
    family: str | None = None
    given: str | None = None

    def __post_init__(self):
        if not self.literal or self.literal != self.literal.strip():
            raise ValueError(f"person literal must be non-empty trimmed text: {self.literal!r}")

    @classmethod
    def from_literal(cls, text: str) -> "Person":
        """Split "Family, Given" on the first comma, else "Given Family" on the last space."""
        literal = " ".join(text.split())
        if not literal:
            raise ValueError("empty author literal")
        if "," in literal:
            family, _, given = literal.partition(",")
            family, given = family.strip(), given.strip()
            if family:
                return cls(literal, family=family, given=given or None)
            return cls(literal)
        tokens = literal.split(" ")
        if len(tokens) >= 2:
            return cls(literal, family=tokens[-1], given=" ".join(tokens[:-1]))
        return cls(literal)


@dataclass(frozen=True)
class PartialDate:
    """A date known to year, month or day precision."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if not 1000 <= self.year <= 9999:
            raise ValueError(f"year out of range: {self.year}")
        if self.day is not None and self.month is None:
            raise ValueError("day without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None:
            last = calendar.monthrange(self.year, self.month)[1]
            if not 1 <= self.day <= last:
                raise ValueError(f"invalid day: {self.year}-{self.month}-{self.day}")

    @property
    def parts(self) -> list[int]:
        return [p for p in (self.year, self.month, self.day) if p is not None]

    def isoformat(self) -> str:
        return "-".join(f"{p:02d}" if i else f"{p:04d}" for i, p in enumerate(self.parts))


@dataclass(frozen=True)
class ArchiveSnapshot:
    """An archive service's copy of a URI."""

    service: str
    snapshot_uri: str
    snapshot_time: datetime


@dataclass(frozen=True)
class CanonicalEvent:
    """An interval during which a URI's canonical status held steady."""

    uri: str
    canonical_uri: str | None
    was_canonical: bool
    first_observed: datetime
    last_observed: datetime

    def __post_init__(self):
        if self.first_observed > self.last_observed:
            raise ValueError("first_observed after last_observed")
        if self.was_canonical != (self.canonical_uri in (None, self.uri)):
            raise ValueError("was_canonical disagrees with canonical_uri")


@dataclass(frozen=True)
class Purl:
    """A persistent identifier redirecting to a URI's last known location."""

    id: str
    target_uri: str
    created_at: datetime


@dataclass(frozen=True)
class MetadataFragment:
    """One source's partial claim about a document's bibliographic fields.

    `subject` is set when the claim is about a URI other than the document
    it was read from (feed entries, PDFs described by an index page).
    `author_pages` carries OGP article:author URIs for a secondary fetch.
    """

    source: SourceKind
    observed_at: datetime
    title: str | None = None
    authors: tuple[Person, ...] = ()
    issued: PartialDate | None = None
    container: str | None = None
    canonical_uri: str | None = None
    score: int = 0
    subject: str | None = None
    author_pages: tuple[str, ...] = ()

    def get(self, name: Field) -> Any:
        value = getattr(self, name.value)
        return value or None

    @property
    def fields(self) -> frozenset[Field]:
        return frozenset(f for f in Field if self.get(f) is not None)

    def is_empty(self) -> bool:
        return not self.fields and not self.author_pages


@dataclass(frozen=True)
class BibRecord:
    """The merged bibliographic result for one URI."""

    uri: str
    retrieved_at: datetime
    canonical_uri: str | None = None
    title: str | None = None
    authors: tuple[Person, ...] = ()
    issued: PartialDate | None = None
    container: str | None = None
    archives: tuple[ArchiveSnapshot, ...] = ()
    provenance: dict[Field, SourceKind] = field(default_factory=dict)

    def get(self, name: Field) -> Any:
        value = getattr(self, name.value)
        return value or None

    @property
    def link(self) -> str:
        return self.canonical_uri or self.uri


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


_PERCENT = re.compile(r"%[0-9a-fA-F]{2}")
_DEFAULT_PORTS = {"http": 80, "https": 443}


def _remove_dot_segments(path: str) -> str:
    output: list[str] = []
    for segment in path.split("/"):
        if segment == "..":
            if len(output) > 1:
                output.pop()
        elif segment != ".":
            output.append(segment)
    result = "/".join(output)
    if path.endswith(("/.", "/..")):
        result += "/"
    return result if result.startswith("/") else "/" + result


def normalize_uri(raw: str, base: str | None = None) -> str:
    """Normalize an http(s) URI into its lookup-key form.

    Lowercases scheme and host, drops default ports and the fragment,
    uppercases percent-escapes in the path, resolves dot segments and keeps
    the query byte-exact.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedUri(str(raw), "empty")
    text = raw.strip()
    try:
        if base is not None:
            text = urljoin(base, text)
        parts = urlsplit(text)
        port = parts.port
    except ValueError as e:
        raise MalformedUri(raw, str(e)) from e

    scheme = parts.scheme.lower()
    if not scheme:
        raise MalformedUri(raw, "no scheme")
    if scheme not in _DEFAULT_PORTS:
        raise UnsupportedScheme(raw, scheme)

    host = (parts.hostname or "").lower()
    if not host or any(ch.isspace() for ch in host):
        raise MalformedUri(raw, "no host")
    if ":" in host:
        host = f"[{host}]"

    userinfo = ""
    if "@" in parts.netloc:
        userinfo = parts.netloc.rsplit("@", 1)[0] + "@"
    netloc = userinfo + host
    if port is not None and port != _DEFAULT_PORTS[scheme]:
        netloc += f":{port}"

    path = _PERCENT.sub(lambda m: m.group(0).upper(), parts.path)
    path = _remove_dot_segments(path) if path else "/"
    return urlunsplit((scheme, netloc, path, parts.query, ""))


_TLD = tldextract.TLDExtract(cache_dir=None, suffix_list_urls=())


def host_of(uri: str) -> str:
    return (urlsplit(uri).hostname or "").lower()


def domain_label(host: str) -> str:
    """"example" for www.example.org.uk."""
    return _TLD(host).domain or host


def registrable_domain(host: str) -> str:
    """"example.org.uk" for www.example.org.uk; the host itself without a public suffix."""
    parts = _TLD(host)
    if parts.domain and parts.suffix:
        return f"{parts.domain}.{parts.suffix}"
    return host.lower()


def classify(record: BibRecord) -> CompletenessClass:
    """Classify a record by which of T/C/D/A(/I) it carries."""
    present = [record.get(f) is not None for f in (T, C, D, A)]
    if all(present):
        if record.canonical_uri:
            return CompletenessClass.TCDAI
        return CompletenessClass.TCDA
    if any(present):
        return CompletenessClass.PARTIAL
    return CompletenessClass.NONE


# Canonical JSON encoding, shared by the store and the surfaces.


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


def parse_timestamp(value: str) -> datetime:
    return datetime.fromisoformat(value)


def person_to_dict(person: Person) -> dict:
    data: dict[str, str] = {"literal": person.literal}
    if person.family:
        data["family"] = person.family
    if person.given:
        data["given"] = person.given
    return data


def person_from_dict(data: dict) -> Person:
    return Person(data["literal"], family=data.get("family"), given=data.get("given"))


def date_from_parts(parts: list[int]) -> PartialDate:
    return PartialDate(*parts)


def snapshot_to_dict(snapshot: ArchiveSnapshot) -> dict:
    return {
        "service": snapshot.service,
        "snapshot_uri": snapshot.snapshot_uri,
        "snapshot_time": format_timestamp(snapshot.snapshot_time),
    }


def snapshot_from_dict(data: dict) -> ArchiveSnapshot:
    return ArchiveSnapshot(
        data["service"], data["snapshot_uri"], parse_timestamp(data["snapshot_time"])
    )


def record_to_dict(record: BibRecord) -> dict:
    """BibRecord -> dict"""
    return {
        "uri": record.uri,
        "canonical_uri": record.canonical_uri,
        "title": record.title,
        "authors": [person_to_dict(p) for p in record.authors],
        "issued": record.issued.parts if record.issued else None,
        "container": record.container,
        "archives": [snapshot_to_dict(s) for s in record.archives],
        "provenance": {f.value: s.value for f, s in record.provenance.items()},
        "retrieved_at": format_timestamp(record.retrieved_at),
    }


def record_from_dict(data: dict) -> BibRecord:
    return BibRecord(
        uri=data["uri"],
        retrieved_at=parse_timestamp(data["retrieved_at"]),
        canonical_uri=data.get("canonical_uri"),
        title=data.get("title"),
        authors=tuple(person_from_dict(p) for p in data.get("authors") or []),
        issued=date_from_parts(data["issued"]) if data.get("issued") else None,
        container=data.get("container"),
        archives=tuple(snapshot_from_dict(s) for s in data.get("archives") or []),
        provenance={Field(k): SourceKind(v) for k, v in (data.get("provenance") or {}).items()},
    )


def fragment_to_dict(fragment: MetadataFragment) -> dict:
    return {
        "source": fragment.source.value,
        "observed_at": format_timestamp(fragment.observed_at),
        "title": fragment.title,
        "authors": [person_to_dict(p) for p in fragment.authors],
        "issued": fragment.issued.parts if fragment.issued else None,
        "container": fragment.container,
        "canonical_uri": fragment.canonical_uri,
        "score": fragment.score,
        "subject": fragment.subject,
    }


def fragment_from_dict(data: dict) -> MetadataFragment:
    return MetadataFragment(
        source=SourceKind(data["source"]),
        observed_at=parse_timestamp(data["observed_at"]),
        title=data.get("title"),
        authors=tuple(person_from_dict(p) for p in data.get("authors") or []),
        issued=date_from_parts(data["issued"]) if data.get("issued") else None,
        container=data.get("container"),
        canonical_uri=data.get("canonical_uri"),
        score=data.get("score", 0),
        subject=data.get("subject"),
    )


def event_to_dict(event: CanonicalEvent) -> dict:
    return {
        "uri": event.uri,
        "canonical_uri": event.canonical_uri,
        "was_canonical": event.was_canonical,
        "first_observed": format_timestamp(event.first_observed),
        "last_observed": format_timestamp(event.last_observed),
    }


def event_from_dict(data: dict) -> CanonicalEvent:
    return CanonicalEvent(
        uri=data["uri"],
        canonical_uri=data.get("canonical_uri"),
        was_canonical=data["was_canonical"],
        first_observed=parse_timestamp(data["first_observed"]),
        last_observed=parse_timestamp(data["last_observed"]),
    )


def purl_to_dict(purl: Purl) -> dict:
    return {
        "id": purl.id,
        "target_uri": purl.target_uri,
        "created_at": format_timestamp(purl.created_at),
    }


def purl_from_dict(data: dict) -> Purl:
    return Purl(data["id"], data["target_uri"], parse_timestamp(data["created_at"]))
