"""Emit Google Scholar, OGP and CoINS markup describing a record."""

import html
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable
from urllib.parse import urlencode

from .model import BibRecord, GreyharvestError, Person, person_from_dict

logger = logging.getLogger(__name__)


class MissingTitle(GreyharvestError):
    """Markup cannot be emitted for a record without a title."""

    def __init__(self, uri: str):
        self.uri = uri
        super().__init__(f"record has no title: {uri}")


class EmbedFormat(str, Enum):
    SCHOLAR = "scholar"
    OGP = "ogp"
    COINS = "coins"


ALL_FORMATS = frozenset(EmbedFormat)


@dataclass(frozen=True)
class RecordOverride:
    """Author list and container set by the page's author, replacing extracted values."""

    authors: tuple[Person, ...] | None = None
    container: str | None = None

    def __post_init__(self):
        if self.authors is not None and not self.authors:
            raise ValueError("override authors must be non-empty when given")

    @classmethod
    def from_dict(cls, data: dict) -> "RecordOverride":
        authors = data.get("authors")
        if authors is not None:
            authors = tuple(
                Person.from_literal(a) if isinstance(a, str) else person_from_dict(a)
                for a in authors
            )
        return cls(authors=authors, container=data.get("container"))

    def apply(self, record: BibRecord) -> BibRecord:
        changes = {}
        if self.authors is not None:
            changes["authors"] = self.authors
        if self.container is not None:
            changes["container"] = self.container
        return replace(record, **changes) if changes else record


@dataclass(frozen=True)
class Markup:
    head_html: str
    body_html: str


def _meta(attr: str, key: str, value: str) -> str:
    return f'<meta {attr}="{html.escape(key)}" content="{html.escape(value)}">'


def _scholar(record: BibRecord) -> list[str]:
    tags = [_meta("name", "citation_title", record.title)]
    tags += [_meta("name", "citation_author", p.literal) for p in record.authors]
    if record.issued:
        tags.append(_meta("name", "citation_publication_date", record.issued.isoformat()))
    if record.container:
        tags.append(_meta("name", "citation_journal_title", record.container))
    return tags


def _ogp(record: BibRecord) -> list[str]:
    tags = [_meta("property", "og:title", record.title)]
    if record.container:
        tags.append(_meta("property", "og:site_name", record.container))
    tags.append(_meta("property", "og:url", record.link))
    if record.issued:
        tags.append(_meta("property", "article:published_time", record.issued.isoformat()))
    return tags


def _coins(record: BibRecord) -> str:
    pairs = [
        ("ctx_ver", "Z39.88-2004"),
        ("rft_val_fmt", "info:ofi/fmt:kev:mtx:journal"),
        ("rft_id", record.uri),
        ("rft.atitle", record.title),
    ]
    pairs += [("rft.au", p.literal) for p in record.authors]
    if record.issued:
        pairs.append(("rft.date", record.issued.isoformat()))
    if record.container:
        pairs.append(("rft.jtitle", record.container))
    return f'<span class="Z3988" title="{html.escape(urlencode(pairs))}"></span>'


def emit_markup(
    record: BibRecord,
    override: RecordOverride | None = None,
    formats: Iterable[EmbedFormat | str] = ALL_FORMATS,
) -> Markup:
    """Head meta tags for Scholar/OGP and a body CoINS span.

    The CoINS rft_id is the page's own URI so extraction never blocks it.
    """
    if override is not None:
        record = override.apply(record)
    if not record.title:
        raise MissingTitle(record.uri)

    selected = {EmbedFormat(f) for f in formats}
    head: list[str] = []
    if EmbedFormat.SCHOLAR in selected:
        head += _scholar(record)
    if EmbedFormat.OGP in selected:
        head += _ogp(record)
    body = _coins(record) if EmbedFormat.COINS in selected else ""
    logger.debug(f"emitted {sorted(f.value for f in selected)} markup for {record.uri}")
    return Markup(head_html="\n".join(head), body_html=body)


def wrap_page(markup: Markup, title: str | None = None) -> str:
    """A minimal HTML page carrying the markup."""
    head_title = f"<title>{html.escape(title)}</title>\n" if title else ""
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"{head_title}{markup.head_html}\n</head>\n<body>\n{markup.body_html}\n</body>\n</html>\n"
    )
