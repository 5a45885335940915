"""Extractors for metadata embedded in HTML pages."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from urllib.parse import parse_qsl

from bs4 import BeautifulSoup, Tag

from ..dates import parse_partial_date
from ..fetcher import SourceDocument
from ..model import MetadataFragment, Person, SourceKind, normalize_uri

logger = logging.getLogger(__name__)

ARTICLE_TYPES = {
    "article",
    "blogposting",
    "newsarticle",
    "scholarlyarticle",
    "techarticle",
    "report",
    "socialmediaposting",
}


@lru_cache(maxsize=32)
def soup_for(doc: SourceDocument) -> BeautifulSoup:
    """Parse a document leniently; unparseable markup yields an empty tree."""
    try:
        return BeautifulSoup(doc.text, "lxml")
    except Exception as e:
        logger.warning(f"html parse failed for {doc.final_uri}: {e}")
        return BeautifulSoup("", "lxml")


def collapse(text: str | None) -> str | None:
    if text is None:
        return None
    return " ".join(text.split()) or None


@lru_cache(maxsize=32)
def meta_pairs(doc: SourceDocument) -> tuple[tuple[str, str], ...]:
    """(lowercased name-or-property, content) for every meta element, in document order."""
    pairs = []
    for meta in soup_for(doc).find_all("meta"):
        content = collapse(meta.get("content"))
        if content is None:
            continue
        keys = []
        for attr in ("name", "property"):
            value = meta.get(attr)
            if isinstance(value, list):
                value = " ".join(value)
            if value and value.strip().lower() not in keys:
                keys.append(value.strip().lower())
        for key in keys:
            pairs.append((key, content))
    return tuple(pairs)


def _values(doc: SourceDocument, *names: str) -> list[str]:
    wanted = set(names)
    return [content for key, content in meta_pairs(doc) if key in wanted]


def _first(doc: SourceDocument, *names: str) -> str | None:
    for name in names:
        if values := _values(doc, name):
            return values[0]
    return None


def _people(literals: list[str]) -> tuple[Person, ...]:
    people = []
    for literal in literals:
        try:
            people.append(Person.from_literal(literal))
        except ValueError:
            continue
    return tuple(people)


def _fragment(doc: SourceDocument, source: SourceKind, **claims) -> list[MetadataFragment]:
    fragment = MetadataFragment(source=source, observed_at=doc.fetched_at, **claims)
    return [] if fragment.is_empty() else [fragment]


def extract_html_title(doc: SourceDocument) -> list[MetadataFragment]:
    """The first <title> element, whitespace-collapsed, verbatim otherwise."""
    title = soup_for(doc).find("title")
    if title is None:
        return []
    return _fragment(doc, SourceKind.HTML_TITLE, title=collapse(title.get_text()))


def extract_dublin_core(doc: SourceDocument) -> list[MetadataFragment]:
    def names(term: str) -> tuple[str, str]:
        return f"dc.{term}", f"dc:{term}"

    return _fragment(
        doc,
        SourceKind.DUBLIN_CORE,
        title=_first(doc, *names("title")),
        authors=_people(_values(doc, *names("creator"))),
        issued=parse_partial_date(_first(doc, *names("date"))),
        container=_first(doc, *names("publisher")),
    )


def extract_google_scholar(doc: SourceDocument) -> list[MetadataFragment]:
    """citation_* tags, also under the bepress_ prefix."""

    def names(name: str) -> tuple[str, str]:
        return name, f"bepress_{name}"

    authors = _people(_values(doc, *names("citation_author")))
    if not authors:
        joined = _first(doc, *names("citation_authors")) or ""
        authors = _people([part for part in joined.split(";") if part.strip()])

    return _fragment(
        doc,
        SourceKind.GOOGLE_SCHOLAR,
        title=_first(doc, *names("citation_title")),
        authors=authors,
        issued=parse_partial_date(
            _first(doc, *names("citation_publication_date"), *names("citation_date"))
        ),
        container=_first(
            doc, *names("citation_journal_title"), *names("citation_conference_title")
        ),
    )


def _absolute(value: str) -> bool:
    return value.lower().startswith(("http://", "https://"))


def extract_ogp(doc: SourceDocument) -> list[MetadataFragment]:
    """og:* and article:* properties; URI-valued article:author becomes a follow-up fetch."""
    canonical = None
    if og_url := _first(doc, "og:url"):
        try:
            canonical = normalize_uri(og_url, base=doc.final_uri)
        except ValueError:
            logger.debug(f"ignoring invalid og:url {og_url!r}")

    literals, pages = [], []
    for value in _values(doc, "article:author"):
        (pages if _absolute(value) else literals).append(value)

    return _fragment(
        doc,
        SourceKind.OGP,
        title=_first(doc, "og:title"),
        authors=_people(literals),
        issued=parse_partial_date(_first(doc, "article:published_time")),
        container=_first(doc, "og:site_name"),
        canonical_uri=canonical,
        author_pages=tuple(pages),
    )


def profile_name(doc: SourceDocument) -> str | None:
    """Author name from an OGP profile page: og:title, profile names, then <title>."""
    if name := _first(doc, "og:title"):
        return name
    first, last = _first(doc, "profile:first_name"), _first(doc, "profile:last_name")
    if first or last:
        return collapse(f"{first or ''} {last or ''}")
    title = soup_for(doc).find("title")
    return collapse(title.get_text()) if title is not None else None


def _coins_spans(doc: SourceDocument) -> list[Tag]:
    spans = []
    for span in soup_for(doc).find_all("span"):
        classes = span.get("class") or []
        if any(c.lower() == "z3988" for c in classes):
            spans.append(span)
    return spans


def _coins_fragment(doc: SourceDocument, context: str) -> MetadataFragment | None:
    try:
        pairs = parse_qsl(context, keep_blank_values=False, strict_parsing=True)
    except ValueError as e:
        logger.warning(f"coins undecodable on {doc.final_uri}: {e}")
        return None
    if not pairs:
        logger.warning(f"coins empty on {doc.final_uri}")
        return None

    values: dict[str, list[str]] = {}
    for key, value in pairs:
        if value.strip():
            values.setdefault(key.lower(), []).append(value.strip())

    def first(*keys: str) -> str | None:
        for key in keys:
            if key in values:
                return collapse(values[key][0])
        return None

    canonical = None
    for rft_id in values.get("rft_id", []):
        if not _absolute(rft_id):
            continue
        try:
            candidate = normalize_uri(rft_id)
        except ValueError:
            continue
        if candidate not in doc.uris:
            logger.debug(f"coins blocked on {doc.final_uri}: describes {candidate}")
            return None
        canonical = candidate

    authors = values.get("rft.au", [])
    if not authors and "rft.aulast" in values:
        authors = [", ".join(filter(None, [first("rft.aulast"), first("rft.aufirst")]))]

    fragment = MetadataFragment(
        source=SourceKind.COINS,
        observed_at=doc.fetched_at,
        title=first("rft.atitle", "rft.btitle", "rft.title"),
        authors=_people(authors),
        issued=parse_partial_date(first("rft.date")),
        container=first("rft.jtitle"),
        canonical_uri=canonical,
    )
    return None if fragment.is_empty() else fragment


def extract_coins(doc: SourceDocument) -> list[MetadataFragment]:
    """Z3988 spans; a span whose rft_id names another location is dropped whole."""
    for span in _coins_spans(doc):
        context = span.get("title")
        if not context:
            logger.warning(f"coins span without title on {doc.final_uri}")
            continue
        if fragment := _coins_fragment(doc, context):
            return [fragment]
    return []


def extract_prism(doc: SourceDocument) -> list[MetadataFragment]:
    return _fragment(
        doc,
        SourceKind.PRISM,
        container=_first(doc, "prism.publicationname", "prism:publicationname"),
        issued=parse_partial_date(_first(doc, "prism.publicationdate", "prism:publicationdate")),
    )


def extract_eprints(doc: SourceDocument) -> list[MetadataFragment]:
    return _fragment(
        doc,
        SourceKind.EPRINTS,
        title=_first(doc, "eprints.title"),
        authors=_people(_values(doc, "eprints.creators_name")),
        issued=parse_partial_date(_first(doc, "eprints.date")),
        container=_first(doc, "eprints.publication"),
    )


def extract_twitter_card(doc: SourceDocument) -> list[MetadataFragment]:
    """twitter:* tags; handles lose their leading "@"."""

    def handle(value: str | None) -> str | None:
        return collapse(value.lstrip("@")) if value else None

    creator = handle(_first(doc, "twitter:creator"))
    return _fragment(
        doc,
        SourceKind.TWITTER,
        title=_first(doc, "twitter:title"),
        container=handle(_first(doc, "twitter:site")),
        authors=_people([creator] if creator else []),
    )


@dataclass(frozen=True)
class GenericMetaNames:
    """The small recognised set of plain meta names."""

    authors: tuple[str, ...] = ("author",)
    dates: tuple[str, ...] = ("date",)


def extract_generic_meta(
    doc: SourceDocument, names: GenericMetaNames = GenericMetaNames()
) -> list[MetadataFragment]:
    return _fragment(
        doc,
        SourceKind.GENERIC_META,
        authors=_people(_values(doc, *names.authors)),
        issued=parse_partial_date(_first(doc, *names.dates)),
    )


def _item_type(tag: Tag) -> str:
    itemtype = tag.get("itemtype") or ""
    if isinstance(itemtype, list):
        itemtype = " ".join(itemtype)
    return itemtype.rstrip("/").rsplit("/", 1)[-1].lower()


def _owning_scope(tag: Tag) -> Tag | None:
    for parent in tag.parents:
        if isinstance(parent, Tag) and parent.has_attr("itemscope"):
            return parent
    return None


def _item_value(tag: Tag) -> str | None:
    for attr in ("content", "datetime"):
        if tag.has_attr(attr):
            value = tag[attr]
            return collapse(" ".join(value) if isinstance(value, list) else value)
    return collapse(tag.get_text())


def extract_schema_org(doc: SourceDocument) -> list[MetadataFragment]:
    """Microdata headline/name and datePublished within an Article-typed item."""
    soup = soup_for(doc)
    for scope in soup.find_all(attrs={"itemscope": True}):
        if _item_type(scope) not in ARTICLE_TYPES:
            continue
        props: dict[str, str] = {}
        for tag in scope.find_all(attrs={"itemprop": True}):
            if tag.has_attr("itemscope") or _owning_scope(tag) is not scope:
                continue
            itemprop = tag.get("itemprop")
            if isinstance(itemprop, list):
                itemprop = " ".join(itemprop)
            value = _item_value(tag)
            for prop in (itemprop or "").split():
                if value:
                    props.setdefault(prop, value)
        fragments = _fragment(
            doc,
            SourceKind.SCHEMA_ORG,
            title=props.get("headline") or props.get("name"),
            issued=parse_partial_date(props.get("datePublished")),
        )
        if fragments:
            return fragments
    return []


def discover_feed(doc: SourceDocument) -> str | None:
    """The first advertised RSS/Atom feed, resolved against the page."""
    for link in soup_for(doc).find_all("link"):
        rel = link.get("rel") or []
        rel = rel if isinstance(rel, list) else rel.split()
        kind = (link.get("type") or "").lower()
        href = link.get("href")
        if href and "alternate" in [r.lower() for r in rel] and kind in (
            "application/rss+xml",
            "application/atom+xml",
        ):
            try:
                return normalize_uri(href, base=doc.final_uri)
            except ValueError:
                continue
    return None
