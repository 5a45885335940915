"""RSS 2.0 and Atom entry extraction."""

import logging
import re
from dataclasses import dataclass, field

from lxml import etree

from ..dates import parse_partial_date
from ..fetcher import SourceDocument
from ..model import GreyharvestError, MetadataFragment, Person, SourceKind, normalize_uri

logger = logging.getLogger(__name__)

ATOM_NS = "http://www.w3.org/2005/Atom"
DC_NS = "http://purl.org/dc/elements/1.1/"

# "jo@example.org (Jo Bloggs)"
_RSS_AUTHOR = re.compile(r"^\s*\S+@\S+\s*\((?P<name>[^)]+)\)\s*$")


class FeedParseError(GreyharvestError):
    """Feed body is not well-formed RSS or Atom."""

    def __init__(self, uri: str, message: str):
        self.uri = uri
        super().__init__(f"feed {uri}: {message}")


@dataclass(frozen=True)
class FeedInfo:
    """Feed-level facts shared by every entry."""

    container: str | None = None
    common_author: str | None = None


@dataclass
class FeedResult:
    entries: list[tuple[str, MetadataFragment]] = field(default_factory=list)
    info: FeedInfo = field(default_factory=FeedInfo)


def _parser() -> etree.XMLParser:
    return etree.XMLParser(
        recover=False, resolve_entities=False, no_network=True, huge_tree=False
    )


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _text(element) -> str | None:
    if element is None:
        return None
    return " ".join("".join(element.itertext()).split()) or None


def _children(element, name: str, ns: str | None = None) -> list:
    """Direct children named `name` in namespace `ns` (None: no namespace)."""
    tag = f"{{{ns}}}{name}" if ns else name
    return [child for child in element if child.tag == tag]


def _child(element, name: str, ns: str | None = None):
    children = _children(element, name, ns)
    return children[0] if children else None


def _uri(value: str | None, base: str) -> str | None:
    if not value:
        return None
    try:
        return normalize_uri(value.strip(), base=base)
    except ValueError:
        return None


def _people(literals: list[str | None]) -> tuple[Person, ...]:
    people = []
    for literal in literals:
        if not literal:
            continue
        try:
            people.append(Person.from_literal(literal))
        except ValueError:
            continue
    return tuple(people)


def _rss_entry(item, base: str, container: str | None, doc: SourceDocument):
    link = _uri(_text(_child(item, "link")), base)
    canonical = None
    guid = _child(item, "guid")
    # guid is a permalink unless isPermaLink says otherwise
    if guid is not None and guid.get("isPermaLink", "true").strip().lower() == "true":
        canonical = _uri(_text(guid), base)
    entry_uri = link or canonical
    if entry_uri is None:
        return None

    creators = [_text(c) for c in _children(item, "creator", DC_NS)]
    if not any(creators):
        for author in _children(item, "author"):
            value = _text(author)
            if value and (match := _RSS_AUTHOR.match(value)):
                creators.append(match.group("name"))

    issued = parse_partial_date(_text(_child(item, "pubDate")))
    if issued is None:
        issued = parse_partial_date(_text(_child(item, "date", DC_NS)))

    fragment = MetadataFragment(
        source=SourceKind.RSS,
        observed_at=doc.fetched_at,
        title=_text(_child(item, "title")),
        authors=_people(creators),
        issued=issued,
        container=container,
        canonical_uri=canonical,
        subject=entry_uri,
    )
    return entry_uri, fragment


def _atom_link(entry, base: str) -> str | None:
    for link in _children(entry, "link", ATOM_NS):
        if (link.get("rel") or "alternate").strip().lower() == "alternate":
            if uri := _uri(link.get("href"), base):
                return uri
    return None


def _atom_names(element) -> list[str | None]:
    return [_text(_child(a, "name", ATOM_NS)) for a in _children(element, "author", ATOM_NS)]


def _atom_entry(
    entry, base: str, container: str | None, feed_names: list[str | None], doc: SourceDocument
):
    entry_uri = _atom_link(entry, base)
    if entry_uri is None:
        return None

    names = _atom_names(entry) or feed_names
    issued = parse_partial_date(_text(_child(entry, "published", ATOM_NS)))
    if issued is None:
        issued = parse_partial_date(_text(_child(entry, "updated", ATOM_NS)))

    fragment = MetadataFragment(
        source=SourceKind.ATOM,
        observed_at=doc.fetched_at,
        title=_text(_child(entry, "title", ATOM_NS)),
        authors=_people(names),
        issued=issued,
        container=container,
        subject=entry_uri,
    )
    return entry_uri, fragment


def _common_author(entries: list[tuple[str, MetadataFragment]]) -> str | None:
    literals = set()
    for _, fragment in entries:
        if len(fragment.authors) != 1:
            return None
        literals.add(fragment.authors[0].literal)
    return literals.pop() if len(literals) == 1 else None


def extract_feed(doc: SourceDocument, target: str | None = None) -> FeedResult:
    """Parse an RSS 2.0 or Atom feed into per-entry fragments plus feed-level info.

    `target` is accepted so callers can ask about a URI absent from the feed;
    the result still lists every entry.
    """
    try:
        root = etree.fromstring(doc.body, parser=_parser())
    except (etree.XMLSyntaxError, ValueError) as e:
        raise FeedParseError(doc.final_uri, str(e)) from e
    if root is None:
        raise FeedParseError(doc.final_uri, "empty document")

    base = doc.final_uri
    kind = _local(root.tag)
    if kind == "rss":
        channel = _child(root, "channel")
        if channel is None:
            raise FeedParseError(base, "rss without channel")
        container = _text(_child(channel, "title"))
        parsed = [_rss_entry(item, base, container, doc) for item in _children(channel, "item")]
    elif kind == "feed" and root.tag == f"{{{ATOM_NS}}}feed":
        container = _text(_child(root, "title", ATOM_NS))
        feed_names = _atom_names(root)
        parsed = [
            _atom_entry(e, base, container, feed_names, doc)
            for e in _children(root, "entry", ATOM_NS)
        ]
    else:
        raise FeedParseError(base, f"unrecognized root element {kind!r}")

    entries = [entry for entry in parsed if entry is not None]
    if target is not None and not any(uri == target for uri, _ in entries):
        logger.debug(f"target {target} not in feed {base}")
    return FeedResult(entries, FeedInfo(container=container, common_author=_common_author(entries)))
