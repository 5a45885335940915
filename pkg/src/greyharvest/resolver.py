"""Per-URI pipeline: fetch, extract, apply heuristics, merge by score."""

import asyncio
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable
from urllib.parse import urljoin

from pydantic import BaseModel, NonNegativeInt, ValidationError

from .config import Config, get_config
from .extractors import (
    FeedInfo,
    FeedParseError,
    GenericMetaNames,
    SiteRule,
    discover_feed,
    extract_document,
    extract_feed,
    extract_link_context,
    load_site_rules,
    profile_name,
)
from .extractors.site_rules import SITE_RULE_SOURCES, LinkNotFound
from .fetcher import Fetcher, FetchError, MediaType, SourceDocument
from .model import (
    GRANTED_FIELDS,
    BibRecord,
    Field,
    MetadataFragment,
    Person,
    SourceKind,
    domain_label,
    fragment_to_dict,
    host_of,
    normalize_uri,
    registrable_domain,
    utcnow,
)
from .store import Store

logger = logging.getLogger(__name__)

DEFAULT_BLOCKLIST = frozenset({"admin", "blog admin", "administrator", "webmaster", "root"})
DEFAULT_DELIMITERS = (" | ", " – ", " — ", " :: ", " - ")

_BASE_WEIGHTS: dict[SourceKind, int] = {
    SourceKind.GOOGLE_SCHOLAR: 90,
    SourceKind.EPRINTS: 90,
    SourceKind.DUBLIN_CORE: 90,
    SourceKind.COINS: 90,
    SourceKind.OGP: 80,
    **{kind: 75 for kind in SITE_RULE_SOURCES},
    SourceKind.RSS: 70,
    SourceKind.ATOM: 70,
    SourceKind.PRISM: 70,
    SourceKind.SCHEMA_ORG: 60,
    SourceKind.GENERIC_META: 50,
    SourceKind.PDF: 40,
    SourceKind.TWITTER: 40,
    SourceKind.HTML_TITLE: 30,
    SourceKind.SIBLING_INFERENCE: 20,
    SourceKind.URI_DATE: 10,
}

# Handles are weak names.
_OVERRIDES = {(SourceKind.TWITTER, Field.AUTHORS): 20}


def _default_weights() -> dict[SourceKind, dict[Field, int]]:
    weights = {}
    for kind in SourceKind:
        weights[kind] = {
            f: _OVERRIDES.get((kind, f), _BASE_WEIGHTS[kind]) if f in GRANTED_FIELDS[kind] else 0
            for f in Field
        }
    return weights


class ScoreTableFile(BaseModel):
    """On-disk score table; anything omitted keeps its default."""

    weights: dict[SourceKind, dict[Field, NonNegativeInt]] = {}
    author_blocklist: list[str] | None = None
    title_delimiters: list[str] | None = None


@dataclass
class ScoreTable:
    weights: dict[SourceKind, dict[Field, int]] = field(default_factory=_default_weights)
    author_blocklist: frozenset[str] = DEFAULT_BLOCKLIST
    title_delimiters: tuple[str, ...] = DEFAULT_DELIMITERS

    def weight(self, source: SourceKind, name: Field) -> int:
        return self.weights.get(source, {}).get(name, 0)

    @classmethod
    def load(cls, path: Path | str) -> "ScoreTable":
        data = ScoreTableFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
        table = cls()
        for source, row in data.weights.items():
            table.weights[source].update(row)
        if data.author_blocklist is not None:
            table.author_blocklist = frozenset(a.strip().lower() for a in data.author_blocklist)
        if data.title_delimiters is not None:
            table.title_delimiters = tuple(data.title_delimiters)
        return table


def load_score_table(path: Path | str | None) -> ScoreTable:
    if not path:
        return ScoreTable()
    try:
        return ScoreTable.load(path)
    except (OSError, ValidationError) as e:
        logger.warning(f"using default score table, {path} unusable: {e}")
        return ScoreTable()


def strip_site_title(
    title: str,
    container: str | None,
    host: str,
    delimiters: Iterable[str] = DEFAULT_DELIMITERS,
) -> str:
    """Drop a trailing (else leading) segment naming the site; never strips to nothing."""
    delimiter = next((d for d in delimiters if d in title), None)
    if delimiter is None:
        return title

    names = {container, registrable_domain(host), domain_label(host), host.removeprefix("www.")}
    names = {n.strip().casefold() for n in names if n and n.strip()}

    head, _, tail = title.rpartition(delimiter)
    if tail.strip().casefold() in names and head.strip():
        return head.strip()
    head, _, tail = title.partition(delimiter)
    if head.strip().casefold() in names and tail.strip():
        return tail.strip()
    return title


def filter_authors(authors: Iterable[Person], blocklist: frozenset[str] = DEFAULT_BLOCKLIST):
    """Drop generic account names; informal personal names are kept."""
    return [a for a in authors if a.literal.lower() not in blocklist]


def infer_from_siblings(
    entries: list[tuple[str, MetadataFragment]],
    feed_info: FeedInfo,
    target: str,
    blocklist: frozenset[str] = DEFAULT_BLOCKLIST,
    observed_at: datetime | None = None,
) -> list[MetadataFragment]:
    """Author shared by every other entry, plus the feed title as container. Never a date."""
    literals = set()
    siblings = [fragment for uri, fragment in entries if uri != target]
    for fragment in siblings:
        authors = filter_authors(fragment.authors, blocklist)
        if len(authors) != 1:
            literals = set()
            break
        literals.add(authors[0].literal)

    authors = (Person.from_literal(literals.pop()),) if len(literals) == 1 else ()
    fragment = MetadataFragment(
        source=SourceKind.SIBLING_INFERENCE,
        observed_at=observed_at or utcnow(),
        authors=authors,
        container=feed_info.container,
        subject=target,
    )
    return [] if fragment.is_empty() else [fragment]


def _identity(fragment: MetadataFragment) -> str:
    return json.dumps(fragment_to_dict(fragment), sort_keys=True)


def merge_fragments(
    uri: str,
    fragments: Iterable[MetadataFragment],
    table: ScoreTable | None = None,
    retrieved_at: datetime | None = None,
    host: str | None = None,
    archives: tuple = (),
) -> BibRecord:
    """Merge per field: highest weight wins, ties go to the earlier SourceKind.

    Within one source the newest observation wins, then a stable content order,
    so the result never depends on fragment order.
    """
    table = table or ScoreTable()
    host = host or host_of(uri)
    cleaned = [
        replace(f, authors=tuple(filter_authors(f.authors, table.author_blocklist)))
        for f in fragments
    ]

    def winner(name: Field, candidates: list[MetadataFragment]) -> MetadataFragment | None:
        eligible = [
            f for f in candidates if f.get(name) is not None and table.weight(f.source, name) > 0
        ]
        if not eligible:
            return None
        return min(
            eligible,
            key=lambda f: (
                -table.weight(f.source, name),
                f.source.order,
                -f.observed_at.timestamp(),
                _identity(f),
            ),
        )

    claims: dict[str, object] = {}
    provenance: dict[Field, SourceKind] = {}

    if best := winner(Field.CONTAINER, cleaned):
        claims["container"] = best.container
        provenance[Field.CONTAINER] = best.source

    stripped = []
    for f in cleaned:
        if f.source == SourceKind.HTML_TITLE and f.title:
            title = strip_site_title(
                f.title, claims.get("container"), host, table.title_delimiters
            )
            f = replace(f, title=title)
        stripped.append(f)

    for name in (Field.TITLE, Field.AUTHORS, Field.ISSUED, Field.CANONICAL_URI):
        if best := winner(name, stripped):
            claims[name.value] = best.get(name)
            provenance[name] = best.source

    return BibRecord(
        uri=uri,
        retrieved_at=retrieved_at or utcnow(),
        archives=tuple(archives),
        provenance=provenance,
        **claims,
    )


def score_fragment(fragment: MetadataFragment, table: ScoreTable) -> MetadataFragment:
    """Stamp the fragment with the best weight its fields earn."""
    score = max((table.weight(fragment.source, f) for f in fragment.fields), default=0)
    return replace(fragment, score=score)


class Resolver:
    """Resolves URIs to records; concurrent per URI, coalesced for the same URI."""

    def __init__(
        self,
        config: Config | None = None,
        store: Store | None = None,
        fetcher: Fetcher | None = None,
        rules: list[SiteRule] | None = None,
        scores: ScoreTable | None = None,
        clock: Callable[[], datetime] = utcnow,
    ):
        self.config = config or get_config()
        self.store = store
        self.fetcher = fetcher
        self.rules = rules if rules is not None else load_site_rules(self.config.resolver.rules_dir)
        self.scores = scores or load_score_table(self.config.resolver.score_table)
        self.meta_names = GenericMetaNames(
            authors=tuple(n.lower() for n in self.config.resolver.generic_author_names),
            dates=tuple(n.lower() for n in self.config.resolver.generic_date_names),
        )
        self.clock = clock
        self._inflight: dict[str, asyncio.Future] = {}

    async def resolve(self, uri: str, background: bool = False) -> BibRecord:
        """Fetch, extract and merge; the result is stored as a new version."""
        key = normalize_uri(uri)
        task = self._inflight.get(key)
        if task is None:
            task = asyncio.ensure_future(self._resolve(key, background))
            self._inflight[key] = task

            def _done(finished, key=key):
                if self._inflight.get(key) is finished:
                    del self._inflight[key]

            task.add_done_callback(_done)
        else:
            logger.debug(f"joining in-flight resolve {key}")
        return await asyncio.shield(task)

    async def _resolve(self, key: str, background: bool) -> BibRecord:
        if self.fetcher is None:
            raise RuntimeError("resolver has no fetcher")
        doc = await self.fetcher.fetch(key, background=background)
        record = await self.resolve_document(doc, uri=key)
        if self.store is not None:
            version = self.store.put_extraction(key, record)
            logger.info(f"resolved {key} v{version}")
        return record

    async def resolve_document(
        self, doc: SourceDocument, uri: str | None = None, fetch_related: bool = True
    ) -> BibRecord:
        """Resolve an already-fetched document; follow-up fetches need a fetcher."""
        uri = uri or doc.request_uri
        targets = {uri, doc.final_uri}
        fragments = extract_document(doc, self.rules, self.meta_names)

        related = fetch_related and self.fetcher is not None
        if related and doc.media_type == MediaType.HTML:
            fragments = await self._with_author_page(fragments)
            fragments += await self._from_feed(doc, targets)
        elif related and doc.media_type == MediaType.PDF:
            fragments += await self._from_index_page(doc)

        if self.store is not None:
            for target in sorted(targets):
                fragments += self.store.get_feed_fragments(target)

        fragments = [
            score_fragment(f, self.scores)
            for f in fragments
            if f.subject is None or f.subject in targets
        ]
        archives = tuple(self.store.get_archives(uri)) if self.store is not None else ()
        return merge_fragments(
            uri,
            fragments,
            self.scores,
            retrieved_at=doc.fetched_at,
            host=host_of(doc.final_uri),
            archives=archives,
        )

    async def _fetch_related(self, uri: str) -> SourceDocument | None:
        try:
            return await self.fetcher.fetch(uri)
        except FetchError as e:
            logger.warning(f"follow-up fetch failed: {e}")
            return None

    async def _with_author_page(self, fragments: list[MetadataFragment]) -> list[MetadataFragment]:
        """Resolve at most one OGP article:author page into an author name."""
        for index, fragment in enumerate(fragments):
            if fragment.source != SourceKind.OGP or not fragment.author_pages:
                continue
            page_uri = fragment.author_pages[0]
            try:
                page_uri = normalize_uri(page_uri)
            except ValueError:
                return fragments
            page = await self._fetch_related(page_uri)
            name = profile_name(page) if page and page.media_type == MediaType.HTML else None
            if name:
                updated = replace(fragment, authors=fragment.authors + (Person.from_literal(name),))
                return fragments[:index] + [updated] + fragments[index + 1 :]
            return fragments
        return fragments

    async def _from_feed(self, doc: SourceDocument, targets: set[str]) -> list[MetadataFragment]:
        """Entry fragments and sibling inferences from the page's advertised feed."""
        feed_uri = discover_feed(doc)
        if feed_uri is None:
            return []
        feed_doc = await self._fetch_related(feed_uri)
        if feed_doc is None:
            return []
        try:
            feed = extract_feed(feed_doc)
        except FeedParseError as e:
            logger.warning(f"feed unusable: {e}")
            return []

        if self.store is not None:
            for entry_uri, entry in feed.entries:
                self.store.put_feed_fragment(entry_uri, entry)

        found = [f for uri, f in feed.entries if uri in targets]
        target = next((uri for uri, _ in feed.entries if uri in targets), doc.request_uri)
        inferred = infer_from_siblings(
            feed.entries, feed.info, target, self.scores.author_blocklist, feed_doc.fetched_at
        )
        return ([] if self.store is not None else found) + inferred

    async def _from_index_page(self, doc: SourceDocument) -> list[MetadataFragment]:
        """Harvest a PDF's metadata from the directory index linking to it."""
        index_uri = urljoin(doc.final_uri, "./")
        rules = [r for r in self.rules if r.link_context is not None and r.matches(index_uri)]
        if not rules:
            return []
        index = await self._fetch_related(index_uri)
        if index is None or index.media_type != MediaType.HTML:
            return []
        try:
            return extract_link_context(doc.final_uri, index, rules)
        except LinkNotFound as e:
            logger.info(f"{e}")
            return []

    async def close(self):
        for task in list(self._inflight.values()):
            task.cancel()
        if self._inflight:
            await asyncio.gather(*self._inflight.values(), return_exceptions=True)
        if self.fetcher is not None:
            await self.fetcher.close()
