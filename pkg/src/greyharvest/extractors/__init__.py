"""One extraction function per metadata source, and the dispatch over them."""

import logging
from typing import Callable

from ..fetcher import MediaType, SourceDocument
from ..model import MetadataFragment
from .feeds import FeedInfo, FeedParseError, FeedResult, extract_feed
from .html import (
    GenericMetaNames,
    discover_feed,
    extract_coins,
    extract_dublin_core,
    extract_eprints,
    extract_generic_meta,
    extract_google_scholar,
    extract_html_title,
    extract_ogp,
    extract_prism,
    extract_schema_org,
    extract_twitter_card,
    profile_name,
)
from .pdf import extract_pdf_info
from .site_rules import (
    LinkNotFound,
    SiteRule,
    apply_site_rules,
    extract_link_context,
    load_site_rules,
)
from .uri import infer_date_from_uri

logger = logging.getLogger(__name__)

Extractor = Callable[[SourceDocument], list[MetadataFragment]]

HTML_EXTRACTORS: dict[str, Extractor] = {
    "html_title": extract_html_title,
    "dublin_core": extract_dublin_core,
    "google_scholar": extract_google_scholar,
    "ogp": extract_ogp,
    "coins": extract_coins,
    "prism": extract_prism,
    "eprints": extract_eprints,
    "twitter": extract_twitter_card,
    "schema_org": extract_schema_org,
}


def _guarded(name: str, extractor: Callable, doc: SourceDocument, *args) -> list[MetadataFragment]:
    try:
        return list(extractor(doc, *args))
    except Exception as e:
        logger.warning(f"extractor {name} failed on {doc.final_uri}: {e}")
        return []


def extract_document(
    doc: SourceDocument,
    rules: list[SiteRule] | None = None,
    meta_names: GenericMetaNames | None = None,
) -> list[MetadataFragment]:
    """Run every extractor applicable to the document's media type.

    Feeds are not handled here; the resolver parses them with extract_feed
    because their fragments describe other URIs.
    """
    fragments: list[MetadataFragment] = []
    if doc.media_type == MediaType.HTML:
        for name, extractor in HTML_EXTRACTORS.items():
            fragments.extend(_guarded(name, extractor, doc))
        fragments.extend(
            _guarded("meta", extract_generic_meta, doc, meta_names or GenericMetaNames())
        )
        if rules:
            fragments.extend(_guarded("site_rules", apply_site_rules, doc, rules))
    elif doc.media_type == MediaType.PDF:
        fragments.extend(_guarded("pdf", extract_pdf_info, doc))

    if doc.media_type != MediaType.XML_FEED:
        if dated := infer_date_from_uri(doc.final_uri, doc.fetched_at):
            fragments.append(dated)
    return fragments


__all__ = [
    "Extractor",
    "FeedInfo",
    "FeedParseError",
    "FeedResult",
    "GenericMetaNames",
    "HTML_EXTRACTORS",
    "LinkNotFound",
    "SiteRule",
    "apply_site_rules",
    "discover_feed",
    "extract_coins",
    "extract_document",
    "extract_dublin_core",
    "extract_eprints",
    "extract_feed",
    "extract_generic_meta",
    "extract_google_scholar",
    "extract_html_title",
    "extract_link_context",
    "extract_ogp",
    "extract_pdf_info",
    "extract_prism",
    "extract_schema_org",
    "extract_twitter_card",
    "infer_date_from_uri",
    "load_site_rules",
    "profile_name",
]
