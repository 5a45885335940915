"""Screen-scrape rules loaded from data files."""

import logging
import re
from fnmatch import fnmatchcase
from pathlib import Path
from urllib.parse import urlsplit

from bs4 import Tag
from pydantic import BaseModel, Field as PydanticField, ValidationError, model_validator

from ..dates import parse_partial_date
from ..fetcher import SourceDocument
from ..model import (
    GRANTED_FIELDS,
    Field,
    GreyharvestError,
    MetadataFragment,
    Person,
    SourceKind,
    normalize_uri,
)
from .html import collapse, soup_for

logger = logging.getLogger(__name__)

RULES_DIR = Path(__file__).resolve().parent.parent / "rules"

SITE_RULE_SOURCES = frozenset(
    {
        SourceKind.W3C,
        SourceKind.CEUR_WS,
        SourceKind.WORLDCAT,
        SourceKind.ORCID,
        SourceKind.OPENLIBRARY,
        SourceKind.SCIENCEDIRECT,
        SourceKind.MENDELEY,
    }
)


class LinkNotFound(GreyharvestError):
    """The referring page has no anchor pointing at the requested URI."""

    def __init__(self, target: str, page: str):
        self.target = target
        self.page = page
        super().__init__(f"no link to {target} on {page}")


class Selector(BaseModel):
    """Where one field's value lives on the page.

    `path` is a CSS selector; the value is the element text unless `attribute`
    names an attribute. `regex` keeps its first group (or the whole match).
    `value` is a constant used instead of reading the page.
    """

    path: str | None = None
    attribute: str | None = None
    regex: str | None = None
    value: str | None = None
    multiple: bool = False

    @model_validator(mode="after")
    def _has_source(self) -> "Selector":
        if not self.path and not self.value:
            raise ValueError("selector needs a path or a constant value")
        if self.regex is not None:
            re.compile(self.regex)
        return self


class LinkContext(BaseModel):
    """Harvest fields for a linked document from the markup around its anchor."""

    entry: str = "li"
    selectors: dict[Field, Selector] = PydanticField(default_factory=dict)
    page: dict[Field, Selector] = PydanticField(default_factory=dict)


class SiteRule(BaseModel):
    id: SourceKind
    host_pattern: str = PydanticField(min_length=1)
    path_pattern: str | None = None
    selectors: dict[Field, Selector] = PydanticField(default_factory=dict)
    link_context: LinkContext | None = None
    notes: str = ""

    @model_validator(mode="after")
    def _granted(self) -> "SiteRule":
        if self.id not in SITE_RULE_SOURCES:
            raise ValueError(f"{self.id.value} is not a site-rule source")
        claimed = set(self.selectors)
        if self.link_context is not None:
            claimed |= set(self.link_context.selectors) | set(self.link_context.page)
        extra = claimed - GRANTED_FIELDS[self.id]
        if extra:
            names = ", ".join(sorted(f.value for f in extra))
            raise ValueError(f"rule {self.id.value} selects fields it may not emit: {names}")
        return self

    def matches(self, uri: str) -> bool:
        parts = urlsplit(uri)
        if not fnmatchcase((parts.hostname or "").lower(), self.host_pattern.lower()):
            return False
        return self.path_pattern is None or fnmatchcase(parts.path, self.path_pattern)


def load_site_rules(directory: Path | str | None = None) -> list[SiteRule]:
    """Load every *.json rule in `directory` (the bundled rules by default)."""
    directory = Path(directory) if directory else RULES_DIR
    rules = []
    for path in sorted(directory.glob("*.json")):
        try:
            rules.append(SiteRule.model_validate_json(path.read_text(encoding="utf-8")))
        except (OSError, ValidationError) as e:
            logger.warning(f"skipping site rule {path.name}: {e}")
    logger.debug(f"loaded {len(rules)} site rules from {directory}")
    return rules


def _read(scope: Tag, selector: Selector) -> list[str]:
    if selector.value is not None:
        return [selector.value]

    found = []
    for element in scope.select(selector.path):
        raw = element.get(selector.attribute) if selector.attribute else element.get_text(" ")
        if isinstance(raw, list):
            raw = " ".join(raw)
        text = collapse(raw)
        if text and selector.regex:
            match = re.search(selector.regex, text)
            if match is None:
                continue
            text = collapse(match.group(1) if match.groups() else match.group(0))
        if text:
            found.append(text)
            if not selector.multiple:
                break
    return found


def _claims(scope: Tag, selectors: dict[Field, Selector], base: str) -> dict:
    claims = {}
    for name, selector in selectors.items():
        try:
            values = _read(scope, selector)
        except Exception as e:
            logger.debug(f"selector {selector.path!r} failed on {base}: {e}")
            continue
        if not values:
            continue
        if name == Field.AUTHORS:
            claims["authors"] = tuple(Person.from_literal(v) for v in values)
        elif name == Field.ISSUED:
            if issued := parse_partial_date(values[0]):
                claims["issued"] = issued
        elif name == Field.CANONICAL_URI:
            try:
                claims["canonical_uri"] = normalize_uri(values[0], base=base)
            except ValueError:
                continue
        else:
            claims[name.value] = values[0]
    return claims


def apply_site_rules(doc: SourceDocument, rules: list[SiteRule]) -> list[MetadataFragment]:
    """One fragment per rule whose host (and path) pattern matches the document."""
    fragments = []
    for rule in rules:
        if not rule.matches(doc.final_uri) or not rule.selectors:
            continue
        claims = _claims(soup_for(doc), rule.selectors, doc.final_uri)
        fragment = MetadataFragment(source=rule.id, observed_at=doc.fetched_at, **claims)
        if not fragment.is_empty():
            fragments.append(fragment)
    return fragments


def _anchor_for(target: str, doc: SourceDocument) -> Tag | None:
    for anchor in soup_for(doc).find_all("a", href=True):
        try:
            if normalize_uri(anchor["href"], base=doc.final_uri) == target:
                return anchor
        except ValueError:
            continue
    return None


def extract_link_context(
    target: str, doc: SourceDocument, rules: list[SiteRule]
) -> list[MetadataFragment]:
    """Fragments about `target` harvested from the entry that links to it on `doc`."""
    anchor = _anchor_for(target, doc)
    if anchor is None:
        raise LinkNotFound(target, doc.final_uri)

    fragments = []
    for rule in rules:
        if rule.link_context is None or not rule.matches(doc.final_uri):
            continue
        context = rule.link_context
        entry = anchor.find_parent(context.entry) or anchor.parent
        claims = _claims(soup_for(doc), context.page, doc.final_uri)
        claims.update(_claims(entry, context.selectors, doc.final_uri))
        fragment = MetadataFragment(
            source=rule.id, observed_at=doc.fetched_at, subject=target, **claims
        )
        if not fragment.is_empty():
            fragments.append(fragment)
    return fragments
