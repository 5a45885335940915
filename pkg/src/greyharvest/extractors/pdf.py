"""Best-effort read of a PDF's document information dictionary."""

import io
import logging
import re

from pypdf import PdfReader

from ..fetcher import SourceDocument
from ..model import MetadataFragment, Person, SourceKind

logger = logging.getLogger(__name__)

_AUTHOR_SPLIT = re.compile(r"\s*;\s*|\s+and\s+")


def _clean(value) -> str | None:
    if value is None:
        return None
    text = " ".join(str(value).split())
    return text or None


def extract_pdf_info(doc: SourceDocument) -> list[MetadataFragment]:
    """Title and Author from the Info dictionary; any failure yields no fragments."""
    try:
        reader = PdfReader(io.BytesIO(doc.body), strict=False)
        if reader.is_encrypted:
            logger.debug(f"pdf encrypted: {doc.final_uri}")
            return []
        info = reader.metadata
        if not info:
            return []
        title = _clean(info.get("/Title"))
        authors = []
        for literal in _AUTHOR_SPLIT.split(_clean(info.get("/Author")) or ""):
            if literal.strip():
                authors.append(Person.from_literal(literal))
    except Exception as e:
        logger.debug(f"pdf info unreadable for {doc.final_uri}: {e}")
        return []

    fragment = MetadataFragment(
        source=SourceKind.PDF,
        observed_at=doc.fetched_at,
        title=title,
        authors=tuple(authors),
    )
    return [] if fragment.is_empty() else [fragment]
