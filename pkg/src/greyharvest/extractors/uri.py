"""Publication date from permalink structure."""

import re
from datetime import datetime
from urllib.parse import urlsplit

from ..model import MetadataFragment, PartialDate, SourceKind, utcnow

YEAR_FLOOR = 1990

# /YYYY/MM/ or /YYYY/MM/DD/ on segment boundaries; a trailing segment may end the path.
_DATED_PATH = re.compile(r"(?<=/)(\d{4})/(\d{1,2})(?:/(\d{1,2}))?(?=/|$)")


def infer_date_from_uri(uri: str, observed_at: datetime | None = None) -> MetadataFragment | None:
    """Leftmost /YYYY/MM[/DD]/ in the path with a plausible year, or None."""
    observed_at = observed_at or utcnow()
    path = urlsplit(uri).path
    ceiling = observed_at.year + 1

    for match in _DATED_PATH.finditer(path):
        year, month, day = match.groups()
        if not YEAR_FLOOR <= int(year) <= ceiling:
            continue
        try:
            issued = PartialDate(int(year), int(month), int(day) if day else None)
        except ValueError:
            if day is None:
                continue
            # the third segment may be a slug made of digits; fall back to month precision
            try:
                issued = PartialDate(int(year), int(month))
            except ValueError:
                continue
        return MetadataFragment(source=SourceKind.URI_DATE, observed_at=observed_at, issued=issued)
    return None
