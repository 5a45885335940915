"""Lenient date parsing for metadata found in the wild."""

import re
from email.utils import parsedate_tz

from .model import PartialDate

_ISO = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2})(?:[T\s].*)?)?)?$")
_SLASHED = re.compile(r"^(\d{4})/(\d{1,2})(?:/(\d{1,2}))?/?$")


def _build(year: str, month: str | None, day: str | None) -> PartialDate | None:
    try:
        return PartialDate(int(year), int(month) if month else None, int(day) if day else None)
    except ValueError:
        return None


def parse_partial_date(text: str | None) -> PartialDate | None:
    """Parse ISO-8601 prefix, RFC-822, YYYY/MM/DD or bare YYYY; None otherwise."""
    if not text:
        return None
    value = text.strip()
    if not value:
        return None

    if match := _ISO.match(value):
        return _build(*match.groups())

    if not value[:1].isdigit() or " " in value:
        try:
            parsed = parsedate_tz(value)
        except (ValueError, IndexError, TypeError, OverflowError):
            parsed = None
        if parsed is not None and parsed[0]:
            return _build(str(parsed[0]), str(parsed[1]), str(parsed[2]))

    if match := _SLASHED.match(value):
        return _build(*match.groups())

    return None
