"""Time parsing, formatting, and session-offset localization.

The design rule inherited from the service layer: every conversion between
UTC and a user's wall clock happens here, on the server. Clients receive
ready-to-display strings and never do their own offset arithmetic.

Internally all instants are floats: seconds since the Unix epoch, UTC.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

# Broadest real-world UTC offsets: UTC-12:00 .. UTC+14:00, minute granularity.
MIN_OFFSET_MIN = -720
MAX_OFFSET_MIN = 840

_UTC = timezone.utc


def parse_iso(text: str) -> float:
    """Parse an ISO-8601 instant ('Z' or explicit offset) to epoch seconds.

    Naive strings (no offset) are rejected: an instant without a zone is a
    bug waiting to happen, not a convenience.
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return dt.timestamp()


def parse_naive(text: str) -> datetime:
    """Parse an ISO-8601 string with no offset into a naive datetime."""
    dt = datetime.fromisoformat(text.strip())
    if dt.tzinfo is not None:
        raise ValueError(f"timestamp {text!r} carries an offset")
    return dt


def iso_utc(epoch: float) -> str:
    """Render epoch seconds as UTC ISO-8601 with a trailing Z.

    Sub-second precision is kept when present (event logs), omitted when the
    instant is whole seconds.
    """
    dt = datetime.fromtimestamp(epoch, tz=_UTC)
    return dt.isoformat().replace("+00:00", "Z")


def localize(epoch: float, offset_min: int) -> str:
    """Render epoch seconds on the wall clock ``offset_min`` minutes from UTC.

    Truncates to whole seconds; the result always carries its offset, e.g.
    '2002-11-18T13:00:00+11:00'.
    """
    check_offset(offset_min)
    tz = timezone(timedelta(minutes=offset_min))
    dt = datetime.fromtimestamp(math.floor(epoch), tz=tz)
    return dt.isoformat()


def delocalize(local_iso: str) -> float:
    """Parse a localized string produced by :func:`localize` back to epoch.

    Identity: delocalize(localize(t, off)) == floor(t) for any valid offset.
    """
    return parse_iso(local_iso)


def check_offset(offset_min: int) -> int:
    if not isinstance(offset_min, int) or isinstance(offset_min, bool):
        raise ValueError("offset must be an integer number of minutes")
    if not MIN_OFFSET_MIN <= offset_min <= MAX_OFFSET_MIN:
        raise ValueError(
            f"offset {offset_min} outside [{MIN_OFFSET_MIN}, {MAX_OFFSET_MIN}] minutes"
        )
    return offset_min
