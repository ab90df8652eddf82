import pytz
from datetime import datetime

from .config import DISPLAY_TIMEZONE


def get_display_timezone(timezone_str: str = DISPLAY_TIMEZONE) -> pytz.BaseTzInfo:
    """Get a timezone object from string, with fallback to UTC."""
    try:
        return pytz.timezone(timezone_str)
    except pytz.exceptions.UnknownTimeZoneError:
        return pytz.UTC


def utc_now() -> datetime:
    return datetime.now(pytz.UTC)


def utc_to_display_timezone(utc_datetime: datetime, timezone_str: str = DISPLAY_TIMEZONE) -> datetime:
    """Convert UTC datetime to the configured display timezone."""
    if utc_datetime.tzinfo is None:
        # Assume UTC if no timezone info
        utc_datetime = pytz.UTC.localize(utc_datetime)
    return utc_datetime.astimezone(get_display_timezone(timezone_str))


def format_datetime_for_display(datetime_obj: datetime, timezone_str: str = DISPLAY_TIMEZONE,
                                format_str: str = "%Y-%m-%d %H:%M:%S %Z") -> str:
    return utc_to_display_timezone(datetime_obj, timezone_str).strftime(format_str)
