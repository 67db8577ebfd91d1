"""Surface renderings of xsd:date and xsd:gYear values as they appear in English prose."""
from __future__ import annotations

import re
from datetime import date

from graph.model import XSD_DATE, XSD_GYEAR, Literal

MONTHS = ("January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December")

ISO = "iso"
DAY_MONTH_YEAR = "day-month-year"
MONTH_DAY_YEAR = "month-day-year"
DAY_MONTH = "day-month"
YEAR = "year"

DATE_FORMS = (ISO, DAY_MONTH_YEAR, MONTH_DAY_YEAR, DAY_MONTH)

_DATE_LEXICAL = re.compile(r"^(\d{4})-(\d{2})-(\d{2})(?:Z|[+\-]\d{2}:\d{2})?$")
_YEAR_LEXICAL = re.compile(r"^(\d{4})(?:Z|[+\-]\d{2}:\d{2})?$")
_MONTH = "|".join(MONTHS)

_PARSERS = (
    (ISO, re.compile(r"^(?P<y>\d{4})-(?P<m>\d{2})-(?P<d>\d{2})$")),
    (DAY_MONTH_YEAR, re.compile(rf"^(?P<d>\d{{1,2}}) (?P<mn>{_MONTH}) (?P<y>\d{{4}})$")),
    (MONTH_DAY_YEAR, re.compile(rf"^(?P<mn>{_MONTH}) (?P<d>\d{{1,2}}), (?P<y>\d{{4}})$")),
)
_BARE_YEAR = re.compile(r"^\d{4}$")


def date_value(literal: Literal) -> date | None:
    if literal.datatype != XSD_DATE:
        return None
    match = _DATE_LEXICAL.match(literal.lexical)
    if not match:
        return None
    try:
        return date(int(match.group(1)), int(match.group(2)), int(match.group(3)))
    except ValueError:
        return None


def render(value: date, form: str) -> str:
    month = MONTHS[value.month - 1]
    if form == ISO:
        return value.isoformat()
    if form == DAY_MONTH_YEAR:
        return f"{value.day} {month} {value.year:04d}"
    if form == MONTH_DAY_YEAR:
        return f"{month} {value.day}, {value.year:04d}"
    if form == DAY_MONTH:
        return f"{value.day} {month}"
    raise ValueError(f"Unknown date form '{form}'")


def renderings(literal: Literal) -> list:
    """``(form, text)`` pairs for every accepted rendering of a date literal.

    Empty when the literal is not a well-formed xsd:date or xsd:gYear.
    """
    if literal.datatype == XSD_GYEAR:
        match = _YEAR_LEXICAL.match(literal.lexical)
        return [(YEAR, match.group(1))] if match else []
    value = date_value(literal)
    if value is None:
        return []
    return [(form, render(value, form)) for form in DATE_FORMS]


def date_renderings(literal: Literal) -> list:
    return [text for _, text in renderings(literal)]


def bounded(rendered: str) -> re.Pattern:
    """Matches ``rendered`` only where no digit touches it, so "8 May" stays out of "28 May"."""
    return re.compile(rf"(?<!\d){re.escape(rendered)}(?!\d)")


def find_form(text: str, literal: Literal) -> tuple | None:
    """First rendering of ``literal`` found in ``text``, as ``(form, rendered)``."""
    for form, rendered in renderings(literal):
        if bounded(rendered).search(text):
            return form, rendered
    return None


def find_rendering(text: str, literal: Literal) -> str | None:
    found = find_form(text, literal)
    return found[1] if found else None


def render_in_form(literal: Literal, form: str) -> str | None:
    for candidate, rendered in renderings(literal):
        if candidate == form:
            return rendered
    return None


def parse_rendered_date(text: str) -> tuple | None:
    """Reads one of the rendered forms back. Returns ``(literal, form)`` or None.

    Full dates come back as xsd:date, a bare year as xsd:gYear. The day-month form has no
    year and is never parsed.
    """
    text = text.strip()
    if _BARE_YEAR.match(text):
        return Literal(text, XSD_GYEAR), YEAR
    for form, pattern in _PARSERS:
        match = pattern.match(text)
        if not match:
            continue
        month = int(match.group("m")) if form == ISO else MONTHS.index(match.group("mn")) + 1
        try:
            value = date(int(match.group("y")), month, int(match.group("d")))
        except ValueError:
            return None
        return Literal(value.isoformat(), XSD_DATE), form
    return None
