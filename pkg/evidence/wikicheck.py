"""Evidence checks of single triples against an abstract."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable
from urllib.parse import unquote, urlsplit

from evidence.dates import find_rendering
from graph.model import DBR, XSD_DATE, XSD_GYEAR, Iri, Literal, Triple
from graph.turtle import format_triple
from infra.errors import PreconditionError, ValidationError
from shapes.shacl import OBJECT, PropertyConstraint

EXACT_STRING = "exact-string"
DATE_FORM = "date-form"
MARKDOWN_LINK = "markdown-link"
RANGE_MISMATCH = "range-mismatch"
NOT_FOUND = "not-found"

SUPPORTING_REASONS = frozenset({EXACT_STRING, DATE_FORM, MARKDOWN_LINK})
REASONS = SUPPORTING_REASONS | {RANGE_MISMATCH, NOT_FOUND}

# [anchor](url): innermost brackets, one level of parentheses inside the URL
_LINK = re.compile(r"\[([^\[\]]*)\]\(((?:[^()\s]|\([^()\s]*\))*)\)")

_WIKI_HOSTS = re.compile(r"^(?:[a-z\-]+\.)?(?:m\.)?wikipedia\.org$")


@dataclass(frozen=True)
class EvidenceVerdict:
    triple: Triple
    supported: bool
    reason: str

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValidationError(f"Unknown evidence reason '{self.reason}'")
        if self.supported != (self.reason in SUPPORTING_REASONS):
            raise ValidationError(f"Verdict supported={self.supported} contradicts reason '{self.reason}'")

    def to_record(self, prefixes: dict | None = None) -> dict:
        return {
            "entity": self.triple.subject.value,
            "triple": format_triple(self.triple, prefixes),
            "supported": self.supported,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class MarkdownLink:
    anchor: str
    url: str


def check_datatype_triple(text: str, t: Triple) -> EvidenceVerdict:
    if not isinstance(t.object, Literal):
        raise PreconditionError(f"check_datatype_triple expects a literal object, got {t.object}")
    if t.object.datatype in (XSD_DATE, XSD_GYEAR):
        found = find_rendering(text, t.object)
        return EvidenceVerdict(t, found is not None, DATE_FORM if found is not None else NOT_FOUND)
    lexical = t.object.lexical
    supported = bool(lexical) and lexical in text
    return EvidenceVerdict(t, supported, EXACT_STRING if supported else NOT_FOUND)


def extract_markdown_links(md: str) -> list:
    return [MarkdownLink(m.group(1), m.group(2)) for m in _LINK.finditer(md or "")]


def resource_for_url(url: str) -> Iri | None:
    """DBpedia resource a Wikipedia article URL points to.

    Accepts ``https://en.wikipedia.org/wiki/X``, ``/wiki/X`` and ``./X``. Fragments and query
    strings are dropped, percent-escapes decoded, underscores kept.
    """
    parts = urlsplit(url)
    if parts.netloc and not _WIKI_HOSTS.match(parts.netloc.lower()):
        return None
    path = parts.path
    if "/wiki/" in path:
        title = path.split("/wiki/", 1)[1]
    elif path.startswith("./") and not parts.netloc:
        title = path[2:]
    else:
        return None
    title = unquote(title)
    if not title:
        return None
    return Iri(DBR + title)


def _same_resource(a: Iri, b: Iri) -> bool:
    return unquote(a.value) == unquote(b.value)


def link_to(md: str, iri: Iri) -> MarkdownLink | None:
    """First Markdown link in ``md`` whose target resolves to ``iri``."""
    for link in extract_markdown_links(md):
        resource = resource_for_url(link.url)
        if resource is not None and _same_resource(resource, iri):
            return link
    return None


def check_object_triple(md: str, t: Triple, constraint: PropertyConstraint,
                        types: Callable[[Iri], set]) -> EvidenceVerdict:
    if not isinstance(t.object, Iri):
        raise PreconditionError(f"check_object_triple expects an IRI object, got {t.object}")
    if constraint.kind != OBJECT:
        raise PreconditionError(f"{constraint.path} is not an object property")

    if link_to(md, t.object) is None:
        return EvidenceVerdict(t, False, NOT_FOUND)
    if constraint.range not in types(t.object):
        return EvidenceVerdict(t, False, RANGE_MISMATCH)
    return EvidenceVerdict(t, True, MARKDOWN_LINK)
