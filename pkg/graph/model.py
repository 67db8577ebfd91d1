"""Immutable RDF terms, triples and entity-centric graphs."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from rdflib.namespace import RDF, RDFS, XSD, SH, OWL, FOAF

from infra.errors import ValidationError

DBR = "http://dbpedia.org/resource/"
DBO = "http://dbpedia.org/ontology/"

DEFAULT_PREFIXES = {
    "dbr": DBR,
    "dbo": DBO,
    "rdf": str(RDF),
    "rdfs": str(RDFS),
    "xsd": str(XSD),
    "sh": str(SH),
    "owl": str(OWL),
    "foaf": str(FOAF),
}

XSD_DATE = str(XSD.date)
XSD_DATETIME = str(XSD.dateTime)
XSD_GYEAR = str(XSD.gYear)
XSD_STRING = str(XSD.string)
RDF_TYPE = str(RDF.type)
RDFS_LABEL = str(RDFS.label)

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not _SCHEME.match(self.value):
            raise ValidationError(f"IRI must be absolute: {self.value!r}")

    def __str__(self) -> str:
        return self.value

    @property
    def local_name(self) -> str:
        for sep in ("#", "/"):
            if sep in self.value:
                return self.value.rsplit(sep, 1)[1]
        return self.value


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str | None = None
    language: str | None = None

    def __post_init__(self):
        if self.datatype is not None and self.language is not None:
            raise ValidationError("A literal carries a datatype or a language tag, not both")

    def __str__(self) -> str:
        return self.lexical


Term = Union[Iri, Literal]


def term_key(term: Term) -> tuple:
    """Total order over terms: IRIs before literals, then lexical form."""
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    return (1, term.lexical, term.datatype or "", term.language or "")


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, Iri) or not isinstance(self.predicate, Iri):
            raise ValidationError("Triple subject and predicate must be IRIs")
        if not isinstance(self.object, (Iri, Literal)):
            raise ValidationError(f"Unsupported object term: {self.object!r}")

    def sort_key(self) -> tuple:
        return (self.subject.value, self.predicate.value, term_key(self.object))


@dataclass(frozen=True)
class Graph:
    """A set of triples. When ``primary_subject`` is set every triple describes that entity.

    Equality only looks at the triple set.
    """
    triples: frozenset = frozenset()
    primary_subject: Iri | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "triples", frozenset(self.triples))
        if self.primary_subject is not None:
            for t in self.triples:
                if t.subject != self.primary_subject:
                    raise ValidationError(
                        f"Triple subject {t.subject} differs from primary subject {self.primary_subject}"
                    )

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.sorted())

    def __contains__(self, triple) -> bool:
        return triple in self.triples

    def __bool__(self) -> bool:
        return bool(self.triples)

    def sorted(self) -> list:
        return sorted(self.triples, key=Triple.sort_key)

    def subjects(self) -> set:
        return {t.subject for t in self.triples}

    def objects(self, subject: Iri, predicate: Iri) -> set:
        return {t.object for t in self.triples if t.subject == subject and t.predicate == predicate}

    def restrict(self, properties: Iterable[Iri]) -> "Graph":
        keep = set(properties)
        return Graph(frozenset(t for t in self.triples if t.predicate in keep), self.primary_subject)

    def describe(self, entity: Iri) -> "Graph":
        """The entity-centric description graph of ``entity``."""
        return Graph(frozenset(t for t in self.triples if t.subject == entity), entity)


def property_set(g: Graph) -> frozenset:
    return frozenset(t.predicate for t in g.triples)
