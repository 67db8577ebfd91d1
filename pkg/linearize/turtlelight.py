"""TurtleLight: one factorised line of Turtle per entity graph.

    dbr:E dbo:p1 o1, o2; dbo:p2 o3 .

The subject is written once, predicates are sorted by IRI and joined with ``; ``, objects of a
predicate are sorted and joined with ``, ``. Every IRI must compact to a prefixed name.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby

from graph.model import DEFAULT_PREFIXES, Graph, Iri, Term, term_key
from graph.turtle import TurtleSyntaxError, UnknownPrefix, compact_iri, escape_lexical, parse_turtle
from infra.errors import PreconditionError, ValidationError

VERSION = "turtlelight-v1"


class UnprefixableIri(ValidationError):
    def __init__(self, iri: Iri):
        self.iri = iri
        super().__init__(f"No prefix in the prefix map compacts {iri}")


class Malformed(ValidationError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(message)


@dataclass(frozen=True)
class LinearGraph:
    text: str
    graph: Graph


def _name(iri: Iri, prefixes: dict) -> str:
    name = compact_iri(iri, prefixes)
    if name is None:
        raise UnprefixableIri(iri)
    return name


def _object(term: Term, prefixes: dict) -> str:
    if isinstance(term, Iri):
        return _name(term, prefixes)
    text = f'"{escape_lexical(term.lexical)}"'
    if term.language:
        return f"{text}@{term.language}"
    if term.datatype:
        return f"{text}^^{_name(Iri(term.datatype), prefixes)}"
    return text


def encode_turtlelight(g: Graph, prefixes: dict | None = None) -> LinearGraph:
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    subjects = g.subjects()
    if len(subjects) != 1:
        raise PreconditionError(f"TurtleLight encodes one non-empty entity graph, got {len(subjects)} subjects")
    subject = next(iter(subjects))

    groups = []
    by_predicate = sorted(g.triples, key=lambda t: (t.predicate.value, term_key(t.object)))
    for predicate, triples in groupby(by_predicate, key=lambda t: t.predicate):
        objects = ", ".join(_object(t.object, prefixes) for t in triples)
        groups.append(f"{_name(predicate, prefixes)} {objects}")
    text = f"{_name(subject, prefixes)} {'; '.join(groups)} ."
    return LinearGraph(text, g)


def decode_turtlelight(text: str, prefixes: dict | None = None) -> Graph:
    """Parses model output. Any failure surfaces as Malformed, with the character offset when known."""
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    if not text or not text.strip():
        raise Malformed("empty output", 0)
    try:
        g = parse_turtle(text.strip(), prefixes)
    except TurtleSyntaxError as e:
        raise Malformed(str(e), e.position)
    except UnknownPrefix as e:
        position = text.find(f"{e.name}:")
        raise Malformed(str(e), position if position >= 0 else None)
    except ValidationError as e:
        raise Malformed(str(e))
    if not g:
        raise Malformed("no triple found", 0)
    subjects = g.subjects()
    return Graph(g.triples, next(iter(subjects))) if len(subjects) == 1 else g
