"""SHACL shape subset: node shapes with sh:property blocks, patterns and pattern validity."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from rdflib import Graph as RdfGraph
from rdflib import URIRef
from rdflib.namespace import RDF, SH
from rdflib.plugins.parsers.notation3 import BadSyntax

from graph.model import DEFAULT_PREFIXES, Graph, Iri, Literal, property_set
from graph.turtle import NO_BASE, TurtleSyntaxError, check_no_base
from infra.errors import ValidationError

DATATYPE = "datatype"
OBJECT = "object"

MAX_PATTERN_PROPERTIES = 62


class ShapeError(ValidationError):
    pass


class MissingPath(ShapeError):
    pass


class BothDatatypeAndClass(ShapeError):
    pass


class NoTargetClass(ShapeError):
    pass


class MissingRange(ShapeError):
    pass


class PatternOverflow(ShapeError):
    pass


class PropertyOutsideShape(ShapeError):
    def __init__(self, iri: Iri):
        self.iri = iri
        super().__init__(f"Property {iri} is not part of the shape")


class UnknownProperty(ShapeError):
    def __init__(self, iri: Iri):
        self.iri = iri
        super().__init__(f"Property {iri} is not constrained by the shape")


class EmptyRestriction(ShapeError):
    pass


@dataclass(frozen=True)
class PropertyConstraint:
    path: Iri
    kind: str
    range: Iri
    min_count: int = 0
    max_count: int | None = None

    def __post_init__(self):
        if self.kind not in (DATATYPE, OBJECT):
            raise ShapeError(f"Unknown constraint kind {self.kind!r}")
        if self.min_count < 0:
            raise ShapeError(f"sh:minCount must be >= 0 on {self.path}")

    @property
    def required(self) -> bool:
        return self.min_count >= 1


@dataclass(frozen=True)
class ShaclShape:
    id: Iri
    target_class: Iri
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(sorted(self.constraints, key=lambda c: c.path.value)))
        paths = [c.path for c in self.constraints]
        if not paths:
            raise ShapeError(f"Shape {self.id} constrains no property")
        if len(set(paths)) != len(paths):
            raise ShapeError(f"Shape {self.id} repeats a property path")

    @property
    def properties(self) -> frozenset:
        return frozenset(c.path for c in self.constraints)

    def constraint(self, path: Iri) -> PropertyConstraint | None:
        for c in self.constraints:
            if c.path == path:
                return c
        return None

    def properties_of_kind(self, kind: str) -> frozenset:
        return frozenset(c.path for c in self.constraints if c.kind == kind)


@dataclass(frozen=True)
class Pattern:
    properties: frozenset

    def __post_init__(self):
        object.__setattr__(self, "properties", frozenset(self.properties))
        if not self.properties:
            raise ShapeError("A pattern needs at least one property")

    def sorted(self) -> list:
        return sorted(self.properties, key=lambda p: p.value)


def _int_value(rdf: RdfGraph, node, predicate) -> int | None:
    value = rdf.value(node, predicate)
    if value is None:
        return None
    try:
        return int(str(value))
    except ValueError:
        raise ShapeError(f"{predicate} must be an integer, got {value!r}")


def _parse_constraint(rdf: RdfGraph, node) -> PropertyConstraint:
    path = rdf.value(node, SH.path)
    if path is None:
        raise MissingPath("sh:property block without sh:path")
    if not isinstance(path, URIRef):
        raise ShapeError(f"Only IRI property paths are supported, got {path!r}")
    datatype = rdf.value(node, SH.datatype)
    cls = rdf.value(node, SH["class"])
    if datatype is not None and cls is not None:
        raise BothDatatypeAndClass(f"{path} declares both sh:datatype and sh:class")
    if datatype is None and cls is None:
        raise MissingRange(f"{path} declares neither sh:datatype nor sh:class")

    min_count = _int_value(rdf, node, SH.minCount)
    return PropertyConstraint(
        path=Iri(str(path)),
        kind=DATATYPE if datatype is not None else OBJECT,
        range=Iri(str(datatype if datatype is not None else cls)),
        min_count=min_count or 0,
        max_count=_int_value(rdf, node, SH.maxCount),
    )


def parse_shapes(turtle: str, prefixes: dict | None = None) -> list:
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    header = "".join(f"@prefix {name}: <{ns}> .\n" for name, ns in sorted(prefixes.items()))
    try:
        check_no_base(turtle)
    except TurtleSyntaxError as e:
        raise ShapeError(f"Shape file is not valid Turtle: {e}")
    rdf = RdfGraph()
    try:
        rdf.parse(data=header + turtle, format="turtle", publicID=NO_BASE)
    except BadSyntax as e:
        raise ShapeError(f"Shape file is not valid Turtle: {getattr(e, '_why', e)}")
    relative = sorted({str(n) for triple in rdf for n in triple if isinstance(n, URIRef) and str(n).startswith(NO_BASE)})
    if relative:
        raise ShapeError(f"Shape file uses a relative IRI <{relative[0][len(NO_BASE):]}>")

    shapes = []
    for node in sorted(set(rdf.subjects(RDF.type, SH.NodeShape)), key=str):
        target = rdf.value(node, SH.targetClass)
        if target is None:
            raise NoTargetClass(f"Node shape {node} has no sh:targetClass")
        constraints = [_parse_constraint(rdf, prop) for prop in rdf.objects(node, SH.property)]
        shapes.append(ShaclShape(Iri(str(node)), Iri(str(target)), tuple(constraints)))
    return shapes


def parse_shape(turtle: str, prefixes: dict | None = None) -> ShaclShape:
    shapes = parse_shapes(turtle, prefixes)
    if not shapes:
        raise ShapeError("No sh:NodeShape found")
    if len(shapes) > 1:
        raise ShapeError(f"Expected one sh:NodeShape, found {len(shapes)}")
    return shapes[0]


def pattern_count(s: ShaclShape) -> int:
    n = len(s.properties)
    if n > MAX_PATTERN_PROPERTIES:
        raise PatternOverflow(f"{n} properties exceed the {MAX_PATTERN_PROPERTIES}-property limit")
    return (1 << n) - 1


def valid_against_pattern(g: Graph, pattern: Pattern) -> bool:
    return property_set(g) == pattern.properties


def realized_patterns(dataset: Iterable, s: ShaclShape) -> dict:
    """Group-by of the examples' property sets. Π(s) itself is never enumerated."""
    allowed = s.properties
    counts = Counter()
    for example in dataset:
        props = property_set(example.graph)
        outside = sorted(props - allowed, key=lambda i: i.value)
        if outside:
            raise PropertyOutsideShape(outside[0])
        if not props:
            raise ShapeError(f"Example {example.entity} has an empty graph")
        counts[Pattern(props)] += 1
    return dict(counts)


def restrict_shape(s: ShaclShape, props: Iterable[Iri]) -> ShaclShape:
    props = frozenset(props)
    if not props:
        raise EmptyRestriction(f"Restriction of {s.id} to no property")
    unknown = sorted(props - s.properties, key=lambda i: i.value)
    if unknown:
        raise UnknownProperty(unknown[0])
    return ShaclShape(s.id, s.target_class, tuple(c for c in s.constraints if c.path in props))


def split_by_kind(s: ShaclShape) -> tuple:
    """The datatype-only and object-only restrictions of ``s``."""
    return (restrict_shape(s, s.properties_of_kind(DATATYPE)),
            restrict_shape(s, s.properties_of_kind(OBJECT)))


def conforms(g: Graph, s: ShaclShape) -> bool:
    """Every triple uses a shape property with an object of the constrained kind."""
    for t in g.triples:
        c = s.constraint(t.predicate)
        if c is None:
            return False
        if c.kind == DATATYPE and not isinstance(t.object, Literal):
            return False
        if c.kind == OBJECT and not isinstance(t.object, Iri):
            return False
    return True
