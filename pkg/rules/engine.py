"""Forward-chaining enrichment of description graphs.

Rule file syntax, one directive per line (``#`` starts a comment)::

    DERIVE dbo:birthDate -> dbo:birthYear BY year-of-date
    PROPAGATE dbo:country OVER dbo:birthPlace,dbo:deathPlace,dbo:nationality
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

import infra.logger as logger
from graph.model import XSD_DATE, XSD_DATETIME, XSD_GYEAR, Graph, Iri, Literal, Triple
from graph.turtle import expand
from infra.errors import ValidationError

YEAR_OF_DATE = "year-of-date"
TRANSFORMS = (YEAR_OF_DATE,)

_DERIVE = re.compile(r"^DERIVE\s+(\S+)\s*->\s*(\S+)\s+BY\s+(\S+)$")
_PROPAGATE = re.compile(r"^PROPAGATE\s+(\S+)\s+OVER\s+(.+)$")
_LEADING_YEAR = re.compile(r"^(\d{4})-")


class RuleError(ValidationError):
    pass


class UnknownDirective(RuleError):
    pass


class UnknownTransform(RuleError):
    pass


class LookupFailure(ValidationError):
    def __init__(self, iri: Iri, reason: str = "lookup unavailable"):
        self.iri = iri
        super().__init__(f"Lookup failed for {iri}: {reason}")


class TripleLookup(Protocol):
    """Background-KG access used by PROPAGATE. Implementations must allow concurrent reads."""

    def objects(self, subject: Iri, predicate: Iri) -> set: ...


class FixtureLookup:
    """Offline lookup over a fixed set of (place, dbo:country, country) style triples."""

    def __init__(self, graph: Graph):
        self._index = {}
        for t in graph.triples:
            self._index.setdefault((t.subject, t.predicate), set()).add(t.object)

    def objects(self, subject: Iri, predicate: Iri) -> set:
        return set(self._index.get((subject, predicate), ()))


class NoLookup:
    def objects(self, subject: Iri, predicate: Iri) -> set:
        raise LookupFailure(subject, "no background knowledge graph configured")


@dataclass(frozen=True)
class LiteralDerive:
    source: Iri
    target: Iri
    transform: str = YEAR_OF_DATE

    def __post_init__(self):
        if self.source == self.target:
            raise RuleError(f"DERIVE source and target are both {self.source}")
        if self.transform not in TRANSFORMS:
            raise UnknownTransform(f"Unknown transform '{self.transform}'")

    def derive(self, triples: set, aux: TripleLookup) -> set:
        derived = set()
        for t in triples:
            if t.predicate != self.source or not isinstance(t.object, Literal):
                continue
            year = year_of_date(t.object)
            if year is not None:
                derived.add(Triple(t.subject, self.target, year))
        return derived


@dataclass(frozen=True)
class PropagateVia:
    bridge: Iri
    over: frozenset

    def __post_init__(self):
        object.__setattr__(self, "over", frozenset(self.over))
        if self.bridge in self.over:
            raise RuleError(f"PROPAGATE bridge {self.bridge} cannot be one of its own properties")
        if not self.over:
            raise RuleError("PROPAGATE needs at least one property")

    def derive(self, triples: set, aux: TripleLookup) -> set:
        derived = set()
        for t in triples:
            if t.predicate not in self.over or not isinstance(t.object, Iri):
                continue
            for value in aux.objects(t.object, self.bridge):
                if isinstance(value, Iri):
                    derived.add(Triple(t.subject, t.predicate, value))
        return derived


@dataclass(frozen=True)
class RuleSet:
    rules: tuple = ()

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def derived_properties(self) -> frozenset:
        targets = set()
        for rule in self.rules:
            if isinstance(rule, LiteralDerive):
                targets.add(rule.target)
            else:
                targets |= rule.over
        return frozenset(targets)


def year_of_date(value: Literal) -> Literal | None:
    """Leading 4-digit year of an xsd:date / xsd:dateTime, typed xsd:gYear."""
    if value.datatype not in (XSD_DATE, XSD_DATETIME):
        return None
    match = _LEADING_YEAR.match(value.lexical)
    if not match:
        logger.warning(f"⚠️ Skipping year derivation for unsupported date '{value.lexical}'")
        return None
    return Literal(match.group(1), XSD_GYEAR)


def parse_rules(text: str, prefixes: dict | None = None) -> RuleSet:
    rules = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        derive = _DERIVE.match(line)
        if derive:
            source, target, transform = derive.groups()
            if transform not in TRANSFORMS:
                raise UnknownTransform(f"line {line_no}: unknown transform '{transform}'")
            rules.append(LiteralDerive(expand(source, prefixes), expand(target, prefixes), transform))
            continue

        propagate = _PROPAGATE.match(line)
        if propagate:
            bridge, over = propagate.groups()
            props = [expand(p, prefixes) for p in over.split(",") if p.strip()]
            rules.append(PropagateVia(expand(bridge, prefixes), frozenset(props)))
            continue

        raise UnknownDirective(f"line {line_no}: unknown directive '{line.split()[0]}'")
    return RuleSet(tuple(rules))


def apply_rules(g: Graph, rs: RuleSet, aux: TripleLookup | None = None) -> Graph:
    """Closure of ``g`` under ``rs``. Original triples are kept.

    Countries reached through PROPAGATE are never used as a source for another hop.
    """
    aux = aux if aux is not None else NoLookup()
    closure = set(g.triples)
    propagated = set()

    changed = True
    while changed:
        changed = False
        for rule in rs.rules:
            if isinstance(rule, PropagateVia):
                new = rule.derive(closure - propagated, aux) - closure
                propagated |= new
            else:
                new = rule.derive(closure, aux) - closure
            if new:
                closure |= new
                changed = True
    return Graph(frozenset(closure), g.primary_subject)
