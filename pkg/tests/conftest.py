import os
from datetime import date

import pytest

from corpus.dataset import DualExample
from graph.model import DBR, DEFAULT_PREFIXES, Graph, Iri, Triple
from graph.turtle import expand, parse_turtle
from rules.engine import FixtureLookup, parse_rules
from shapes.shacl import parse_shape

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def _read(name: str) -> str:
    with open(fixture_path(name), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture
def prefixes():
    return dict(DEFAULT_PREFIXES)


@pytest.fixture
def person_shape():
    return parse_shape(_read("person_shape.ttl"))


@pytest.fixture
def person_rules():
    return parse_rules(_read("person.rul"))


@pytest.fixture
def country_lookup():
    return FixtureLookup(parse_turtle(_read("countries.ttl")))


def build_example(name: str, facts=(), plain: str | None = None, md: str | None = None,
                  created: date | None = date(2015, 3, 1), example_id: str = "", page_id: int | None = None):
    """DualExample for ``dbr:<name>``. ``facts`` are ``(prefixed property, term)`` pairs; string
    terms are prefixed IRIs."""
    entity = Iri(DBR + name)
    triples = set()
    for prop, value in facts:
        obj = expand(value) if isinstance(value, str) else value
        triples.add(Triple(entity, expand(prop), obj))
    plain = plain if plain is not None else f"{name.replace('_', ' ')} is a person."
    return DualExample(
        entity=entity,
        abstract_plain=plain,
        abstract_md=md if md is not None else plain,
        graph=Graph(frozenset(triples), entity),
        created_date=created,
        wiki_page_id=page_id,
        example_id=example_id,
    )


@pytest.fixture
def make_example():
    return build_example


@pytest.fixture
def fixture_file():
    return fixture_path
