from datetime import date

import pytest

from corpus.dataset import example_from_record
from corpus.fetcher import FetchPolicy
from evidence.dates import (
    DAY_MONTH,
    DAY_MONTH_YEAR,
    ISO,
    MONTH_DAY_YEAR,
    YEAR,
    date_renderings,
    date_value,
    find_form,
    parse_rendered_date,
    render_in_form,
)
from evidence.distiller import distill_example, distill_with_diagnostics
from evidence.wikicheck import (
    DATE_FORM,
    EXACT_STRING,
    MARKDOWN_LINK,
    NOT_FOUND,
    RANGE_MISMATCH,
    EvidenceVerdict,
    check_datatype_triple,
    check_object_triple,
    extract_markdown_links,
    link_to,
    resource_for_url,
)
from graph.model import DBO, DBR, RDF_TYPE, XSD_DATE, XSD_GYEAR, XSD_STRING, Iri, Literal, Triple
from graph.turtle import parse_triple, parse_turtle
from infra.errors import IoFailure, PreconditionError, ValidationError
from infra.storage import read_jsonl, read_text
from rules.engine import FixtureLookup, NoLookup

TURING = Iri(DBR + "Alan_Turing")
BIRTH_DATE = Iri(DBO + "birthDate")
BIRTH_YEAR = Iri(DBO + "birthYear")
BIRTH_PLACE = Iri(DBO + "birthPlace")
MAIDA_VALE = Iri(DBR + "Maida_Vale")
PLACE = Iri(DBO + "Place")
BORN = Literal("1912-06-23", XSD_DATE)

PLAIN = "Alan Turing (23 June 1912 – 7 June 1954) was an English mathematician born in Maida Vale."
MD = ("Alan Turing (23 June 1912 – 7 June 1954) was an English mathematician born in "
      "[Maida Vale](https://en.wikipedia.org/wiki/Maida_Vale).")


def _types(iri):
    return {PLACE} if iri == MAIDA_VALE else set()


# --- dates ---

def test_date_renderings():
    assert date_value(BORN) == date(1912, 6, 23)
    assert date_renderings(BORN) == ["1912-06-23", "23 June 1912", "June 23, 1912", "23 June"]
    assert date_renderings(Literal("1912", XSD_GYEAR)) == ["1912"]
    assert date_renderings(Literal("1912-02-30", XSD_DATE)) == []
    assert date_renderings(Literal("1912-06-23", XSD_STRING)) == []


def test_find_form_reports_the_rendering_used():
    assert find_form(PLAIN, BORN) == (DAY_MONTH_YEAR, "23 June 1912")
    assert find_form("born on June 23, 1912", BORN) == (MONTH_DAY_YEAR, "June 23, 1912")
    assert find_form("born 1912-06-23", BORN) == (ISO, "1912-06-23")
    assert find_form("born on 23 June", BORN) == (DAY_MONTH, "23 June")
    assert find_form("born in 1913", BORN) is None
    assert render_in_form(Literal("1815-12-10", XSD_DATE), MONTH_DAY_YEAR) == "December 10, 1815"


def test_date_renderings_need_digit_boundaries():
    may_8 = Literal("1945-05-08", XSD_DATE)
    t = Triple(TURING, BIRTH_DATE, may_8)
    assert not check_datatype_triple("He was born on 18 May 1945 in Nice.", t).supported
    assert not check_datatype_triple("He was born on 28 May in Nice.", t).supported
    assert find_form("born 1945-05-081", may_8) is None
    assert check_datatype_triple("He was born on 8 May 1945 in Nice.", t).reason == DATE_FORM
    assert find_form("(8 May 1945 – 1990)", may_8) == (DAY_MONTH_YEAR, "8 May 1945")
    year = Triple(TURING, BIRTH_YEAR, Literal("1945", XSD_GYEAR))
    assert not check_datatype_triple("catalogue no. 19456", year).supported


@pytest.mark.parametrize("t", [
    Triple(TURING, BIRTH_DATE, BORN),
    Triple(TURING, BIRTH_YEAR, Literal("1912", XSD_GYEAR)),
    Triple(TURING, Iri(DBO + "alias"), Literal("Prof")),
])
@pytest.mark.parametrize("suffix", [" He died in 1954.", " Known as Prof, 18 May 1912.", " 1912", "\n2 June."])
def test_appending_text_keeps_supported_verdicts(t, suffix):
    text = "Alan Turing, Prof, was born on 23 June 1912."
    assert check_datatype_triple(text, t).supported
    assert check_datatype_triple(text + suffix, t).supported


@pytest.mark.parametrize("text, expected", [
    ("23 June 1912", (Literal("1912-06-23", XSD_DATE), DAY_MONTH_YEAR)),
    ("June 23, 1912", (Literal("1912-06-23", XSD_DATE), MONTH_DAY_YEAR)),
    ("1912-06-23", (Literal("1912-06-23", XSD_DATE), ISO)),
    ("1912", (Literal("1912", XSD_GYEAR), YEAR)),
    ("23 June", None),
    ("31 February 1912", None),
    ("sometime in June", None),
])
def test_parse_rendered_date(text, expected):
    assert parse_rendered_date(text) == expected


# --- single triple checks ---

def test_datatype_checks():
    assert check_datatype_triple(PLAIN, Triple(TURING, BIRTH_DATE, BORN)).reason == DATE_FORM
    assert check_datatype_triple(PLAIN, Triple(TURING, BIRTH_YEAR, Literal("1912", XSD_GYEAR))).supported
    label = Triple(TURING, Iri(DBO + "birthName"), Literal("Alan Mathison Turing", XSD_STRING))
    assert check_datatype_triple(PLAIN, label).reason == NOT_FOUND
    name = Triple(TURING, Iri(DBO + "alias"), Literal("Alan Turing", XSD_STRING))
    assert check_datatype_triple(PLAIN, name).reason == EXACT_STRING


def test_datatype_check_needs_literal():
    with pytest.raises(PreconditionError):
        check_datatype_triple(PLAIN, Triple(TURING, BIRTH_PLACE, MAIDA_VALE))


def test_extract_markdown_links():
    links = extract_markdown_links("In [Paris](/wiki/Paris_(Texas)) and [Nice](./Nice) [^1].")
    assert [(l.anchor, l.url) for l in links] == [("Paris", "/wiki/Paris_(Texas)"), ("Nice", "./Nice")]


@pytest.mark.parametrize("url, expected", [
    ("https://en.wikipedia.org/wiki/Maida_Vale", DBR + "Maida_Vale"),
    ("/wiki/Caf%C3%A9#History", DBR + "Café"),
    ("./M%C3%A1laga", DBR + "Málaga"),
    ("https://example.com/wiki/Maida_Vale", None),
    ("#cite_note-1", None),
])
def test_resource_for_url(url, expected):
    resource = resource_for_url(url)
    assert (resource.value if resource else None) == expected


def test_link_to_compares_decoded_titles():
    md = "born in [Málaga](./M%C3%A1laga)"
    assert link_to(md, Iri(DBR + "Málaga")).anchor == "Málaga"
    assert link_to(md, Iri(DBR + "Madrid")) is None


def test_object_checks(person_shape):
    c = person_shape.constraint(BIRTH_PLACE)
    place = Triple(TURING, BIRTH_PLACE, MAIDA_VALE)
    assert check_object_triple(MD, place, c, _types).reason == MARKDOWN_LINK
    assert check_object_triple(MD, place, c, lambda iri: set()).reason == RANGE_MISMATCH
    assert check_object_triple(PLAIN, place, c, _types).reason == NOT_FOUND


def test_verdict_reason_must_match_support():
    t = Triple(TURING, BIRTH_DATE, BORN)
    with pytest.raises(ValidationError):
        EvidenceVerdict(t, True, NOT_FOUND)
    record = EvidenceVerdict(t, True, DATE_FORM).to_record()
    assert record == {"entity": TURING.value, "triple": 'dbr:Alan_Turing dbo:birthDate "1912-06-23"^^xsd:date .',
                      "supported": True, "reason": DATE_FORM}


# --- distillation ---

def _turing(make_example):
    return make_example("Alan_Turing", [
        ("dbo:birthDate", BORN),
        ("dbo:birthPlace", "dbr:Maida_Vale"),
        ("dbo:deathPlace", "dbr:Wilmslow"),
        ("dbo:spouse", "dbr:Nobody"),
    ], plain=PLAIN, md=MD)


def test_distill_example(make_example, person_shape, person_rules, country_lookup):
    outcome = distill_example(_turing(make_example), person_shape, person_rules, country_lookup, _types)

    assert outcome.error is None
    assert outcome.distilled.graph.triples == {
        Triple(TURING, BIRTH_DATE, BORN),
        Triple(TURING, BIRTH_YEAR, Literal("1912", XSD_GYEAR)),
        Triple(TURING, BIRTH_PLACE, MAIDA_VALE),
    }
    reasons = {v.triple.predicate.local_name: v.reason for v in outcome.verdicts if not v.supported}
    assert reasons == {"deathPlace": NOT_FOUND}
    assert all(v.triple.predicate != Iri(DBO + "spouse") for v in outcome.verdicts)


def test_distill_records_lookup_failures(make_example, person_shape, person_rules):
    outcome = distill_example(_turing(make_example), person_shape, person_rules, NoLookup(), _types)
    assert outcome.distilled is None
    assert outcome.verdicts == []
    [record] = outcome.records()
    assert record["entity"] == TURING.value and "error" in record


def test_distill_records_io_failures_and_continues(make_example, person_shape, person_rules, country_lookup):
    def flaky_types(iri):
        if iri == MAIDA_VALE:
            raise IoFailure("cache record unwritable")
        return set()

    ada = make_example("Ada_Lovelace", [("dbo:birthDate", Literal("1815-12-10", XSD_DATE))],
                       plain="Ada Lovelace (10 December 1815 – 27 November 1852) was a mathematician.")
    examples, outcomes = distill_with_diagnostics([_turing(make_example), ada], person_shape, person_rules,
                                                  FetchPolicy(), country_lookup, flaky_types)

    assert outcomes[0].error == "cache record unwritable"
    assert outcomes[0].distilled is None
    assert [ex.entity for ex in examples] == [ada.entity]


def test_distill_with_diagnostics(make_example, person_shape, person_rules, country_lookup):
    unsupported = make_example("Ada_Lovelace", [("dbo:birthDate", Literal("1815-12-10", XSD_DATE))],
                               plain="Ada Lovelace was a mathematician.")
    base = [_turing(make_example), unsupported]

    examples, outcomes = distill_with_diagnostics(base, person_shape, person_rules, FetchPolicy(),
                                                  country_lookup, _types, jobs=2)

    assert [ex.entity for ex in examples] == [TURING]
    assert [o.example.entity for o in outcomes] == [TURING, unsupported.entity]
    assert outcomes[1].distilled is None and outcomes[1].error is None
    records = [r for o in outcomes for r in o.records()]
    assert len(records) == len(outcomes[0].verdicts) + 2


def test_distill_keeps_exactly_the_adjudicated_triples(fixture_file, person_shape, person_rules, country_lookup):
    records = list(read_jsonl(fixture_file("adjudicated.jsonl")))
    base = [example_from_record(r) for r in records]
    typed = FixtureLookup(parse_turtle(read_text(fixture_file("adjudicated_types.ttl"))))

    examples, outcomes = distill_with_diagnostics(base, person_shape, person_rules, FetchPolicy(), country_lookup,
                                                  lambda iri: typed.objects(iri, Iri(RDF_TYPE)), jobs=4)

    assert len(records) == len(outcomes) == 20
    for record, outcome in zip(records, outcomes):
        supported = {parse_triple(t) for t in record["supported"]}
        rejected = {parse_triple(t) for t in record["rejected"]}
        assert outcome.error is None
        assert {v.triple for v in outcome.verdicts if v.supported} == supported, record["entity"]
        assert {v.triple for v in outcome.verdicts if not v.supported} == rejected, record["entity"]
        kept = outcome.distilled.graph.triples if outcome.distilled is not None else frozenset()
        assert kept == supported, record["entity"]
    assert [ex.entity.value for ex in examples] == [r["entity"] for r in records if r["supported"]]
