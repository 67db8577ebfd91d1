"""Seeded randomized checks of the pipeline's algebraic properties."""
import itertools
import math
import random
from collections import Counter

import pytest

from evaluation.scorer import Prediction, score
from graph.model import DBO, DBR, RDFS_LABEL, XSD_DATE, XSD_GYEAR, XSD_STRING, Graph, Iri, Literal, Triple, property_set
from linearize.turtlelight import Malformed, decode_turtlelight, encode_turtlelight
from linearize.weights import compute_weights
from rules.engine import RuleSet, apply_rules, year_of_date
from sampling.exposure import sufficient_exposure_sample
from sampling.stratify import OTHER, Stratum, kfold, stratify
from shapes.shacl import Pattern, realized_patterns, restrict_shape


def dbo(name):
    return Iri(DBO + name)


def dbr(name):
    return Iri(DBR + name)


BIRTH_DATE = dbo("birthDate")
DEATH_DATE = dbo("deathDate")
BIRTH_PLACE = dbo("birthPlace")
DEATH_PLACE = dbo("deathPlace")
NATIONALITY = dbo("nationality")
ALIAS = dbo("alias")
BIRTH_NAME = dbo("birthName")

PLACES = ["Nice", "Paris", "Mougins", "Lyon", "Málaga", "Atlantis", "Maida_Vale"]
WORDS = ["Ada", "Grace", "O'Brien", "Jean-Luc", "Zoë", "the", "Younger", "IV"]


def _random_date(rng):
    return f"{rng.randint(1000, 1999)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"


def _random_object(rng, kind):
    if kind == "place":
        return dbr(rng.choice(PLACES))
    if kind == "date":
        return Literal(_random_date(rng), XSD_DATE)
    if kind == "year":
        return Literal(str(rng.randint(1000, 1999)), XSD_GYEAR)
    if kind == "label":
        return Literal(" ".join(rng.sample(WORDS, rng.randint(1, 3))), language="en")
    if kind == "string":
        return Literal(" ".join(rng.sample(WORDS, rng.randint(1, 3))), XSD_STRING)
    return Literal(rng.choice(WORDS))


PREDICATE_KINDS = [
    (BIRTH_DATE, "date"), (DEATH_DATE, "date"), (dbo("birthYear"), "year"), (BIRTH_PLACE, "place"),
    (DEATH_PLACE, "place"), (Iri(RDFS_LABEL), "label"), (BIRTH_NAME, "string"), (ALIAS, "plain"),
]


def _random_graph(rng, subject):
    triples = set()
    for _ in range(rng.randint(1, 8)):
        predicate, kind = rng.choice(PREDICATE_KINDS)
        triples.add(Triple(subject, predicate, _random_object(rng, kind)))
    return Graph(frozenset(triples), subject)


# --- linearization ---

def test_turtlelight_round_trips_random_graphs():
    rng = random.Random(11)
    for n in range(1000):
        g = _random_graph(rng, dbr(f"Person_{n}"))
        line = encode_turtlelight(g)
        assert decode_turtlelight(line.text) == g, line.text
        assert encode_turtlelight(decode_turtlelight(line.text)).text == line.text


@pytest.mark.parametrize("text", [
    "",
    "   ",
    "dbr:A",
    "dbr:A dbo:p",
    "dbr:A dbo:p .",
    'dbr:A dbo:p "x',
    "dbr:A dbo:p , dbr:B .",
    "zzz:A dbo:p dbr:B .",
    "_:b dbo:p dbr:B .",
    "dbr:A dbo:p [ dbo:q dbr:C ] .",
])
def test_decoder_reports_every_bad_output_as_malformed(text):
    with pytest.raises(Malformed):
        decode_turtlelight(text)


# --- rule engine ---

def _expected_closure(g, lookup):
    expected = set(g.triples)
    for t in g.triples:
        if t.predicate in (BIRTH_DATE, DEATH_DATE):
            target = dbo("birthYear") if t.predicate == BIRTH_DATE else dbo("deathYear")
            expected.add(Triple(t.subject, target, year_of_date(t.object)))
        if t.predicate in (BIRTH_PLACE, DEATH_PLACE, NATIONALITY):
            for country in lookup.objects(t.object, dbo("country")):
                expected.add(Triple(t.subject, t.predicate, country))
    return expected


def _rule_fixture_graph(rng):
    entities = [dbr(name) for name in ("Alan_Turing", "Ada_Lovelace", "Grace_Hopper")]
    triples = set()
    while len(triples) < 30:
        subject = rng.choice(entities)
        predicate = rng.choice([BIRTH_DATE, DEATH_DATE, BIRTH_PLACE, DEATH_PLACE, NATIONALITY, ALIAS])
        if predicate in (BIRTH_DATE, DEATH_DATE):
            obj = Literal(_random_date(rng), XSD_DATE)
        elif predicate == ALIAS:
            obj = Literal(rng.choice(WORDS))
        else:
            obj = dbr(rng.choice(PLACES))
        triples.add(Triple(subject, predicate, obj))
    return Graph(frozenset(triples))


def test_rule_closure_matches_hand_derivation(person_rules, country_lookup):
    g = _rule_fixture_graph(random.Random(3))
    assert len(g) == 30
    assert apply_rules(g, person_rules, country_lookup).triples == _expected_closure(g, country_lookup)


def test_rule_closure_ignores_rule_order_and_is_idempotent(person_rules, country_lookup):
    g = _rule_fixture_graph(random.Random(5))
    closure = apply_rules(g, person_rules, country_lookup)
    for order in itertools.permutations(person_rules.rules):
        assert apply_rules(g, RuleSet(order), country_lookup) == closure
    assert apply_rules(closure, person_rules, country_lookup) == closure


# --- pattern space ---

def test_realized_patterns_match_group_by(person_shape, make_example):
    rng = random.Random(8)
    kinds = {BIRTH_DATE: Literal("1912-06-23", XSD_DATE), BIRTH_PLACE: "dbr:Paris",
             DEATH_PLACE: "dbr:Nice", ALIAS: Literal("Al")}
    dataset = []
    for n in range(12):
        props = rng.sample(sorted(kinds, key=lambda p: p.value), rng.randint(1, len(kinds)))
        dataset.append(make_example(f"Person_{n}", [(f"dbo:{p.local_name}", kinds[p]) for p in props]))

    brute = Counter(frozenset(t.predicate for t in ex.graph.triples) for ex in dataset)
    realized = realized_patterns(dataset, person_shape)
    assert {pattern.properties: n for pattern, n in realized.items()} == dict(brute)
    assert sum(realized.values()) == 12
    assert all(isinstance(p, Pattern) for p in realized)


# --- sufficient exposure ---

EXPOSURE_PROPS = [BIRTH_DATE, BIRTH_PLACE, DEATH_PLACE, ALIAS, BIRTH_NAME]


@pytest.fixture
def exposure_base(make_example):
    values = {"birthDate": Literal("1900-01-01", XSD_DATE), "birthPlace": "dbr:Paris", "deathPlace": "dbr:Nice",
              "alias": Literal("Al"), "birthName": Literal("Al Bo")}
    base = []
    for i in range(420):
        facts = []
        if i % 10:
            facts.append("birthDate")
        if i % 3:
            facts.append("birthPlace")
        if i % 4 == 0:
            facts.append("deathPlace")
        if i % 7 == 0:
            facts.append("alias")
        if i % 5 == 0:
            facts.append("birthName")
        base.append(make_example(f"Person_{i}", [(f"dbo:{name}", values[name]) for name in facts]))
    return base


@pytest.mark.parametrize("seed", range(10))
def test_sufficient_exposure_over_seeds(exposure_base, person_shape, seed):
    shape = restrict_shape(person_shape, EXPOSURE_PROPS)
    selected = sufficient_exposure_sample(exposure_base, shape, 50, seed)

    counts = Counter(p for ex in selected for p in property_set(ex.graph))
    assert all(counts[p] >= 50 for p in EXPOSURE_PROPS)
    assert len({ex.example_id for ex in selected}) == len(selected)
    without_last = Counter(p for ex in selected[:-1] for p in property_set(ex.graph))
    assert any(without_last[p] < 50 for p in EXPOSURE_PROPS)


# --- stratification ---

def test_stratify_partitions_random_graphs(make_example):
    rng = random.Random(21)
    rare = frozenset({ALIAS, BIRTH_NAME, DEATH_PLACE})
    values = {ALIAS: Literal("Al"), BIRTH_NAME: Literal("Al Bo"), DEATH_PLACE: "dbr:Nice",
              BIRTH_DATE: Literal("1900-01-01", XSD_DATE), BIRTH_PLACE: "dbr:Paris"}
    dataset = []
    for n in range(1000):
        props = rng.sample(sorted(values, key=lambda p: p.value), rng.randint(1, 3))
        dataset.append(make_example(f"Person_{n}", [(f"dbo:{p.local_name}", values[p]) for p in props]))

    strata = stratify(dataset, rare, seed=4)

    assigned = [example_id for st in strata for example_id in st.members]
    assert sorted(assigned) == sorted(ex.example_id for ex in dataset)
    label_of = {example_id: st.label for st in strata for example_id in st.members}
    for ex in dataset:
        present = property_set(ex.graph) & rare
        if not present:
            assert label_of[ex.example_id] == OTHER
        else:
            assert label_of[ex.example_id] in present
        if len(present) == 1:
            assert label_of[ex.example_id] == next(iter(present))

    for fold in kfold(strata, 5, seed=4):
        assert not (fold.train & fold.test) and not (fold.train & fold.validation)
        assert len(fold.train | fold.validation | fold.test) == 1000


# --- weights ---

def test_weights_match_formula_and_fall_with_size():
    rng = random.Random(17)
    for _ in range(100):
        sizes = [rng.randint(1, 500) for _ in range(rng.randint(1, 6))]
        strata = [Stratum(f"s{i}", tuple(f"s{i}-{j}" for j in range(n))) for i, n in enumerate(sizes)]
        weights = compute_weights(strata)
        total = sum(sizes)
        for i, n in enumerate(sizes):
            assert weights[f"s{i}"] == pytest.approx(math.log(total / n), rel=1e-12, abs=1e-15)
        for (a, na), (b, nb) in itertools.combinations(enumerate(sizes), 2):
            if na < nb:
                assert weights[f"s{a}"] > weights[f"s{b}"]


# --- scoring ---

def _brute_force(pairs):
    per_graph = []
    pools = {}
    for gold, predicted in pairs:
        tp, fp, fn = gold & predicted, predicted - gold, gold - predicted
        p = len(tp) / len(predicted) if predicted else 0.0
        r = len(tp) / len(gold) if gold else 0.0
        per_graph.append((p, r, 2 * p * r / (p + r) if p + r else 0.0))
        for name, triples in (("tp", tp), ("fp", fp), ("fn", fn)):
            for t in triples:
                pools.setdefault(t.predicate, Counter())[name] += 1

    def f1(c):
        p = c["tp"] / (c["tp"] + c["fp"]) if c["tp"] + c["fp"] else 0.0
        r = c["tp"] / (c["tp"] + c["fn"]) if c["tp"] + c["fn"] else 0.0
        return 2 * p * r / (p + r) if p + r else 0.0

    n = len(per_graph)
    return {
        "precision": sum(g[0] for g in per_graph) / n,
        "recall": sum(g[1] for g in per_graph) / n,
        "f1_micro": sum(g[2] for g in per_graph) / n,
        "f1_macro": sum(f1(c) for c in pools.values()) / len(pools),
    }


def test_score_matches_brute_force(person_shape, make_example):
    rng = random.Random(29)
    in_shape = [(p, kind) for p, kind in PREDICATE_KINDS if p in person_shape.properties and kind != "label"]
    for _ in range(50):
        gold, preds, pairs = [], [], []
        for n in range(rng.randint(1, 5)):
            entity = dbr(f"Person_{n}")
            gold_triples = {Triple(entity, p, _random_object(rng, kind))
                            for p, kind in rng.sample(in_shape, rng.randint(1, 4))}
            kept = {t for t in gold_triples if rng.random() < 0.6}
            extra = {Triple(entity, p, _random_object(rng, kind))
                     for p, kind in rng.sample(in_shape, rng.randint(0, 2))}
            predicted = frozenset(kept | extra)

            example = make_example(entity.local_name)
            gold.append(example.with_graph(Graph(frozenset(gold_triples), entity)))
            preds.append(Prediction(entity, "", Graph(predicted, entity)))
            pairs.append((frozenset(gold_triples), predicted))

        report = score(gold, preds, person_shape)
        expected = _brute_force(pairs)
        for metric, value in expected.items():
            assert getattr(report, metric) == pytest.approx(value, rel=1e-12, abs=1e-15), metric
