from datetime import date

import pytest

from graph.model import DBO, XSD_DATE, Iri, Literal, property_set
from infra.errors import ValidationError
from sampling.exposure import InsufficientCoverage, sufficient_exposure_sample
from sampling.samplers import (
    BIASED_DT_OP,
    CROSS_EVAL_SIZE,
    CROSS_FREQUENT,
    CROSS_NEW,
    CROSS_RARE,
    DEFAULT_CUTOFF,
    RANDOM_SCALED,
    RARE_BIASED,
    SUFFICIENT_EXPOSURE,
    InsufficientEligibleExamples,
    SampleSpec,
    sample,
)
from sampling.stats import FrequencySplit
from sampling.stratify import OTHER, KTooLarge, Stratum, kfold, stratify, stratum_label
from shapes.shacl import restrict_shape


def dbo(name):
    return Iri(DBO + name)


BORN = ("dbo:birthDate", Literal("1900-01-01", XSD_DATE))
PLACE = ("dbo:birthPlace", "dbr:Paris")
OLD = date(2015, 3, 1)
NEW = date(2022, 6, 1)

SPLIT = FrequencySplit(0.3, frozenset({dbo("birthDate"), dbo("birthPlace")}),
                       frozenset({dbo("alias"), dbo("birthName"), dbo("deathPlace")}))


@pytest.fixture
def base(make_example):
    examples = [make_example(f"P{i}", [BORN, PLACE], created=OLD) for i in range(6)]
    examples += [make_example(f"Q{i}", [BORN], created=OLD) for i in range(2)]
    examples += [make_example(f"N{i}", [BORN, PLACE], created=NEW) for i in range(2)]
    examples.append(make_example("R0", [BORN, ("dbo:alias", Literal("Arr"))], created=OLD))
    return examples


def _names(examples):
    return [ex.entity.local_name for ex in examples]


# --- sample specs ---

def test_spec_defaults():
    assert SampleSpec(CROSS_RARE).size == CROSS_EVAL_SIZE
    assert SampleSpec(BIASED_DT_OP, size=5).date_cutoff == DEFAULT_CUTOFF
    assert SampleSpec(RANDOM_SCALED, size=5).date_cutoff is None


@pytest.mark.parametrize("kwargs", [
    {"kind": "biased"},
    {"kind": SUFFICIENT_EXPOSURE},
    {"kind": BIASED_DT_OP},
    {"kind": BIASED_DT_OP, "size": 0},
    {"kind": BIASED_DT_OP, "size": 5, "exposure_threshold": 3},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValidationError):
        SampleSpec(**kwargs)


def test_spec_from_dict():
    spec = SampleSpec.from_dict({"kind": CROSS_NEW, "date_cutoff": "2020-01-01", "exclude": ["a", "b"]})
    assert spec.date_cutoff == date(2020, 1, 1)
    assert spec.exclude == {"a", "b"}
    assert SampleSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValidationError):
        SampleSpec.from_dict({"kind": CROSS_NEW, "colour": "red"})


# --- samplers ---

def test_biased_sample_is_seeded_and_keeps_base_order(base, person_shape):
    spec = SampleSpec(BIASED_DT_OP, size=4, seed=3)
    picked = sample(base, spec, person_shape)

    assert len(picked) == 4
    assert all(name.startswith("P") for name in _names(picked))
    assert picked == sorted(picked, key=base.index)
    assert sample(base, spec, person_shape) == picked


def test_biased_sample_needs_enough_examples(base, person_shape):
    with pytest.raises(InsufficientEligibleExamples) as info:
        sample(base, SampleSpec(BIASED_DT_OP, size=7), person_shape)
    assert info.value.available == 6


def test_cross_eval_new_takes_recent_pages(base, person_shape):
    assert _names(sample(base, SampleSpec(CROSS_NEW, size=2), person_shape)) == ["N0", "N1"]


def test_cross_eval_by_frequency(base, person_shape):
    frequent = sample(base, SampleSpec(CROSS_FREQUENT, size=10), person_shape, SPLIT)
    assert "R0" not in _names(frequent)
    assert _names(sample(base, SampleSpec(CROSS_RARE, size=1), person_shape, SPLIT)) == ["R0"]
    with pytest.raises(ValidationError):
        sample(base, SampleSpec(CROSS_RARE, size=1), person_shape)


def test_rare_biased_honours_cutoff(base, person_shape):
    spec = SampleSpec(RARE_BIASED, size=1, date_cutoff=date(2010, 1, 1))
    with pytest.raises(InsufficientEligibleExamples):
        sample(base, spec, person_shape, SPLIT)
    assert _names(sample(base, SampleSpec(RARE_BIASED, size=1), person_shape, SPLIT)) == ["R0"]


def test_random_scaled_dual_bias(base, person_shape):
    picked = sample(base, SampleSpec(RANDOM_SCALED, size=8, dual_bias=True), person_shape)
    assert sorted(_names(picked)) == ["N0", "N1", "P0", "P1", "P2", "P3", "P4", "P5"]


def test_exclusion(base, person_shape):
    taken = {ex.example_id for ex in base if ex.entity.local_name in ("P0", "P1")}
    picked = sample(base, SampleSpec(BIASED_DT_OP, size=4, exclude=taken), person_shape)
    assert sorted(_names(picked)) == ["P2", "P3", "P4", "P5"]


# --- sufficient exposure ---

def test_sufficient_exposure(base, person_shape):
    shape = restrict_shape(person_shape, {dbo("birthDate"), dbo("birthPlace"), dbo("alias")})
    picked = sufficient_exposure_sample(base, shape, 1, seed=0)

    assert "R0" in _names(picked)
    assert len(picked) == 2
    for p in shape.properties:
        assert sum(1 for ex in picked if p in property_set(ex.graph)) >= 1
    spec = SampleSpec(SUFFICIENT_EXPOSURE, exposure_threshold=1)
    assert sample(base, spec, shape) == picked


def test_sufficient_exposure_coverage(base, person_shape):
    shape = restrict_shape(person_shape, {dbo("birthDate"), dbo("alias")})
    with pytest.raises(InsufficientCoverage) as info:
        sufficient_exposure_sample(base, shape, 2, seed=0)
    assert info.value.property == dbo("alias")
    assert info.value.available == 1


# --- strata and folds ---

RARE = frozenset({dbo("alias"), dbo("birthName"), dbo("deathPlace")})


@pytest.fixture
def stratified(make_example):
    alias = ("dbo:alias", Literal("Nick"))
    name = ("dbo:birthName", Literal("Full Name"))
    dataset = [make_example("A1", [alias]), make_example("A2", [alias]), make_example("B1", [name]),
               make_example("M1", [alias, name])]
    dataset += [make_example(f"O{i}", [BORN]) for i in range(5)]
    return dataset


def test_stratum_label_prefers_least_represented():
    assert stratum_label(frozenset({dbo("alias"), dbo("birthName")}), RARE, {dbo("alias"): 3, dbo("birthName"): 1}) \
        == dbo("birthName")
    assert stratum_label(frozenset({dbo("alias"), dbo("birthName")}), RARE, {}) == dbo("alias")
    assert stratum_label(frozenset({dbo("birthDate")}), RARE, {}) == OTHER


def test_stratify(stratified):
    strata = stratify(stratified, RARE, seed=1)
    by_label = {st.label: set(st.members) for st in strata}

    assert [st.label for st in strata] == [dbo("alias"), dbo("birthName"), OTHER]
    assert {_id("A1"), _id("A2")} <= by_label[dbo("alias")]
    assert _id("B1") in by_label[dbo("birthName")]
    assert _id("M1") in by_label[dbo("alias")] | by_label[dbo("birthName")]
    assert len(by_label[OTHER]) == 5
    assert sum(len(st) for st in strata) == len(stratified)
    assert stratify(stratified, RARE, seed=1) == strata


def test_stratify_matches_hand_assigned_strata(make_example):
    alias = ("dbo:alias", Literal("Nick"))
    name = ("dbo:birthName", Literal("Full Name"))
    died = ("dbo:deathPlace", "dbr:Paris")
    dataset = [make_example(f"B{i}", [name]) for i in range(3)]
    dataset += [make_example("D1", [died]), make_example("X1", [BORN, died])]
    # M1 is the only example with an alias, so alias is never ahead of birthName
    dataset.append(make_example("M1", [alias, name, BORN]))
    dataset += [make_example(f"O{i}", [BORN, PLACE]) for i in range(4)]
    expected = {
        dbo("alias"): {_id("M1")},
        dbo("birthName"): {_id("B0"), _id("B1"), _id("B2")},
        dbo("deathPlace"): {_id("D1"), _id("X1")},
        OTHER: {_id(f"O{i}") for i in range(4)},
    }

    assert len(dataset) == 10
    for seed in range(10):
        strata = stratify(dataset, RARE, seed=seed)
        assert [st.label for st in strata] == [dbo("alias"), dbo("birthName"), dbo("deathPlace"), OTHER]
        assert {st.label: set(st.members) for st in strata} == expected


def _id(name):
    return "http://dbpedia.org/resource/" + name


def test_kfold_partitions(stratified):
    strata = stratify(stratified, RARE, seed=1)
    folds = kfold(strata, 3, seed=1)
    everyone = {ex.example_id for ex in stratified}

    assert len(folds) == 3
    assert set().union(*(f.test for f in folds)) == everyone
    for i, fold in enumerate(folds):
        assert len(fold.test) == 3
        assert fold.validation == folds[(i + 1) % 3].test
        assert fold.train | fold.validation | fold.test == everyone
        assert not fold.train & fold.test and not fold.train & fold.validation
    assert kfold(strata, 3, seed=1) == folds


def test_kfold_bounds():
    strata = [Stratum(OTHER, ("a", "b", "c"))]
    with pytest.raises(ValidationError):
        kfold(strata, 1, seed=0)
    with pytest.raises(KTooLarge):
        kfold(strata, 4, seed=0)
