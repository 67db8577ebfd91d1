from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

import infra.logger as logger
from graph.model import Iri, property_set
from infra.errors import ValidationError

OTHER = "Other"


class KTooLarge(ValidationError):
    pass


@dataclass(frozen=True)
class Stratum:
    label: object  # Iri of a rare property, or OTHER
    members: tuple

    @property
    def name(self) -> str:
        return self.label.value if isinstance(self.label, Iri) else str(self.label)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Fold:
    train: frozenset
    validation: frozenset
    test: frozenset


def stratum_label(props: frozenset, rare: frozenset, counts: dict):
    """Rare stratum an example joins given the stratum sizes so far."""
    present = props & rare
    if not present:
        return OTHER
    return min(present, key=lambda p: (counts.get(p, 0), p.value))


def stratify(dataset: Iterable, rare: Iterable[Iri], seed: int) -> list:
    """Partitions examples into one stratum per rare property plus Other.

    An example with a single rare property joins that stratum; with several it joins the
    least represented one so far; with none it joins Other. Examples are visited in a seeded
    shuffle of id order. Empty strata are left out.
    """
    rare = frozenset(rare)
    order = sorted(dataset, key=lambda ex: ex.example_id)
    random.Random(seed).shuffle(order)

    counts = {}
    members = {}
    for ex in order:
        label = stratum_label(property_set(ex.graph), rare, counts)
        if label != OTHER:
            counts[label] = counts.get(label, 0) + 1
        members.setdefault(label, []).append(ex.example_id)

    labels = sorted((l for l in members if l != OTHER), key=lambda p: p.value)
    if OTHER in members:
        labels.append(OTHER)
    strata = [Stratum(l, tuple(members[l])) for l in labels]
    logger.info("✅ Strata: " + ", ".join(f"{st.name}={len(st)}" for st in strata))
    return strata


def kfold(strata: list, k: int, seed: int) -> list:
    """k (train, validation, test) splits of example ids.

    Each stratum is dealt round-robin over the folds, continuing where the previous stratum
    stopped. Split f tests on fold f and validates on fold f+1.
    """
    if k < 2:
        raise ValidationError("k must be >= 2")
    total = sum(len(st) for st in strata)
    if k > total:
        raise KTooLarge(f"k={k} exceeds the {total} examples to split")

    rng = random.Random(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for st in strata:
        members = sorted(st.members)
        rng.shuffle(members)
        for i, example_id in enumerate(members):
            folds[(offset + i) % k].append(example_id)
        offset += len(members)

    splits = []
    everyone = frozenset(i for fold in folds for i in fold)
    for f in range(k):
        test = frozenset(folds[f])
        validation = frozenset(folds[(f + 1) % k])
        splits.append(Fold(everyone - test - validation, validation, test))
    return splits
