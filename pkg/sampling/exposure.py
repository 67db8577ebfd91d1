import random
from collections import Counter
from typing import Iterable

import infra.logger as logger
from graph.model import Iri, property_set
from infra.errors import ValidationError
from shapes.shacl import ShaclShape


class InsufficientCoverage(ValidationError):
    def __init__(self, prop: Iri, available: int, threshold: int):
        self.property = prop
        self.available = available
        super().__init__(f"Only {available} examples bear {prop}; {threshold} needed")


def sufficient_exposure_sample(base: Iterable, s: ShaclShape, threshold: int, seed: int) -> list:
    """Random draws until every shape property is used by at least ``threshold`` selected examples.

    Properties are served from the least to the most represented in ``base``; examples selected
    for one property count towards every property they carry.
    """
    if threshold < 1:
        raise ValidationError("exposure threshold must be >= 1")
    base = list(base)
    bearers = {p: [ex for ex in base if p in property_set(ex.graph)] for p in s.properties}

    order = sorted(s.properties, key=lambda p: (len(bearers[p]), p.value))
    for p in order:
        if len(bearers[p]) < threshold:
            raise InsufficientCoverage(p, len(bearers[p]), threshold)

    rng = random.Random(seed)
    selected = []
    selected_ids = set()
    counts = Counter()
    for p in order:
        if counts[p] >= threshold:
            continue
        pool = [ex for ex in bearers[p] if ex.example_id not in selected_ids]
        rng.shuffle(pool)
        for ex in pool:
            if counts[p] >= threshold:
                break
            selected.append(ex)
            selected_ids.add(ex.example_id)
            counts.update(property_set(ex.graph))
        logger.debug(f"{p}: {counts[p]} examples after its turn, {len(selected)} selected")

    logger.info(f"✅ Sufficient-exposure sample: {len(selected)} examples, threshold {threshold}")
    return selected
