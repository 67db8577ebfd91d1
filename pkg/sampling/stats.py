"""Per-property triple counts and example frequencies, and the frequent/rare split."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from graph.model import DEFAULT_PREFIXES, Iri, property_set
from graph.turtle import expand, format_iri
from infra.errors import ValidationError
from infra.storage import atomic_write_text, read_text
from shapes.shacl import PropertyOutsideShape, ShaclShape

STATS_COLUMNS = ("property", "triples", "examples", "frequency")


@dataclass(frozen=True)
class PropertyStats:
    dataset_size: int
    frequencies: dict
    triple_counts: dict = field(default_factory=dict)
    example_counts: dict = field(default_factory=dict)

    @property
    def properties(self) -> list:
        return sorted(self.frequencies, key=lambda p: p.value)

    def frequency(self, p: Iri) -> float:
        return self.frequencies.get(p, 0.0)

    def triples(self, p: Iri) -> int:
        return self.triple_counts.get(p, 0)

    def examples(self, p: Iri) -> int:
        return self.example_counts.get(p, 0)


@dataclass(frozen=True)
class FrequencySplit:
    mu_p: float
    frequent: frozenset
    rare: frozenset

    def __post_init__(self):
        if self.frequent & self.rare:
            raise ValidationError("A property cannot be both frequent and rare")


def compute_stats(dataset: Iterable, s: ShaclShape) -> PropertyStats:
    triple_counts = Counter()
    example_counts = Counter()
    size = 0
    for example in dataset:
        size += 1
        props = property_set(example.graph)
        outside = sorted(props - s.properties, key=lambda p: p.value)
        if outside:
            raise PropertyOutsideShape(outside[0])
        example_counts.update(props)
        triple_counts.update(t.predicate for t in example.graph.triples)

    frequencies = {p: (example_counts[p] / size if size else 0.0) for p in s.properties}
    return PropertyStats(
        dataset_size=size,
        frequencies=frequencies,
        triple_counts={p: triple_counts[p] for p in s.properties},
        example_counts={p: example_counts[p] for p in s.properties},
    )


def split_by_frequency(classification: PropertyStats, threshold: PropertyStats) -> FrequencySplit:
    """mu_p is the mean frequency under ``threshold``; a property is frequent when its
    ``classification`` frequency is strictly above it."""
    universe = set(classification.frequencies)
    if universe != set(threshold.frequencies):
        raise ValidationError("Classification and threshold statistics cover different properties")
    if not universe:
        raise ValidationError("Cannot split an empty property set")

    mu_p = sum(threshold.frequencies.values()) / len(threshold.frequencies)
    frequent = frozenset(p for p in universe if classification.frequency(p) > mu_p)
    return FrequencySplit(mu_p, frequent, frozenset(universe - frequent))


def stats_to_tsv(stats: PropertyStats, prefixes: dict | None = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(STATS_COLUMNS)
    for p in stats.properties:
        writer.writerow([format_iri(p, prefixes or DEFAULT_PREFIXES), stats.triples(p), stats.examples(p),
                         f"{stats.frequency(p):.6f}"])
    writer.writerow(["#size", "", stats.dataset_size, ""])
    return buffer.getvalue()


def write_stats(path: str, stats: PropertyStats, prefixes: dict | None = None) -> None:
    atomic_write_text(path, stats_to_tsv(stats, prefixes))


def read_stats(path: str, prefixes: dict | None = None) -> PropertyStats:
    """Reads a stats TSV. Only ``property`` and ``frequency`` are required; counts may be blank."""
    rows = csv.DictReader(io.StringIO(read_text(path)), delimiter="\t")
    if rows.fieldnames is None or not {"property", "frequency"} <= set(rows.fieldnames):
        raise ValidationError(f"{path}: stats file needs 'property' and 'frequency' columns")

    size = 0
    frequencies, triples, examples = {}, {}, {}
    for row in rows:
        name = (row.get("property") or "").strip()
        if not name:
            continue
        if name == "#size":
            size = int(row.get("examples") or 0)
            continue
        p = expand(name, prefixes)
        try:
            frequencies[p] = float(row["frequency"])
            if row.get("triples"):
                triples[p] = int(row["triples"].replace(",", ""))
            if row.get("examples"):
                examples[p] = int(row["examples"].replace(",", ""))
        except ValueError as e:
            raise ValidationError(f"{path}: bad value for {name}: {e}")
    return PropertyStats(size, frequencies, triples, examples)
