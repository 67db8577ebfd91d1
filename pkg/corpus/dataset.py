"""The dual base record and its JSON Lines file format."""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable

from graph.model import DEFAULT_PREFIXES, Graph, Iri
from graph.turtle import parse_turtle, serialize_turtle
from infra.errors import ValidationError
from infra.storage import read_jsonl, write_jsonl


@dataclass(frozen=True)
class DualExample:
    entity: Iri
    abstract_plain: str
    abstract_md: str
    graph: Graph
    created_date: date | None = None
    wiki_page_id: int | None = None
    example_id: str = ""
    synthetic: bool = False

    def __post_init__(self):
        if not self.abstract_plain:
            raise ValidationError(f"{self.entity}: abstract_plain is empty")
        if self.graph.primary_subject is None:
            object.__setattr__(self, "graph", Graph(self.graph.triples, self.entity))
        elif self.graph.primary_subject != self.entity:
            raise ValidationError(f"{self.entity}: graph describes {self.graph.primary_subject}")
        if not self.example_id:
            object.__setattr__(self, "example_id", self.entity.value)

    def with_graph(self, graph: Graph) -> "DualExample":
        return replace(self, graph=Graph(graph.triples, self.entity))


def example_to_record(example: DualExample, prefixes: dict | None = None) -> dict:
    record = {
        "entity": example.entity.value,
        "abstract_plain": example.abstract_plain,
        "abstract_md": example.abstract_md,
        "graph_ttl": serialize_turtle(example.graph, prefixes or DEFAULT_PREFIXES),
        "created_date": example.created_date.isoformat() if example.created_date else None,
        "wiki_page_id": example.wiki_page_id,
    }
    if example.example_id != example.entity.value:
        record["example_id"] = example.example_id
    if example.synthetic:
        record["synthetic"] = True
    return record


def example_from_record(record: dict, prefixes: dict | None = None) -> DualExample:
    try:
        entity = Iri(record["entity"])
        created = record.get("created_date")
        page_id = record.get("wiki_page_id")
        return DualExample(
            entity=entity,
            abstract_plain=record["abstract_plain"],
            abstract_md=record.get("abstract_md") or "",
            graph=parse_turtle(record.get("graph_ttl", ""), prefixes, primary_subject=entity),
            created_date=date.fromisoformat(created) if created else None,
            wiki_page_id=int(page_id) if page_id is not None else None,
            example_id=record.get("example_id", ""),
            synthetic=bool(record.get("synthetic", False)),
        )
    except KeyError as e:
        raise ValidationError(f"Dual-base record is missing field {e}")
    except ValueError as e:
        raise ValidationError(f"Dual-base record for {record.get('entity')} is invalid: {e}")


def read_dual_base(path: str, prefixes: dict | None = None) -> list:
    return [example_from_record(r, prefixes) for r in read_jsonl(path)]


def write_dual_base(path: str, examples: Iterable[DualExample], prefixes: dict | None = None) -> int:
    return write_jsonl(path, (example_to_record(e, prefixes) for e in examples))
