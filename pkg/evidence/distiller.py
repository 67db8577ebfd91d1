"""Builds the distilled knowledge base from the dual base: rule closure, shape restriction,
then evidence filtering of every remaining triple."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

from tqdm import tqdm

import infra.logger as logger
from corpus.dataset import DualExample
from corpus.fetcher import Fetcher, FetchPolicy, NotInFixture
from evidence.wikicheck import RANGE_MISMATCH, EvidenceVerdict, check_datatype_triple, check_object_triple
from graph.model import Graph, Iri, Literal
from infra.errors import IoFailure
from rules.engine import LookupFailure, RuleSet, TripleLookup, apply_rules
from shapes.shacl import DATATYPE, ShaclShape


@dataclass
class ExampleOutcome:
    example: DualExample
    verdicts: list = field(default_factory=list)
    distilled: DualExample | None = None
    error: str | None = None

    def records(self, prefixes: dict | None = None) -> list:
        if self.error is not None:
            return [{"entity": self.example.entity.value, "example_id": self.example.example_id,
                     "error": self.error}]
        records = []
        for verdict in self.verdicts:
            record = verdict.to_record(prefixes)
            record["example_id"] = self.example.example_id
            records.append(record)
        return records


def check_triple(example: DualExample, t, s: ShaclShape, types: Callable[[Iri], set]) -> EvidenceVerdict:
    c = s.constraint(t.predicate)
    if c.kind == DATATYPE:
        if not isinstance(t.object, Literal):
            return EvidenceVerdict(t, False, RANGE_MISMATCH)
        return check_datatype_triple(example.abstract_plain, t)
    if not isinstance(t.object, Iri):
        return EvidenceVerdict(t, False, RANGE_MISMATCH)
    return check_object_triple(example.abstract_md, t, c, types)


def distill_example(example: DualExample, s: ShaclShape, rs: RuleSet,
                    aux: TripleLookup, types: Callable[[Iri], set]) -> ExampleOutcome:
    outcome = ExampleOutcome(example)
    try:
        closure = apply_rules(example.graph, rs, aux).restrict(s.properties)
        outcome.verdicts = [check_triple(example, t, s, types) for t in closure.sorted()]
    except (LookupFailure, NotInFixture, IoFailure) as e:
        outcome.error = str(e)
        outcome.verdicts = []
        return outcome

    kept = frozenset(v.triple for v in outcome.verdicts if v.supported)
    if kept:
        outcome.distilled = example.with_graph(Graph(kept, example.entity))
    return outcome


def distill_with_diagnostics(base: Iterable[DualExample], s: ShaclShape, rs: RuleSet, policy: FetchPolicy,
                             aux: TripleLookup | None = None, types: Callable[[Iri], set] | None = None,
                             jobs: int = 1) -> tuple:
    """Returns ``(examples, outcomes)``. Failures are recorded per example; the run continues."""
    base = list(base)
    if aux is None or types is None:
        fetcher = Fetcher(policy)
        aux = aux if aux is not None else fetcher
        types = types if types is not None else fetcher.type_lookup

    def work(example):
        return distill_example(example, s, rs, aux, types)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        outcomes = list(tqdm(pool.map(work, base), total=len(base), desc="Distilling", unit="example"))

    examples = [o.distilled for o in outcomes if o.distilled is not None]
    failed = sum(1 for o in outcomes if o.error is not None)
    empty = sum(1 for o in outcomes if o.error is None and o.distilled is None)
    supported = sum(1 for o in outcomes for v in o.verdicts if v.supported)
    checked = sum(len(o.verdicts) for o in outcomes)

    if failed:
        logger.warning(f"⚠️ {failed} example(s) excluded after lookup failures")
    logger.info(f"✅ Distilled {len(examples)}/{len(base)} examples; {supported}/{checked} triples supported, "
                f"{empty} empty after filtering")
    return examples, outcomes


def distill(base: Iterable[DualExample], s: ShaclShape, rs: RuleSet, policy: FetchPolicy,
            aux: TripleLookup | None = None, types: Callable[[Iri], set] | None = None,
            jobs: int = 1) -> list:
    examples, _ = distill_with_diagnostics(base, s, rs, policy, aux, types, jobs)
    return examples
