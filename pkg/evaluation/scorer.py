"""Strict-equality scoring of predicted graphs against gold graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

import infra.logger as logger
from graph.model import DEFAULT_PREFIXES, Graph, Iri
from graph.turtle import format_iri
from infra.errors import ValidationError
from infra.storage import read_jsonl
from linearize.turtlelight import Malformed, decode_turtlelight
from shapes.shacl import ShaclShape

SUMMARY_METRICS = ("recall", "precision", "f1_micro", "f1_macro")


class UnknownEntity(ValidationError):
    def __init__(self, entity: Iri):
        self.entity = entity
        super().__init__(f"Prediction for {entity}, which has no gold graph")


def prf(tp: int, fp: int, fn: int) -> tuple:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class Prediction:
    entity: Iri
    raw_output: str
    decoded: Graph | None = None
    error: str | None = None

    @property
    def well_formed(self) -> bool:
        return self.decoded is not None

    @classmethod
    def from_output(cls, entity: Iri, raw_output: str, prefixes: dict | None = None) -> "Prediction":
        try:
            return cls(entity, raw_output, decode_turtlelight(raw_output, prefixes))
        except Malformed as e:
            return cls(entity, raw_output, None, str(e))


@dataclass(frozen=True)
class GraphOutcome:
    entity: Iri
    tp: frozenset
    fp: frozenset
    fn: frozenset

    @property
    def scores(self) -> tuple:
        return prf(len(self.tp), len(self.fp), len(self.fn))

    def to_dict(self) -> dict:
        precision, recall, f1 = self.scores
        return {"entity": self.entity.value, "tp": len(self.tp), "fp": len(self.fp), "fn": len(self.fn),
                "precision": precision, "recall": recall, "f1": f1}


@dataclass(frozen=True)
class PropertyScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def f1(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]


@dataclass(frozen=True)
class EvalReport:
    graphs: tuple
    per_property: dict
    recall: float
    precision: float
    f1_micro: float
    f1_macro: float
    pooled_precision: float
    pooled_recall: float
    pooled_f1: float
    wellformed_rate: float | None = None
    subject_match_rate: float | None = None
    unknown_entities: int = 0
    macro_properties: frozenset | None = None

    def graph(self, entity: Iri) -> GraphOutcome | None:
        for outcome in self.graphs:
            if outcome.entity == entity:
                return outcome
        return None

    def to_dict(self, prefixes: dict | None = None) -> dict:
        prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
        return {
            "aggregates": {
                "recall": self.recall,
                "precision": self.precision,
                "f1_micro": self.f1_micro,
                "f1_macro": self.f1_macro,
                "pooled_precision": self.pooled_precision,
                "pooled_recall": self.pooled_recall,
                "pooled_f1": self.pooled_f1,
                "wellformed_rate": self.wellformed_rate,
                "subject_match_rate": self.subject_match_rate,
                "unknown_entities": self.unknown_entities,
            },
            "per_graph": [o.to_dict() for o in self.graphs],
            "per_property": {
                format_iri(p, prefixes): {"tp": sc.tp, "fp": sc.fp, "fn": sc.fn, "f1": sc.f1}
                for p, sc in sorted(self.per_property.items(), key=lambda kv: kv[0].value)
            },
        }


def build_report(outcomes: Iterable[GraphOutcome], wellformed_rate: float | None = None,
                 subject_match_rate: float | None = None, unknown_entities: int = 0,
                 properties: Iterable[Iri] | None = None) -> EvalReport:
    """Aggregates graph outcomes. Micro F1 averages graphs; macro F1 averages per-property pools.

    When ``properties`` is given, macro F1 covers only those pools; ``per_property`` keeps every
    predicate seen, out-of-shape predictions included.
    """
    properties = None if properties is None else frozenset(properties)
    outcomes = tuple(sorted(outcomes, key=lambda o: o.entity.value))
    pools = {}
    for o in outcomes:
        for name, triples in (("tp", o.tp), ("fp", o.fp), ("fn", o.fn)):
            for t in triples:
                pools.setdefault(t.predicate, {"tp": 0, "fp": 0, "fn": 0})[name] += 1
    per_property = {p: PropertyScore(**counts) for p, counts in pools.items()}

    scores = [o.scores for o in outcomes]
    mean = lambda values: float(np.mean(values)) if len(values) else 0.0
    tp = sum(len(o.tp) for o in outcomes)
    fp = sum(len(o.fp) for o in outcomes)
    fn = sum(len(o.fn) for o in outcomes)
    pooled_precision, pooled_recall, pooled_f1 = prf(tp, fp, fn)

    return EvalReport(
        graphs=outcomes,
        per_property=per_property,
        recall=mean([r for _, r, _ in scores]),
        precision=mean([p for p, _, _ in scores]),
        f1_micro=mean([f for _, _, f in scores]),
        f1_macro=mean([sc.f1 for p, sc in per_property.items() if properties is None or p in properties]),
        pooled_precision=pooled_precision,
        pooled_recall=pooled_recall,
        pooled_f1=pooled_f1,
        wellformed_rate=wellformed_rate,
        subject_match_rate=subject_match_rate,
        unknown_entities=unknown_entities,
        macro_properties=properties,
    )


def subject_match_rate(preds: Iterable[Prediction], gold=None) -> float | None:
    """Share of well-formed predictions whose subjects are all the expected entity.

    ``gold`` optionally limits the count to predictions of gold entities. None when no
    prediction is well formed.
    """
    expected = None if gold is None else {ex.entity for ex in gold}
    formed = [p for p in preds if p.well_formed and (expected is None or p.entity in expected)]
    if not formed:
        return None
    matched = sum(1 for p in formed if p.decoded.subjects() == {p.entity})
    return matched / len(formed)


def score(gold: Iterable, preds: Iterable[Prediction], s: ShaclShape) -> EvalReport:
    """Gold graphs are restricted to the shape; predictions are taken as they are."""
    gold_by_entity = {}
    for ex in gold:
        if ex.entity in gold_by_entity:
            logger.warning(f"⚠️ Duplicate gold entity {ex.entity}; keeping the first")
            continue
        gold_by_entity[ex.entity] = ex

    pred_by_entity = {}
    unknown = 0
    for p in preds:
        if p.entity not in gold_by_entity:
            logger.warning(f"⚠️ {UnknownEntity(p.entity)}; skipped")
            unknown += 1
            continue
        if p.entity in pred_by_entity:
            logger.warning(f"⚠️ Duplicate prediction for {p.entity}; keeping the first")
            continue
        pred_by_entity[p.entity] = p

    outcomes = []
    formed = 0
    for entity, ex in gold_by_entity.items():
        expected = ex.graph.restrict(s.properties).triples
        p = pred_by_entity.get(entity)
        predicted = p.decoded.triples if p is not None and p.well_formed else frozenset()
        formed += 1 if p is not None and p.well_formed else 0
        outcomes.append(GraphOutcome(entity, expected & predicted, predicted - expected, expected - predicted))

    missing = len(gold_by_entity) - len(pred_by_entity)
    if missing:
        logger.warning(f"⚠️ {missing} gold entities have no prediction; scored as empty graphs")
    wellformed_rate = formed / len(gold_by_entity) if gold_by_entity else None
    report = build_report(outcomes, wellformed_rate, subject_match_rate(pred_by_entity.values()), unknown,
                          s.properties)
    logger.info(f"📊 F1 micro {report.f1_micro:.4f}, macro {report.f1_macro:.4f} over {len(outcomes)} graphs")
    return report


def summarize_folds(reports: list) -> dict:
    """Mean and population standard deviation of the headline metrics across folds."""
    if not reports:
        raise ValidationError("No fold report to summarize")
    summary = {}
    for metric in SUMMARY_METRICS:
        values = np.array([getattr(r, metric) for r in reports], dtype=float)
        summary[metric] = {"mean": float(values.mean()), "std": float(values.std())}
    summary["folds"] = len(reports)
    return summary


def read_predictions(path: str, prefixes: dict | None = None) -> list:
    """Prediction file: JSON Lines of ``{"entity": iri, "output": turtlelight}``."""
    preds = []
    for record in read_jsonl(path):
        try:
            entity = Iri(record["entity"])
        except KeyError:
            raise ValidationError(f"{path}: prediction record without 'entity'")
        preds.append(Prediction.from_output(entity, record.get("output") or "", prefixes))
    return preds
