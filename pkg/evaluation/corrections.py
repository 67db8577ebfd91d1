"""Corrected evaluation: re-scoring after annotators adjudicate false positives and false negatives."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import infra.logger as logger
from evaluation.scorer import EvalReport, build_report
from graph.model import Iri, Triple
from graph.turtle import expand, parse_triple
from infra.errors import ValidationError
from infra.storage import read_text

FP = "FP"
FN = "FN"
NEW_FACT = "new-fact"
OMISSION = "omission"
KG_NOISE = "kg-noise"
VERDICTS = (NEW_FACT, OMISSION, KG_NOISE)
CSV_COLUMNS = ("entity", "triple-ttl", "class", "verdict")


class UnmatchedCorrection(ValidationError):
    pass


@dataclass(frozen=True)
class Correction:
    entity: Iri
    triple: Triple
    original_class: str
    verdict: str

    def __post_init__(self):
        if self.original_class not in (FP, FN):
            raise ValidationError(f"Correction class must be FP or FN, got '{self.original_class}'")
        if self.verdict not in VERDICTS:
            raise ValidationError(f"Unknown verdict '{self.verdict}'")


@dataclass(frozen=True)
class CorrectionSet:
    entries: tuple = ()

    def __post_init__(self):
        seen = set()
        for c in self.entries:
            key = (c.entity, c.triple)
            if key in seen:
                raise ValidationError(f"Triple corrected twice for {c.entity}: {c.triple}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.entries)


def read_corrections(path: str, prefixes: dict | None = None) -> CorrectionSet:
    rows = csv.DictReader(io.StringIO(read_text(path)))
    if rows.fieldnames is None or not set(CSV_COLUMNS) <= set(rows.fieldnames):
        raise ValidationError(f"{path}: corrections need columns {', '.join(CSV_COLUMNS)}")
    entries = []
    for row in rows:
        entries.append(Correction(
            entity=expand(row["entity"], prefixes),
            triple=parse_triple(row["triple-ttl"], prefixes),
            original_class=row["class"].strip().upper(),
            verdict=row["verdict"].strip().lower(),
        ))
    return CorrectionSet(tuple(entries))


def apply_corrections(report: EvalReport, corrections: CorrectionSet) -> EvalReport:
    """New facts turn FP into TP; KG noise leaves FN. Every other verdict keeps its class."""
    outcomes = {o.entity: o for o in report.graphs}
    unmatched = 0
    for c in corrections.entries:
        outcome = outcomes.get(c.entity)
        pool = None if outcome is None else (outcome.fp if c.original_class == FP else outcome.fn)
        if pool is None or c.triple not in pool:
            logger.warning(f"⚠️ {UnmatchedCorrection(f'{c.original_class} {c.triple} not scored for {c.entity}')}")
            unmatched += 1
            continue
        if c.original_class == FP and c.verdict == NEW_FACT:
            outcomes[c.entity] = replace(outcome, tp=outcome.tp | {c.triple}, fp=outcome.fp - {c.triple})
        elif c.original_class == FN and c.verdict == KG_NOISE:
            outcomes[c.entity] = replace(outcome, fn=outcome.fn - {c.triple})

    if unmatched:
        logger.warning(f"⚠️ {unmatched} correction(s) matched no scored triple")
    return build_report(outcomes.values(), report.wellformed_rate, report.subject_match_rate,
                        report.unknown_entities, report.macro_properties)
