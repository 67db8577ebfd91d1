"""Aligns free-text relation extractions with the shape vocabulary so they can be scored
like model predictions."""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Protocol

import infra.config as config
import infra.logger as logger
from corpus.fetcher import Fetcher, HttpError, NotInFixture
from evidence.dates import parse_rendered_date
from evaluation.scorer import Prediction
from graph.model import DEFAULT_PREFIXES, Graph, Iri, Triple
from graph.turtle import expand
from infra.errors import ValidationError
from infra.storage import read_jsonl, read_text
from linearize.turtlelight import UnprefixableIri, encode_turtlelight
from rules.engine import RuleSet, TripleLookup, apply_rules
from shapes.shacl import DATATYPE, ShaclShape

LOOKUP_ENDPOINT = "dbpedia-lookup"
MIN_CANDIDATE_SCORE = 0.3

_BAD_URI_PATTERNS = ("List_of_", "Category:", "_(disambiguation)", "Template:")
_HIGHLIGHT = re.compile(r"</?b>", re.IGNORECASE)


@dataclass(frozen=True)
class BaselineTriple:
    subject: str
    relation: str
    object: str


@dataclass(frozen=True)
class BaselineRecord:
    """Extractions for the abstract of one expected entity."""
    entity: Iri
    triples: tuple


@dataclass
class AlignmentReport:
    kept: int = 0
    unmapped: int = 0
    unlinked: int = 0
    bad_dates: int = 0
    unmapped_labels: dict = field(default_factory=dict)


class Linker(Protocol):
    def link(self, text: str) -> Iri | None: ...


class FixtureLinker:
    """Surface text to resource, from a two-column ``text,iri`` CSV."""

    def __init__(self, table: dict):
        self._table = {k.strip(): v for k, v in table.items()}

    @classmethod
    def from_csv(cls, path: str, prefixes: dict | None = None) -> "FixtureLinker":
        table = {}
        for row in csv.DictReader(io.StringIO(read_text(path))):
            if row.get("text") and row.get("iri"):
                table[row["text"]] = expand(row["iri"], prefixes)
        return cls(table)

    def link(self, text: str) -> Iri | None:
        return self._table.get(text.strip())


def clean_entity_text(text: str) -> str:
    text = re.sub(r"\s*\([^)]*\)", "", text.strip())
    text = re.sub(r"'s\b", "", text)
    text = re.sub(r"[.,;:!?]+$", "", text)
    words = text.split()
    if words and words[0].lower() in {"the", "a", "an"}:
        words = words[1:]
    return " ".join(words).strip()


def _first(value):
    if isinstance(value, list):
        return value[0] if value else None
    return value


def score_candidate(doc: dict, query: str) -> float:
    """Label similarity, exact-match bonus and URI simplicity, weighted 0.5/0.25/0.25."""
    resource = _first(doc.get("resource"))
    if not resource:
        return 0.0
    label = _HIGHLIGHT.sub("", _first(doc.get("label")) or "").lower().strip()
    query = query.lower().strip()

    similarity = SequenceMatcher(None, query, label).ratio()
    exact = 1.0 if query == label else 0.0
    name = resource.rsplit("/", 1)[-1]
    if any(pattern in name for pattern in _BAD_URI_PATTERNS):
        simplicity = 0.0
    else:
        simplicity = 1.0 / (1.0 + name.count("_") * 0.3)
    return 0.5 * similarity + 0.25 * exact + 0.25 * simplicity


class LookupLinker:
    """DBpedia Lookup client going through the fetcher's cache and rate limiter."""

    def __init__(self, fetcher: Fetcher, max_results: int = 10):
        self.fetcher = fetcher
        self.max_results = max_results

    def _load(self, query: str) -> dict:
        data = self.fetcher.get_json(config.DBPEDIA_LOOKUP_URL,
                                     params={"query": query, "maxResults": self.max_results, "format": "json"})
        docs = []
        for doc in data.get("docs", []):
            resource = _first(doc.get("resource"))
            if resource:
                docs.append({"resource": resource, "label": _first(doc.get("label")) or ""})
        return {"docs": docs}

    def link(self, text: str) -> Iri | None:
        query = clean_entity_text(text)
        if not query:
            return None
        try:
            payload = self.fetcher.cached(LOOKUP_ENDPOINT, query, lambda: self._load(query))
        except (NotInFixture, HttpError) as e:
            logger.warning(f"⚠️ Lookup failed for '{query}': {e}")
            return None

        best, best_score = None, MIN_CANDIDATE_SCORE
        for doc in payload.get("docs", []):
            candidate = score_candidate(doc, query)
            if candidate >= best_score and (best is None or candidate > best_score):
                best, best_score = doc["resource"], candidate
        return Iri(best) if best else None


def read_mapping(path: str, prefixes: dict | None = None) -> dict:
    """Relation label to property, from a ``label,property`` CSV."""
    rows = csv.DictReader(io.StringIO(read_text(path)))
    if rows.fieldnames is None or not {"label", "property"} <= set(rows.fieldnames):
        raise ValidationError(f"{path}: mapping file needs 'label' and 'property' columns")
    return {row["label"].strip(): expand(row["property"], prefixes) for row in rows if row.get("label")}


def read_baseline(path: str) -> list:
    """JSON Lines of ``{"entity": iri, "triples": [{"subject", "relation", "object"}, ...]}``."""
    records = []
    for record in read_jsonl(path):
        try:
            triples = tuple(BaselineTriple(t["subject"], t["relation"], t["object"])
                            for t in record.get("triples", []))
            records.append(BaselineRecord(Iri(record["entity"]), triples))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"{path}: malformed baseline record ({e})")
    return records


def _align_object(triple: BaselineTriple, prop: Iri, linker: Linker, s: ShaclShape | None, report: AlignmentReport):
    constraint = s.constraint(prop) if s is not None else None
    if constraint is not None and constraint.kind == DATATYPE:
        parsed = parse_rendered_date(triple.object)
        if parsed is None:
            report.bad_dates += 1
            logger.warning(f"⚠️ Cannot read '{triple.object}' as a date for {prop}; dropped")
            return None
        return parsed[0]
    obj = linker.link(triple.object)
    if obj is None:
        report.unlinked += 1
        logger.warning(f"⚠️ No resource for object '{triple.object}'; dropped")
    return obj


def align_baseline(records: list, mapping: dict, linker: Linker, rs: RuleSet,
                   aux: TripleLookup | None = None, s: ShaclShape | None = None,
                   prefixes: dict | None = None) -> tuple:
    """Maps relation labels, links subjects and objects, then enriches with ``rs``.

    Returns ``(predictions, report)``. Dropped triples are counted in the report.
    """
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    report = AlignmentReport()
    predictions = []

    for record in records:
        triples = set()
        for bt in record.triples:
            prop = mapping.get(bt.relation.strip())
            if prop is None:
                report.unmapped += 1
                report.unmapped_labels[bt.relation] = report.unmapped_labels.get(bt.relation, 0) + 1
                continue
            subject = linker.link(bt.subject)
            if subject is None:
                report.unlinked += 1
                logger.warning(f"⚠️ No resource for subject '{bt.subject}'; dropped")
                continue
            obj = _align_object(bt, prop, linker, s, report)
            if obj is None:
                continue
            triples.add(Triple(subject, prop, obj))

        graph = apply_rules(Graph(frozenset(triples)), rs, aux)
        report.kept += len(triples)
        predictions.append(_prediction(record.entity, graph, prefixes))

    logger.info(f"✅ Aligned {report.kept} baseline triples; dropped {report.unmapped} unmapped, "
                f"{report.unlinked} unlinked, {report.bad_dates} unreadable dates")
    return predictions, report


def _prediction(entity: Iri, graph: Graph, prefixes: dict) -> Prediction:
    if not graph:
        return Prediction(entity, "", Graph(), None)
    subjects = graph.subjects()
    text = ""
    if len(subjects) == 1:
        try:
            text = encode_turtlelight(graph, prefixes).text
        except UnprefixableIri:
            pass
    return Prediction(entity, text, graph)
