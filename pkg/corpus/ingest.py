import random
from dataclasses import dataclass, field

from tqdm import tqdm

import infra.logger as logger
from corpus.dataset import DualExample
from corpus.fetcher import Fetcher, HttpError, NotInFixture
from corpus.markdown import html_to_markdown
from graph.model import DBO, RDF_TYPE, Graph, Iri, Literal

WIKI_PAGE_ID = Iri(DBO + "wikiPageID")


@dataclass
class IngestReport:
    requested: int = 0
    ingested: int = 0
    missing: list = field(default_factory=list)
    inconsistent: list = field(default_factory=list)
    empty: list = field(default_factory=list)


def check_temporal_consistency(example: DualExample, expected_page_id: int | None) -> bool:
    """The fetched page must be the revision DBpedia extracted the graph from."""
    if expected_page_id is None:
        logger.warning(f"⚠️ {example.entity} has no dbo:wikiPageID in the KG; excluding it")
        return False
    return example.wiki_page_id == expected_page_id


def expected_page_id(description: Graph) -> int | None:
    for t in description.sorted():
        if t.predicate == WIKI_PAGE_ID and isinstance(t.object, Literal):
            try:
                return int(t.object.lexical)
            except ValueError:
                logger.warning(f"⚠️ Non-numeric dbo:wikiPageID '{t.object.lexical}' on {t.subject}")
    return None


def select_entities(kg: Graph, target_class: Iri | None, sample_size: int | None, seed: int) -> list:
    """Seeded random sub-sample of the KG subjects typed with ``target_class``."""
    rdf_type = Iri(RDF_TYPE)
    if target_class is None:
        candidates = kg.subjects()
    else:
        candidates = {t.subject for t in kg.triples if t.predicate == rdf_type and t.object == target_class}
    candidates = sorted(candidates, key=lambda e: e.value)
    if sample_size is None or sample_size >= len(candidates):
        return candidates
    return sorted(random.Random(seed).sample(candidates, sample_size), key=lambda e: e.value)


def ingest(kg: Graph, entities: list, fetcher: Fetcher) -> tuple:
    """Builds dual-base records for ``entities`` from the KG and the abstract endpoint."""
    report = IngestReport(requested=len(entities))
    examples = []

    for entity in tqdm(entities, desc="Ingesting abstracts", unit="entity"):
        try:
            record = fetcher.fetch_abstract(entity)
        except (NotInFixture, HttpError) as e:
            logger.warning(f"⚠️ Skipping {entity}: {e}")
            report.missing.append(entity.value)
            continue

        if not record.plain:
            report.empty.append(entity.value)
            continue

        description = kg.describe(entity)
        page_id = expected_page_id(description)
        example = DualExample(
            entity=entity,
            abstract_plain=record.plain,
            abstract_md=html_to_markdown(record.html),
            graph=Graph(frozenset(t for t in description.triples if t.predicate != WIKI_PAGE_ID), entity),
            created_date=record.created_date,
            wiki_page_id=record.page_id,
        )
        if not check_temporal_consistency(example, page_id):
            logger.warning(f"⚠️ Page id mismatch for {entity}: page {record.page_id}, KG {page_id}")
            report.inconsistent.append(entity.value)
            continue
        examples.append(example)

    report.ingested = len(examples)
    logger.info(f"✅ Ingested {report.ingested}/{report.requested} entities "
                f"({len(report.missing)} missing, {len(report.inconsistent)} inconsistent)")
    return examples, report
