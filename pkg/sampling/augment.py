"""Synthetic abstract-graph pairs built by re-filling the abstract of one entity with the
graph values of another.

A template is a donor abstract with every surface form of its gold graph cut out: literal
values as written (dates in whichever rendering the abstract uses) and linked objects as their
anchor text in the plain abstract and their full link in the Markdown one. Filling the slots with
another entity's values yields a new pair whose graph is that entity's values for the slotted
properties.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from urllib.parse import quote

import infra.logger as logger
from corpus.dataset import DualExample
from evidence.dates import bounded, find_form, render_in_form, renderings
from evidence.wikicheck import check_datatype_triple, link_to
from graph.model import DBR, Graph, Iri, Literal, Triple, property_set, term_key
from infra.errors import PreconditionError, ValidationError
from shapes.shacl import ShaclShape, conforms

KR0 = "KR0"
KR1 = "KR1"
STRATEGIES = (KR0, KR1)

WIKIPEDIA_ARTICLE = "https://en.wikipedia.org/wiki/"
_PLACEHOLDER_BASE = 0xE000


class TemplateUnfillable(ValidationError):
    pass


class ExhaustedDonors(ValidationError):
    def __init__(self, needed: int, produced: int):
        self.needed = needed
        self.produced = produced
        super().__init__(f"Ran out of template/donor pairs after {produced} of {needed} synthetic examples")


@dataclass(frozen=True)
class Slot:
    property: Iri
    index: int
    form: str | None = None  # date rendering used by the template


@dataclass(frozen=True)
class Surface:
    value: object
    plain: str
    md: str


@dataclass(frozen=True)
class AbstractTemplate:
    source: DualExample
    plain: str
    md: str
    slots: tuple

    @property
    def properties(self) -> frozenset:
        return frozenset(slot.property for slot in self.slots)


def _values(example: DualExample, p: Iri) -> list:
    return sorted(example.graph.objects(example.entity, p), key=term_key)


def _object_surface(example: DualExample, value: Iri) -> Surface:
    link = link_to(example.abstract_md, value)
    if link is not None:
        return Surface(value, link.anchor, f"[{link.anchor}]({link.url})")
    title = value.value[len(DBR):] if value.value.startswith(DBR) else value.local_name
    if not title:
        raise TemplateUnfillable(f"{value} has no article title")
    anchor = title.replace("_", " ")
    return Surface(value, anchor, f"[{anchor}]({WIKIPEDIA_ARTICLE}{quote(title, safe='_(),')})")


def _literal_surface(value: Literal, form: str | None) -> Surface:
    if renderings(value):
        if form is None:
            raise TemplateUnfillable(f"no rendering chosen for date {value.lexical}")
        text = render_in_form(value, form)
        if text is None:
            raise TemplateUnfillable(f"{value.lexical} cannot be rendered as {form}")
    else:
        text = value.lexical
    if not text:
        raise TemplateUnfillable("empty literal")
    return Surface(value, text, text)


def surfaces(example: DualExample, slots: tuple) -> dict:
    """Slot values of ``example``, rendered the way the template writes them."""
    filled = {}
    for slot in slots:
        values = _values(example, slot.property)
        if slot.index >= len(values):
            raise TemplateUnfillable(f"{example.entity} has no value #{slot.index + 1} for {slot.property}")
        value = values[slot.index]
        if isinstance(value, Iri):
            filled[slot] = _object_surface(example, value)
        else:
            filled[slot] = _literal_surface(value, slot.form)
    return filled


def build_template(example: DualExample) -> AbstractTemplate | None:
    """None unless every gold value of ``example`` appears verbatim in its abstract."""
    slots = []
    for p in sorted(property_set(example.graph), key=lambda i: i.value):
        for index, value in enumerate(_values(example, p)):
            form = None
            if isinstance(value, Literal):
                if renderings(value):
                    found = find_form(example.abstract_plain, value)
                    if found is None:
                        return None
                    form = found[0]
                elif not value.lexical or value.lexical not in example.abstract_plain:
                    return None
            elif link_to(example.abstract_md, value) is None:
                return None
            slots.append(Slot(p, index, form))
    if not slots:
        return None

    own = surfaces(example, tuple(slots))
    for slot, surface in own.items():
        if isinstance(surface.value, Iri) and surface.plain not in example.abstract_plain:
            return None
    plain = _cut(example.abstract_plain, {slot: s.plain for slot, s in own.items()}, slots)
    md = _cut(example.abstract_md, {slot: s.md for slot, s in own.items()}, slots)
    return AbstractTemplate(example, plain, md, tuple(slots))


def _cut(text: str, forms: dict, slots: list) -> str:
    # longest first so a year inside a full date stays part of the date
    for slot in sorted(slots, key=lambda sl: -len(forms[sl])):
        placeholder = chr(_PLACEHOLDER_BASE + slots.index(slot))
        text = bounded(forms[slot]).sub(lambda _: placeholder, text)
    return text


def fill_template(template: AbstractTemplate, donor: DualExample) -> tuple:
    """``(abstract_plain, abstract_md, graph)`` of ``template`` filled with ``donor``'s values."""
    if not template.properties <= property_set(donor.graph):
        raise TemplateUnfillable(f"{donor.entity} lacks a property slotted in {template.source.entity}")
    filled = surfaces(donor, template.slots)
    plain, md = template.plain, template.md
    for i, slot in enumerate(template.slots):
        placeholder = chr(_PLACEHOLDER_BASE + i)
        plain = plain.replace(placeholder, filled[slot].plain)
        md = md.replace(placeholder, filled[slot].md)
    graph = Graph(frozenset(Triple(donor.entity, slot.property, filled[slot].value) for slot in template.slots),
                  donor.entity)
    return plain, md, graph


def self_consistent(plain: str, md: str, graph: Graph) -> bool:
    """Every triple of ``graph`` is evidenced by the synthetic abstracts."""
    for t in graph.triples:
        if isinstance(t.object, Literal):
            if not check_datatype_triple(plain, t).supported:
                return False
        elif link_to(md, t.object) is None:
            return False
    return True


def _synthesize(template: AbstractTemplate, donor: DualExample, n: int, s: ShaclShape | None) -> DualExample:
    plain, md, graph = fill_template(template, donor)
    if not self_consistent(plain, md, graph):
        raise TemplateUnfillable(f"{donor.entity} values are not evidenced in {template.source.entity}'s template")
    if s is not None and not conforms(graph, s):
        raise TemplateUnfillable(f"synthetic graph for {donor.entity} does not conform to {s.id}")
    return DualExample(
        entity=donor.entity,
        abstract_plain=plain,
        abstract_md=md,
        graph=graph,
        created_date=template.source.created_date,
        example_id=f"{donor.entity.value}@{template.source.entity.value}#{n}",
        synthetic=True,
    )


def augment_template(base: list, dataset: list, target_prop: Iri, threshold: int, strategy: str,
                     seed: int, s: ShaclShape | None = None) -> list:
    """``dataset`` plus synthetic examples until ``threshold`` examples use ``target_prop``.

    Templates come from the dataset examples bearing ``target_prop``; value donors are the base
    examples bearing it. KR0 draws donors uniformly for each template in turn. KR1 favours the
    templates whose properties are still furthest under ``threshold`` across the dataset.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"Unknown augmentation strategy '{strategy}'")
    dataset = list(dataset)
    counts = Counter(p for ex in dataset for p in property_set(ex.graph))
    needed = threshold - counts[target_prop]
    if needed <= 0:
        logger.info(f"✅ {target_prop} already used by {counts[target_prop]} examples; nothing to add")
        return dataset

    templates = [t for t in (build_template(ex) for ex in dataset if target_prop in property_set(ex.graph)) if t]
    if not templates:
        raise PreconditionError(f"No example bearing {target_prop} has all its values in its abstract")
    rng = random.Random(seed)
    rng.shuffle(templates)

    donors = [ex for ex in base if target_prop in property_set(ex.graph)]
    queues = {}
    for template in templates:
        queue = [d for d in donors if d.entity != template.source.entity and template.properties <= property_set(d.graph)]
        rng.shuffle(queue)
        queues[template.source.example_id] = queue

    synthetics = []
    uses = Counter()
    skipped = 0
    turn = 0
    while len(synthetics) < needed:
        active = [t for t in templates if queues[t.source.example_id]]
        if not active:
            raise ExhaustedDonors(needed, len(synthetics))
        if strategy == KR0:
            template = active[turn % len(active)]
            turn += 1
        else:
            under = {p for p, c in counts.items() if c < threshold and p != target_prop}
            template = min(active, key=lambda t: (-len(t.properties & under), uses[t.source.example_id],
                                                  templates.index(t)))
        donor = queues[template.source.example_id].pop(0)
        try:
            synthetic = _synthesize(template, donor, len(synthetics), s)
        except TemplateUnfillable as e:
            logger.warning(f"⚠️ Skipping template fill: {e}")
            skipped += 1
            continue
        synthetics.append(synthetic)
        uses[template.source.example_id] += 1
        counts.update(property_set(synthetic.graph))

    logger.info(f"✅ {strategy}: {len(synthetics)} synthetic examples from {len(templates)} templates "
                f"({skipped} fills skipped); {target_prop} now used by {counts[target_prop]} examples")
    return dataset + synthetics


def augment_all(base: list, dataset: list, target_prop: Iri) -> list:
    """``dataset`` plus every other base example that uses ``target_prop``."""
    present = {ex.example_id for ex in dataset}
    extra = [ex for ex in base if target_prop in property_set(ex.graph) and ex.example_id not in present]
    logger.info(f"✅ Added {len(extra)} base examples using {target_prop}")
    return list(dataset) + extra
