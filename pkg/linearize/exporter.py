"""Trainer-ready JSON Lines: one train/validation/test triple of files per fold."""
from __future__ import annotations

import os
from dataclasses import dataclass

import infra.logger as logger
from graph.model import DEFAULT_PREFIXES, Iri
from graph.turtle import format_iri
from infra.errors import ValidationError
from infra.manifest import spec_hash
from infra.storage import write_json, write_jsonl
from linearize.prompts import build_prompt
from linearize.turtlelight import VERSION, LinearGraph, UnprefixableIri, encode_turtlelight
from linearize.weights import LOG_BASE

PLAIN = "plain"
MD = "md"
ABSTRACT_KINDS = (PLAIN, MD)
SPLITS = ("train", "validation", "test")
MANIFEST_NAME = "export.manifest.json"


@dataclass(frozen=True)
class WeightedExample:
    prompt: str
    target: LinearGraph
    weight: float
    stratum: str
    fold: int
    synthetic: bool
    entity: Iri

    def to_record(self) -> dict:
        return {
            "prompt": self.prompt,
            "target": self.target.text,
            "weight": self.weight,
            "stratum": self.stratum,
            "fold": self.fold,
            "synthetic": self.synthetic,
            "entity": self.entity.value,
        }


def stratum_name(label, prefixes: dict) -> str:
    return format_iri(label, prefixes) if isinstance(label, Iri) else str(label)


def split_path(out_dir: str, fold: int, split: str) -> str:
    return os.path.join(out_dir, f"fold-{fold}.{split}.jsonl")


def export_training_set(dataset: list, strata: list, weights: dict, folds: list, out_dir: str,
                        prefixes: dict | None = None, abstract_kind: str = PLAIN, seed: int = 0,
                        spec: dict | None = None, fmt: str = "jsonl") -> list:
    """Writes every fold split and the export manifest; returns the written paths."""
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    if fmt != "jsonl":
        raise ValidationError(f"Unsupported export format '{fmt}'")
    if abstract_kind not in ABSTRACT_KINDS:
        raise ValidationError(f"abstract_kind must be one of {', '.join(ABSTRACT_KINDS)}")

    stratum_of = {}
    for st in strata:
        if st.label not in weights:
            raise ValidationError(f"No weight for stratum {st.name}")
        for example_id in st.members:
            stratum_of[example_id] = st.label
    by_id = {ex.example_id: ex for ex in dataset}
    missing = sorted(set(by_id) - set(stratum_of))
    if missing:
        raise ValidationError(f"{len(missing)} example(s) belong to no stratum, e.g. {missing[0]}")

    targets = {}
    skipped = []
    for ex in dataset:
        try:
            targets[ex.example_id] = encode_turtlelight(ex.graph, prefixes)
        except UnprefixableIri as e:
            logger.warning(f"⚠️ Not exporting {ex.example_id}: {e}")
            skipped.append(ex.example_id)

    paths = []
    counts = {}
    for f, fold in enumerate(folds):
        for split, ids in zip(SPLITS, (fold.train, fold.validation, fold.test)):
            unknown = sorted(set(ids) - set(by_id))
            if unknown:
                raise ValidationError(f"Fold {f} {split} names unknown example {unknown[0]}")
            records = []
            for ex in dataset:
                if ex.example_id not in ids or ex.example_id not in targets:
                    continue
                abstract = ex.abstract_plain if abstract_kind == PLAIN else ex.abstract_md
                label = stratum_of[ex.example_id]
                records.append(WeightedExample(
                    prompt=build_prompt(ex.entity, abstract),
                    target=targets[ex.example_id],
                    weight=weights[label],
                    stratum=stratum_name(label, prefixes),
                    fold=f,
                    synthetic=ex.synthetic,
                    entity=ex.entity,
                ).to_record())
            path = split_path(out_dir, f, split)
            counts[f"fold-{f}.{split}"] = write_jsonl(path, records)
            paths.append(path)

    manifest = {
        "seed": seed,
        "spec_hash": spec_hash(spec or {}),
        "log_base": LOG_BASE,
        "linearization": VERSION,
        "abstract_kind": abstract_kind,
        "folds": len(folds),
        "weights": {stratum_name(label, prefixes): w for label, w in weights.items()},
        "counts": counts,
        "skipped": skipped,
    }
    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    write_json(manifest_path, manifest)
    paths.append(manifest_path)
    logger.info(f"✅ Exported {len(folds)} folds of {len(dataset) - len(skipped)} examples to {out_dir}")
    return paths
