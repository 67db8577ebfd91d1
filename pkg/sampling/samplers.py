"""Declarative dataset builds: biased, rare-biased, scaled, sufficient-exposure and cross-evaluation samples."""
from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from datetime import date
from typing import Callable, Iterable

import infra.logger as logger
from graph.model import property_set
from infra.errors import ValidationError
from sampling.exposure import sufficient_exposure_sample
from sampling.stats import FrequencySplit
from shapes.shacl import DATATYPE, OBJECT, ShaclShape

BIASED_DT_OP = "biased-dt-op"
RARE_BIASED = "rare-biased"
RANDOM_SCALED = "random-scaled"
SUFFICIENT_EXPOSURE = "sufficient-exposure"
CROSS_NEW = "cross-eval-new"
CROSS_FREQUENT = "cross-eval-frequent"
CROSS_RARE = "cross-eval-rare"
CROSS_RANDOM = "cross-eval-random"

CROSS_EVAL_KINDS = (CROSS_NEW, CROSS_FREQUENT, CROSS_RARE, CROSS_RANDOM)
KINDS = (BIASED_DT_OP, RARE_BIASED, RANDOM_SCALED, SUFFICIENT_EXPOSURE) + CROSS_EVAL_KINDS

CROSS_EVAL_SIZE = 200
DEFAULT_CUTOFF = date(2021, 1, 1)


class InsufficientEligibleExamples(ValidationError):
    def __init__(self, needed: int, available: int):
        self.needed = needed
        self.available = available
        super().__init__(f"Need {needed} eligible examples, only {available} available")


@dataclass(frozen=True)
class SampleSpec:
    kind: str
    size: int | None = None
    seed: int = 0
    date_cutoff: date | None = None
    exposure_threshold: int | None = None
    dual_bias: bool = False
    exclude: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"Unknown sample kind '{self.kind}' (expected one of {', '.join(KINDS)})")
        if self.size is None and self.kind in CROSS_EVAL_KINDS:
            object.__setattr__(self, "size", CROSS_EVAL_SIZE)
        if self.date_cutoff is None and self.kind in (BIASED_DT_OP, CROSS_NEW):
            object.__setattr__(self, "date_cutoff", DEFAULT_CUTOFF)
        object.__setattr__(self, "exclude", frozenset(self.exclude))

        if self.kind == SUFFICIENT_EXPOSURE:
            if self.exposure_threshold is None:
                raise ValidationError("sufficient-exposure needs exposure_threshold")
        elif self.exposure_threshold is not None:
            raise ValidationError(f"exposure_threshold only applies to {SUFFICIENT_EXPOSURE}")
        if self.kind != SUFFICIENT_EXPOSURE and self.size is None:
            raise ValidationError(f"{self.kind} needs a size")
        if self.size is not None and self.size <= 0:
            raise ValidationError("size must be > 0")

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSpec":
        data = dict(data)
        unknown = set(data) - {"kind", "size", "seed", "date_cutoff", "exposure_threshold", "dual_bias", "exclude"}
        if unknown:
            raise ValidationError(f"Unknown sample spec field(s): {', '.join(sorted(unknown))}")
        if "kind" not in data:
            raise ValidationError("Sample spec needs a 'kind'")
        cutoff = data.get("date_cutoff")
        if isinstance(cutoff, str):
            try:
                data["date_cutoff"] = date.fromisoformat(cutoff)
            except ValueError:
                raise ValidationError(f"date_cutoff '{cutoff}' is not an ISO date")
        data["exclude"] = frozenset(data.get("exclude") or ())
        return cls(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["date_cutoff"] = self.date_cutoff.isoformat() if self.date_cutoff else None
        data["exclude"] = sorted(self.exclude)
        return data


def _created_before(cutoff: date) -> Callable:
    return lambda ex: ex.created_date is not None and ex.created_date < cutoff


def _has_dt_and_op(s: ShaclShape) -> Callable:
    dt, op = s.properties_of_kind(DATATYPE), s.properties_of_kind(OBJECT)

    def check(ex) -> bool:
        props = property_set(ex.graph)
        return bool(props & dt) and bool(props & op)
    return check


def eligibility(spec: SampleSpec, s: ShaclShape, split: FrequencySplit | None) -> list:
    """The filters an example must pass for ``spec``."""
    filters = []
    if spec.kind == BIASED_DT_OP or (spec.kind == RANDOM_SCALED and spec.dual_bias):
        filters.append(_has_dt_and_op(s))
    if spec.kind in (BIASED_DT_OP, RARE_BIASED, RANDOM_SCALED) and spec.date_cutoff is not None:
        filters.append(_created_before(spec.date_cutoff))
    if spec.kind == CROSS_NEW:
        cutoff = spec.date_cutoff
        filters.append(lambda ex: ex.created_date is not None and ex.created_date >= cutoff)

    if spec.kind in (RARE_BIASED, CROSS_FREQUENT, CROSS_RARE):
        if split is None:
            raise ValidationError(f"{spec.kind} needs a frequency split")
        if spec.kind == CROSS_FREQUENT:
            filters.append(lambda ex: property_set(ex.graph) <= split.frequent)
        else:
            filters.append(lambda ex: bool(property_set(ex.graph) & split.rare))
    return filters


def sample(base: Iterable, spec: SampleSpec, s: ShaclShape, split: FrequencySplit | None = None) -> list:
    """Seeded sample without replacement from the examples eligible under ``spec``.

    Output keeps base order.
    """
    base = [ex for ex in base if ex.example_id not in spec.exclude]
    if spec.kind == SUFFICIENT_EXPOSURE:
        return sufficient_exposure_sample(base, s, spec.exposure_threshold, spec.seed)

    filters = eligibility(spec, s, split)
    eligible = [i for i, ex in enumerate(base) if all(f(ex) for f in filters)]
    if len(eligible) < spec.size:
        raise InsufficientEligibleExamples(spec.size, len(eligible))

    chosen = sorted(random.Random(spec.seed).sample(eligible, spec.size))
    logger.info(f"✅ {spec.kind}: sampled {spec.size} of {len(eligible)} eligible examples (seed {spec.seed})")
    return [base[i] for i in chosen]
