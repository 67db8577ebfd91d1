from __future__ import annotations

import math

import numpy as np

import infra.logger as logger
from infra.errors import ValidationError

LOG_BASE = "e"


class EmptyStratum(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


def compute_weights(strata: list) -> dict:
    """Inverse-log-frequency weight per stratum: ln(total / |stratum|)."""
    for st in strata:
        if len(st) == 0:
            raise EmptyStratum(f"Stratum {st.name} has no member")
    if not strata:
        raise EmptyStratum("No stratum to weight")
    total = sum(len(st) for st in strata)
    if len(strata) == 1:
        logger.warning(f"⚠️ Single stratum {strata[0].name}: every weight is ln(1) = 0")
    return {st.label: math.log(total / len(st)) for st in strata}


def reference_ce(gold, predicted, weight: float = 1.0) -> float:
    """Token-averaged cross-entropy of ``predicted`` against ``gold``, scaled by ``weight``.

    Both arguments are T x V sequences of probability distributions. A zero predicted
    probability where the gold distribution has mass gives ``inf``.
    """
    gold = np.asarray(gold, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if gold.ndim != 2 or predicted.ndim != 2:
        raise ValidationError("Expected T x V distribution sequences")
    if gold.shape != predicted.shape:
        raise LengthMismatch(f"gold {gold.shape} vs predicted {predicted.shape}")
    if gold.shape[0] == 0:
        raise ValidationError("Empty sequence")
    for name, dist in (("gold", gold), ("predicted", predicted)):
        if not np.allclose(dist.sum(axis=1), 1.0, atol=1e-6):
            raise ValidationError(f"{name} rows must sum to 1")

    if np.any((gold > 0) & (predicted == 0)):
        return math.inf
    mask = gold > 0
    token_loss = -(gold[mask] * np.log(predicted[mask])).sum()
    return float(weight * token_loss / gold.shape[0])
