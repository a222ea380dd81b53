"""Aggregation formulas for the two judge-backed indices.

The multi-scale fidelity index combines a weighted global score with a
gated average over ten local-patch scores; the instance compliance score
blends attribute and spatial-relation alignment under an existence penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .client import GLOBAL_KEYS, ICS_KEYS, LOCAL_KEYS, JudgeResult

MSFI_LOCAL_COUNT = 10


@dataclass
class WeightConfig:
    """Per-sub-dimension integer weights plus the ICS blend factors.

    Weights default to 1 (the published user-study integers are not public);
    alpha and beta must sum to 1.
    """

    global_weights: dict[str, int] = field(
        default_factory=lambda: {k: 1 for k in GLOBAL_KEYS})
    local_weights: dict[str, int] = field(
        default_factory=lambda: {k: 1 for k in LOCAL_KEYS})
    alpha: float = 0.6
    beta: float = 0.4

    def __post_init__(self):
        for w in (*self.global_weights.values(), *self.local_weights.values()):
            if w <= 0:
                raise ValueError("weights must be positive")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("alpha + beta must equal 1")


def msfi_dimension_score(scores: list[int], weights: list[int]) -> float:
    """Weighted mean of one dimension's sub-scores."""
    if not scores or len(scores) != len(weights):
        raise ValueError("scores and weights must be equal-length and non-empty")
    return sum(w * s for w, s in zip(weights, scores)) / sum(weights)


def _dimension(result: JudgeResult, keys: tuple[str, ...],
               weights: dict[str, int]) -> float:
    scores = []
    for k in keys:
        v = result.scores[k]
        if not (1 <= v <= 5):
            raise ValueError(f"sub-score {k}={v} outside [1, 5]")
        scores.append(v)
    return msfi_dimension_score(scores, [weights[k] for k in keys])


def msfi_index(global_result: JudgeResult, local_results: list[JudgeResult],
               weights: WeightConfig | None = None) -> float:
    """Global fidelity plus a global-gated average of the ten local scores.

    Result = S_global + (S_global / 5) * mean(S_local); in [1.2, 10] for
    valid integer sub-scores.
    """
    weights = weights or WeightConfig()
    if len(local_results) != MSFI_LOCAL_COUNT:
        raise ValueError(f"expected {MSFI_LOCAL_COUNT} local results, "
                         f"got {len(local_results)}")
    s_global = _dimension(global_result, GLOBAL_KEYS, weights.global_weights)
    locals_mean = sum(_dimension(r, LOCAL_KEYS, weights.local_weights)
                      for r in local_results) / MSFI_LOCAL_COUNT
    return s_global + (s_global / 5.0) * locals_mean


def ics_score(iev: int, aaa: int, sra: int,
              alpha: float = 0.6, beta: float = 0.4) -> float:
    """sqrt(IEV/10) * (alpha * AAA + beta * SRA); the square-root gate
    penalizes instance omissions before blending attribute and spatial
    alignment."""
    for name, v in (("IEV", iev), ("AAA", aaa), ("SRA", sra)):
        if not (1 <= v <= 10):
            raise ValueError(f"{name}={v} outside [1, 10]")
    return math.sqrt(iev / 10.0) * (alpha * aaa + beta * sra)


def ics_from_result(result: JudgeResult, alpha: float = 0.6,
                    beta: float = 0.4) -> float:
    return ics_score(*(result.scores[k] for k in ICS_KEYS), alpha=alpha, beta=beta)
