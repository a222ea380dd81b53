"""Preliminary purification: five per-image detectors and the cohort gate.

Exposure, sharpness (Laplacian variance), flatness (Sobel-variance patch
fraction), content richness (Shannon entropy with a cohort percentile gate),
and an aesthetics gate over externally supplied predictor scores. An image
survives only if it passes all five.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .imgcore import GrayBuffer, ImageBuffer, patch_grid

DETECTORS = ("exposure", "sharpness", "flatness", "entropy", "aesthetics")

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


@dataclass
class DetectorScores:
    exposure_fraction: float = math.nan
    laplacian_variance: float = math.nan
    flatness_ratio: float = math.nan
    shannon_entropy: float = math.nan
    aesthetic_a: float | None = None  # LAION-style predictor (S_L slot)
    aesthetic_b: float | None = None  # MLLM-based predictor (S_A slot)


@dataclass
class FilterVerdict:
    image_id: str
    scores: DetectorScores
    passed: bool
    reject_reasons: list[str] = field(default_factory=list)

    def __post_init__(self):
        assert self.passed == (not self.reject_reasons)


def exposure_fraction(img: ImageBuffer, bright: int = 250, dark: int = 5) -> float:
    """Fraction of samples above ``bright`` or below ``dark``, pooled over channels."""
    data = img.data
    n_bad = int(np.count_nonzero(data > bright)) + int(np.count_nonzero(data < dark))
    return n_bad / data.size


def _replicate_pad(a: np.ndarray) -> np.ndarray:
    return np.pad(a, 1, mode="edge")


def laplacian_variance(g: GrayBuffer) -> float:
    """Population variance of the 4-neighbor Laplacian response.

    Kernel center -4, N/S/E/W +1; replicate-padded borders; signed float
    accumulation without clamping.
    """
    if g.width < 3 or g.height < 3:
        raise ValueError("image must be at least 3x3")
    p = _replicate_pad(g.data.astype(np.float64))
    lap = (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
           - 4.0 * p[1:-1, 1:-1])
    return float(lap.var())


def sobel_magnitude(a: np.ndarray) -> np.ndarray:
    """Sobel-3 gradient magnitude with replicate padding, float64."""
    p = _replicate_pad(np.asarray(a, dtype=np.float64))
    gx = ((p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
          - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]))
    gy = ((p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
          - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]))
    return np.sqrt(gx * gx + gy * gy)


def flatness_ratio(g: GrayBuffer, patch: int = 240, var_min: float = 750.0) -> float:
    """Fraction of full ``patch``-sized patches whose Sobel-magnitude variance
    falls below ``var_min``."""
    if g.width < patch or g.height < patch:
        raise ValueError(f"image smaller than one {patch}x{patch} patch")
    specs = patch_grid(g.width, g.height, patch, drop_partial=True)
    textureless = 0
    for spec in specs:
        mag = sobel_magnitude(spec.slice_from(g.data))
        if float(mag.var()) < var_min:
            textureless += 1
    return textureless / len(specs)


def shannon_entropy(g: GrayBuffer) -> float:
    """Entropy in bits of the 256-bin luma histogram."""
    hist = np.bincount(g.data.ravel(), minlength=256).astype(np.float64)
    p = hist / hist.sum()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def cohort_percentile_gate(scores: list[tuple[str, float]],
                           keep_fraction: float) -> set[str]:
    """Keep the ceil(keep_fraction * N) highest-scoring ids.

    Ties are broken by ascending id so the gate is deterministic.
    """
    if not scores:
        raise ValueError("empty cohort")
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError("keep_fraction must be in (0, 1]")
    ids = [i for i, _ in scores]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in cohort")
    n_keep = math.ceil(keep_fraction * len(scores))
    ranked = sorted(scores, key=lambda t: (-t[1], t[0]))
    return {i for i, _ in ranked[:n_keep]}


def aesthetics_gate(cohort: list[tuple[str, float, float]],
                    keep_fraction: float) -> set[str]:
    """Union of the two per-predictor percentile gates (pass if either ranks high)."""
    gate_a = cohort_percentile_gate([(i, sl) for i, sl, _ in cohort], keep_fraction)
    gate_b = cohort_percentile_gate([(i, sa) for i, _, sa in cohort], keep_fraction)
    return gate_a | gate_b


def score_image(image_id: str, img: ImageBuffer, gray: GrayBuffer,
                cfg: Config) -> DetectorScores:
    """Run the three local detectors plus entropy on one image."""
    return DetectorScores(
        exposure_fraction=exposure_fraction(img, cfg.exposure.bright, cfg.exposure.dark),
        laplacian_variance=laplacian_variance(gray),
        flatness_ratio=flatness_ratio(gray, cfg.flatness.patch, cfg.flatness.var_min),
        shannon_entropy=shannon_entropy(gray),
    )


def purify_cohort(records: list[tuple[str, ImageBuffer]],
                  external_scores: dict[str, tuple[float, float]] | None,
                  cfg: Config | None = None,
                  precomputed: dict[str, DetectorScores] | None = None,
                  ) -> list[FilterVerdict]:
    """Apply all five detectors to a cohort and intersect the surviving subsets.

    ``external_scores`` maps id -> (S_L, S_A) from the two aesthetic
    predictors; required unless the aesthetics gate is disabled in config.
    ``precomputed`` may carry detector scores already computed elsewhere
    (e.g. by a worker pool); missing entries are scored here.
    """
    from .imgcore import to_grayscale

    cfg = cfg or Config()
    if not records:
        raise ValueError("empty cohort")

    scores: dict[str, DetectorScores] = {}
    for image_id, img in records:
        if precomputed and image_id in precomputed:
            scores[image_id] = precomputed[image_id]
        else:
            scores[image_id] = score_image(image_id, img, to_grayscale(img), cfg)

    if cfg.aesthetics.enabled:
        missing = [i for i, _ in records
                   if external_scores is None or i not in external_scores]
        if missing:
            raise ValueError(f"missing aesthetic scores for: {missing}")
        for image_id, _ in records:
            sl, sa = external_scores[image_id]
            scores[image_id].aesthetic_a = sl
            scores[image_id].aesthetic_b = sa

    entropy_pass = cohort_percentile_gate(
        [(i, scores[i].shannon_entropy) for i, _ in records], cfg.entropy.keep)
    if cfg.aesthetics.enabled:
        aes_pass = aesthetics_gate(
            [(i, scores[i].aesthetic_a, scores[i].aesthetic_b) for i, _ in records],
            cfg.aesthetics.keep)
    else:
        aes_pass = {i for i, _ in records}

    verdicts = []
    for image_id, _ in records:
        s = scores[image_id]
        reasons = []
        if s.exposure_fraction > cfg.exposure.max_fraction:
            reasons.append("exposure")
        if s.laplacian_variance < cfg.sharpness.min:
            reasons.append("sharpness")
        if s.flatness_ratio > cfg.flatness.max_fraction:
            reasons.append("flatness")
        if image_id not in entropy_pass:
            reasons.append("entropy")
        if image_id not in aes_pass:
            reasons.append("aesthetics")
        verdicts.append(FilterVerdict(image_id, s, not reasons, reasons))
    return verdicts
