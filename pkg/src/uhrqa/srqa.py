"""Post-super-resolution quality assurance.

Tiered upscale classification, tile-seam continuity inspection, downsampled
consistency validation, and the hybrid (texture + random) representative
patch sampler.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .imgcore import GrayBuffer, ImageBuffer, PatchSpec, patch_grid, resample
from .purify import sobel_magnitude
from .rng import XorShift64Star

SEAM_EPS = 1e-3
_BAND = 8  # flanking band width, pixels per side


class UpscaleTier(enum.Enum):
    NATIVE = "Native"
    X2 = "X2"
    X4 = "X4"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class TierDecision:
    tier: UpscaleTier
    reason: str


@dataclass
class SeamReport:
    stride: int
    ratios: list[tuple[str, int, float]]  # (orientation, position, ratio)
    max_ratio: float

    def passed(self, threshold: float = 2.5) -> bool:
        return self.max_ratio <= threshold


@dataclass
class ConsistencyReport:
    psnr: float
    ssim: float
    perceptual: float | None
    passed: bool


def upscale_tier(width: int, height: int) -> TierDecision:
    """Classify an input for the tiered 100MP production rules.

    >=100MP is archived natively; >25MP with min dimension >=3000 takes 2x SR;
    10-25MP with min dimension >=1500 takes 4x SR; everything else is rejected.
    """
    if width < 1 or height < 1:
        raise ValueError("dimensions must be positive")
    total = width * height
    short = min(width, height)
    if total >= 100_000_000:
        return TierDecision(UpscaleTier.NATIVE, "native 100MP, archived directly")
    if total > 25_000_000 and short >= 3000:
        return TierDecision(UpscaleTier.X2, "over 25MP with min dimension >= 3000")
    if 10_000_000 <= total <= 25_000_000 and short >= 1500:
        return TierDecision(UpscaleTier.X4, "10-25MP with min dimension >= 1500")
    return TierDecision(UpscaleTier.REJECTED,
                        f"{total / 1e6:.1f}MP / min dim {short} fails screening")


def _axis_seam_ratios(plane: np.ndarray, stride: int) -> list[tuple[int, float]]:
    """Seam ratios along axis 1 (vertical seams at column multiples of stride).

    For the seam between columns x-1 and x: G_seam is the mean |difference|
    across the seam pair; G_base the mean |adjacent difference| inside the
    8-px bands flanking the seam, excluding the seam pair itself.
    """
    h, w = plane.shape[:2]
    a = plane.astype(np.float64)
    out = []
    for x in range(stride, w, stride):
        g_seam = float(np.mean(np.abs(a[:, x] - a[:, x - 1])))
        base_diffs = []
        lo = max(0, x - 1 - _BAND)
        if x - 1 - lo >= 2:  # need >= 2 columns for a within-band difference
            band = a[:, lo:x - 1]
            base_diffs.append(np.abs(np.diff(band, axis=1)))
        hi = min(w, x + 1 + _BAND)
        if hi - (x + 1) >= 2:
            band = a[:, x + 1:hi]
            base_diffs.append(np.abs(np.diff(band, axis=1)))
        g_base = float(np.mean(np.concatenate(
            [d.ravel() for d in base_diffs]))) if base_diffs else 0.0
        out.append((x, (g_seam + SEAM_EPS) / (g_base + SEAM_EPS)))
    return out


def seam_ratios(img: ImageBuffer, stride: int = 384) -> SeamReport:
    """Gradient ratios across every horizontal and vertical tile seam.

    The ratio normalizes the cross-seam first difference by the local
    gradient level in the flanking bands, so it is invariant to global
    brightness and spikes only on stitching discontinuities.
    """
    if stride < 16:
        raise ValueError("stride must be >= 16")
    if img.width <= stride and img.height <= stride:
        raise ValueError("image smaller than one tile stride in both axes")
    # channel-pooled plane: seams are luma/color discontinuities alike
    plane = img.data.astype(np.float64).mean(axis=2)
    ratios: list[tuple[str, int, float]] = []
    if img.width > stride:
        ratios += [("vertical", pos, r)
                   for pos, r in _axis_seam_ratios(plane, stride)]
    if img.height > stride:
        ratios += [("horizontal", pos, r)
                   for pos, r in _axis_seam_ratios(plane.T, stride)]
    max_ratio = max((r for _, _, r in ratios), default=0.0)
    return SeamReport(stride=stride, ratios=ratios, max_ratio=max_ratio)


def consistency_check(sr: ImageBuffer, original: ImageBuffer,
                      psnr_min: float | None = 25.0,
                      ssim_min: float | None = 0.80,
                      perceptual_max: float | None = 0.30,
                      perceptual_fn=None) -> ConsistencyReport:
    """Downsample an SR output back to its source resolution and compare.

    PSNR/SSIM are computed locally; the perceptual distance comes from
    ``perceptual_fn(sr_down, original)`` when provided (an external embedder
    or LPIPS-class scorer), else that leg is skipped. A ``None`` threshold
    disables the corresponding check.
    """
    from .metrics import full_reference_scores

    fx = sr.width / original.width
    fy = sr.height / original.height
    if (fx, fy) not in ((2.0, 2.0), (4.0, 4.0)):
        raise ValueError(
            f"SR size {sr.width}x{sr.height} is not a 2x/4x multiple of "
            f"{original.width}x{original.height}")
    down = resample(sr, original.width, original.height)
    psnr, ssim = full_reference_scores(down, original)
    perceptual = perceptual_fn(down, original) if perceptual_fn else None
    passed = True
    if psnr_min is not None and psnr < psnr_min:
        passed = False
    if ssim_min is not None and ssim < ssim_min:
        passed = False
    if perceptual_max is not None and perceptual is not None \
            and perceptual > perceptual_max:
        passed = False
    return ConsistencyReport(psnr=psnr, ssim=ssim, perceptual=perceptual,
                             passed=passed)


def patch_sobel_variance(g: GrayBuffer, spec: PatchSpec) -> float:
    return float(sobel_magnitude(spec.slice_from(g.data)).var())


def hybrid_sample(g: GrayBuffer, patch: int, k_texture: int = 6,
                  k_random: int = 4, seed: int = 0) -> list[PatchSpec]:
    """Select k_texture patches with the highest Sobel-magnitude variance plus
    k_random seeded draws from the remainder (without replacement).

    Texture ties break by ascending patch index; output lists texture picks
    first, then random picks in draw order. Deterministic for a fixed seed.
    """
    specs = patch_grid(g.width, g.height, patch, drop_partial=True)
    k = k_texture + k_random
    if len(specs) < k:
        raise ValueError(f"need {k} full patches, image has {len(specs)}")
    variances = [patch_sobel_variance(g, s) for s in specs]
    order = sorted(range(len(specs)), key=lambda i: (-variances[i], i))
    texture_idx = order[:k_texture]
    remainder = [i for i in range(len(specs)) if i not in set(texture_idx)]
    random_idx = XorShift64Star(seed).sample(remainder, k_random)
    return [specs[i] for i in texture_idx] + [specs[i] for i in random_idx]


def fidelity_patch_size(width: int, height: int) -> int:
    """Local-patch size for fidelity judging: 512 below 8K, 1024 otherwise."""
    if width < 1 or height < 1:
        raise ValueError("dimensions must be positive")
    return 512 if max(width, height) < 8192 else 1024
