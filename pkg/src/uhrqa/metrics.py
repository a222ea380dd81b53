"""Deterministic benchmark mathematics.

Texture entropy over co-occurrence matrices, radially averaged power
spectra, Gaussian-fit Fréchet distances, cosine alignment, full-reference
PSNR/SSIM, IoU-based NMS, and padded instance crops. Everything here is a
pure function; embeddings and neural scores come from external endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import GlcmConfig
from .imgcore import GrayBuffer, ImageBuffer, PatchSpec, patch_grid, quantize_levels
from .rng import XorShift64Star

_EIG_CLAMP = 1e-10


@dataclass
class GaussianStats:
    mean: np.ndarray
    covariance: np.ndarray
    n: int


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float = 0.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("degenerate box")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


def glcm_offsets(cfg: GlcmConfig) -> list[tuple[int, int]]:
    """(row, col) displacement for every (distance, angle) pair.

    Angle 0 points along +x (columns); rows grow downward, so the row
    component is negated. The four canonical angles at distance 1 give
    (0,1), (-1,1), (-1,0), (-1,-1).
    """
    offsets = []
    for d in cfg.distances:
        for theta in cfg.angles:
            dr = -int(round(d * math.sin(theta)))
            dc = int(round(d * math.cos(theta)))
            offsets.append((dr, dc))
    return offsets


def _cooccurrence_entropy(q: np.ndarray, levels: int, dr: int, dc: int) -> float:
    """Shannon entropy (bits) of the normalized co-occurrence matrix of
    ordered pixel pairs at offset (dr, dc) within one patch."""
    h, w = q.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    if r0 >= r1 or c0 >= c1:
        return 0.0
    src = q[r0:r1, c0:c1].astype(np.int64)
    dst = q[r0 + dr:r1 + dr, c0 + dc:c1 + dc].astype(np.int64)
    counts = np.bincount((src * levels + dst).ravel(), minlength=levels * levels)
    p = counts / counts.sum()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def glcm_score(g: GrayBuffer, cfg: GlcmConfig | None = None) -> float:
    """Mean per-patch co-occurrence entropy.

    The image is quantized to ``cfg.levels`` gray levels and split into full
    ``cfg.patch`` patches; each patch's entropy is averaged over all
    (distance, angle) offsets, and the score is the mean over patches.
    """
    cfg = cfg or GlcmConfig()
    if g.width < cfg.patch or g.height < cfg.patch:
        raise ValueError(f"image smaller than one {cfg.patch}x{cfg.patch} patch")
    q = quantize_levels(g, cfg.levels).data
    offsets = glcm_offsets(cfg)
    specs = patch_grid(g.width, g.height, cfg.patch, drop_partial=True)
    total = 0.0
    for spec in specs:
        patch = spec.slice_from(q)
        h_patch = sum(_cooccurrence_entropy(patch, cfg.levels, dr, dc)
                      for dr, dc in offsets) / len(offsets)
        total += h_patch
    return total / len(specs)


def raps(g: GrayBuffer) -> np.ndarray:
    """Radially averaged power spectrum of the mean-subtracted luma.

    Power is binned by integer radius around the centered DC component; the
    output has length floor(min(W, H) / 2), bin r holding the mean power at
    round(sqrt(u^2 + v^2)) == r.
    """
    if g.width < 8 or g.height < 8:
        raise ValueError("image must be at least 8x8")
    a = g.data.astype(np.float64)
    a -= a.mean()
    power = np.abs(np.fft.fftshift(np.fft.fft2(a))) ** 2
    h, w = power.shape
    cy, cx = h // 2, w // 2
    v, u = np.indices((h, w))
    radius = np.rint(np.hypot(u - cx, v - cy)).astype(np.int64)
    n_bins = min(w, h) // 2
    keep = radius < n_bins
    sums = np.bincount(radius[keep], weights=power[keep], minlength=n_bins)
    counts = np.bincount(radius[keep], minlength=n_bins)
    return sums / counts


def gaussian_stats(embeddings) -> GaussianStats:
    """Sample mean and unbiased covariance of a set of embedding vectors."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("embeddings must form an (n, d) matrix")
    if x.shape[0] < 2:
        raise ValueError("need at least two samples")
    mean = x.mean(axis=0)
    cov = np.cov(x, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    return GaussianStats(mean=mean, covariance=cov, n=x.shape[0])


def _sym_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix; tiny negative eigenvalues from
    roundoff are clamped to zero."""
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    vals = np.where(vals < _EIG_CLAMP, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Frechet distance between two Gaussian fits:
    ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2)."""
    if a.mean.shape != b.mean.shape:
        raise ValueError("dimension mismatch")
    if not (np.all(np.isfinite(a.mean)) and np.all(np.isfinite(b.mean))
            and np.all(np.isfinite(a.covariance)) and np.all(np.isfinite(b.covariance))):
        raise ValueError("non-finite inputs")
    diff = a.mean - b.mean
    sqrt_a = _sym_sqrt(a.covariance)
    inner = _sym_sqrt(sqrt_a @ b.covariance @ sqrt_a)
    d = float(diff @ diff + np.trace(a.covariance) + np.trace(b.covariance)
              - 2.0 * np.trace(inner))
    return max(d, 0.0)


def patch_fid_prepare(images: list[tuple[int, int]], patch: int,
                      per_image: int, seed: int = 0) -> list[list[PatchSpec]]:
    """Seeded uniform patch plan for the patch-level Fréchet metric.

    ``images`` is a list of (width, height); the plan lists ``per_image``
    in-bounds specs per image (overlap allowed). Embeddings for the planned
    patches are fetched externally, then reduced with ``gaussian_stats`` and
    ``frechet_distance``.
    """
    rng = XorShift64Star(seed)
    plan = []
    for w, h in images:
        if per_image > 0 and (w < patch or h < patch):
            raise ValueError(f"image {w}x{h} smaller than patch {patch}")
        specs = []
        for i in range(per_image):
            x0 = rng.below(w - patch + 1)
            y0 = rng.below(h - patch + 1)
            specs.append(PatchSpec(x0, y0, patch, patch, i))
        plan.append(specs)
    return plan


def cosine_alignment_score(u, v, scale: float = 100.0) -> float:
    """scale * max(cos(u, v), 0); raises on zero-norm inputs."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vector shape mismatch")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-norm vector")
    return scale * max(float(u @ v / (nu * nv)), 0.0)


def _gaussian_kernel_1d(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(a: np.ndarray, k1: np.ndarray) -> np.ndarray:
    """Separable Gaussian correlation, valid region only. The kernel is
    symmetric so correlation and convolution coincide."""
    tmp = np.apply_along_axis(lambda m: np.convolve(m, k1, mode="valid"), 1, a)
    return np.apply_along_axis(lambda m: np.convolve(m, k1, mode="valid"), 0, tmp)


def _ssim_channel(x: np.ndarray, y: np.ndarray) -> float:
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    k1 = _gaussian_kernel_1d()
    mu_x = _filter_valid(x, k1)
    mu_y = _filter_valid(y, k1)
    sxx = _filter_valid(x * x, k1) - mu_x * mu_x
    syy = _filter_valid(y * y, k1) - mu_y * mu_y
    sxy = _filter_valid(x * y, k1) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def full_reference_scores(a: ImageBuffer, b: ImageBuffer) -> tuple[float, float]:
    """(PSNR in dB capped at 100, SSIM averaged over channels).

    SSIM uses the canonical 11x11 Gaussian window (sigma 1.5), K1=0.01,
    K2=0.03, L=255, evaluated on the valid interior.
    """
    if a.data.shape != b.data.shape:
        raise ValueError("shape mismatch")
    if a.width < 11 or a.height < 11:
        raise ValueError("images must be at least 11x11 for SSIM")
    xa = a.data.astype(np.float64)
    xb = b.data.astype(np.float64)
    mse = float(np.mean((xa - xb) ** 2))
    psnr = 100.0 if mse == 0.0 else min(10.0 * math.log10(255.0 ** 2 / mse), 100.0)
    ssim = float(np.mean([_ssim_channel(xa[:, :, c], xb[:, :, c])
                          for c in range(a.channels)]))
    return psnr, ssim


def iou(a: BBox, b: BBox) -> float:
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def nms(boxes: list[BBox], iou_threshold: float) -> list[BBox]:
    """Greedy NMS by descending score (input order breaks ties); a box is
    suppressed when its IoU with any kept box exceeds the threshold."""
    if not (0.0 <= iou_threshold <= 1.0):
        raise ValueError("iou_threshold must be in [0, 1]")
    order = sorted(range(len(boxes)), key=lambda i: (-boxes[i].score, i))
    kept: list[BBox] = []
    for i in order:
        if all(iou(boxes[i], k) <= iou_threshold for k in kept):
            kept.append(boxes[i])
    return kept


def crop_with_padding(box: BBox, img_w: int, img_h: int,
                      pad: float = 0.05) -> PatchSpec:
    """Expand each side by ``pad`` of the box's own extent on that axis,
    clamp to image bounds, and round outward to integer pixels."""
    if pad < 0:
        raise ValueError("pad must be >= 0")
    if not (0 <= box.x_min and box.x_max <= img_w
            and 0 <= box.y_min and box.y_max <= img_h):
        raise ValueError("box out of image bounds")
    dx = pad * (box.x_max - box.x_min)
    dy = pad * (box.y_max - box.y_min)
    x0 = max(0, math.floor(box.x_min - dx))
    y0 = max(0, math.floor(box.y_min - dy))
    x1 = min(img_w, math.ceil(box.x_max + dx))
    y1 = min(img_h, math.ceil(box.y_max + dy))
    return PatchSpec(x0, y0, x1 - x0, y1 - y0, 0)
