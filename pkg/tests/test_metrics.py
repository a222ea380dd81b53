import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gray, noise_gray, noise_rgb, rgb
from uhrqa.config import GlcmConfig
from uhrqa.metrics import (
    BBox,
    cosine_alignment_score,
    crop_with_padding,
    frechet_distance,
    full_reference_scores,
    gaussian_stats,
    glcm_offsets,
    glcm_score,
    iou,
    nms,
    patch_fid_prepare,
    raps,
)


def glcm_oracle(a: np.ndarray, levels: int, patch: int,
                offsets: list[tuple[int, int]]) -> float:
    """Brute-force pair enumeration over full patches (O(N^2) per matrix)."""
    q = (a.astype(np.uint32) * levels) >> 8
    h, w = q.shape
    patch_scores = []
    for py in range(0, h - patch + 1, patch):
        for px in range(0, w - patch + 1, patch):
            p = q[py:py + patch, px:px + patch]
            ent = []
            for dr, dc in offsets:
                counts = {}
                total = 0
                for r in range(patch):
                    for c in range(patch):
                        r2, c2 = r + dr, c + dc
                        if 0 <= r2 < patch and 0 <= c2 < patch:
                            key = (int(p[r, c]), int(p[r2, c2]))
                            counts[key] = counts.get(key, 0) + 1
                            total += 1
                if total == 0:
                    ent.append(0.0)
                    continue
                ent.append(-sum((n / total) * math.log2(n / total)
                                for n in counts.values()))
            patch_scores.append(sum(ent) / len(ent))
    return sum(patch_scores) / len(patch_scores)


class TestGlcm:
    def test_offsets_canonical(self):
        cfg = GlcmConfig()
        offs = glcm_offsets(cfg)
        # distance 1, four angles
        assert offs[:4] == [(0, 1), (-1, 1), (-1, 0), (-1, -1)]
        assert len(offs) == 16

    def test_constant_is_zero(self):
        assert glcm_score(gray(np.full((64, 64), 130))) == 0.0

    def test_checkerboard_oracle(self):
        a = np.indices((64, 64)).sum(axis=0) % 2 * 255
        cfg = GlcmConfig()
        got = glcm_score(gray(a), cfg)
        want = glcm_oracle(a.astype(np.uint8), 64, 64, glcm_offsets(cfg))
        assert got == pytest.approx(want, abs=1e-9)

    def test_binary_noise_oracle(self):
        rng = np.random.default_rng(17)
        a = (rng.integers(0, 2, size=(64, 64)) * 255).astype(np.uint8)
        cfg = GlcmConfig()
        assert glcm_score(gray(a), cfg) == pytest.approx(
            glcm_oracle(a, 64, 64, glcm_offsets(cfg)), abs=1e-9)

    def test_multilevel_oracle_multipatch(self):
        rng = np.random.default_rng(23)
        a = (rng.integers(0, 8, size=(64, 128)) * 32).astype(np.uint8)
        cfg = GlcmConfig()
        assert glcm_score(gray(a), cfg) == pytest.approx(
            glcm_oracle(a, 64, 64, glcm_offsets(cfg)), abs=1e-9)

    def test_entropy_bounded(self):
        g = noise_gray(128, 128, seed=5)
        assert 0.0 < glcm_score(g) <= 2 * math.log2(64)

    def test_too_small(self):
        with pytest.raises(ValueError):
            glcm_score(gray(np.zeros((32, 32))))


class TestRaps:
    def test_constant_zero(self):
        spec = raps(gray(np.full((64, 64), 90)))
        assert spec.shape == (32,)
        assert np.allclose(spec, 0.0)

    def test_sinusoid_peak(self):
        x = np.arange(256)
        a = 128 + 100 * np.sin(2 * np.pi * x / 16.0)
        img = np.tile(np.round(a).astype(np.uint8), (256, 1))
        spec = raps(gray(img))
        # period 16 over 256 samples puts the energy at radius 16
        assert int(np.argmax(spec)) == 16

    def test_transpose_invariant(self):
        a = noise_gray(96, 96, seed=3).data
        assert np.allclose(raps(gray(a)), raps(gray(a.T)))

    def test_white_noise_flatness(self):
        spec = raps(noise_gray(256, 256, seed=19))
        body = spec[1:]
        assert float(body.std() / body.mean()) < 0.25

    def test_too_small(self):
        with pytest.raises(ValueError):
            raps(gray(np.zeros((4, 4))))


class TestGaussianStats:
    def test_mean_and_variance(self):
        s = gaussian_stats([[0.0], [2.0]])
        assert s.mean[0] == 1.0
        assert s.covariance[0, 0] == 2.0  # unbiased: ((1)^2+(1)^2)/(2-1)
        assert s.n == 2

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            gaussian_stats([[1.0, 2.0]])

    def test_needs_matrix(self):
        with pytest.raises(ValueError):
            gaussian_stats([1.0, 2.0])


def _stats(mean, cov):
    from uhrqa.metrics import GaussianStats
    return GaussianStats(mean=np.asarray(mean, dtype=np.float64),
                         covariance=np.atleast_2d(np.asarray(cov, float)), n=2)


class TestFrechet:
    def test_1d_closed_form(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            m1, m2 = rng.normal(size=2)
            s1, s2 = rng.uniform(0.1, 3.0, size=2)
            got = frechet_distance(_stats([m1], [[s1 ** 2]]),
                                   _stats([m2], [[s2 ** 2]]))
            want = (m1 - m2) ** 2 + (s1 - s2) ** 2
            assert got == pytest.approx(want, abs=1e-8)

    def test_diagonal_decomposes(self):
        rng = np.random.default_rng(37)
        for _ in range(100):
            m1, m2 = rng.normal(size=(2, 4))
            v1, v2 = rng.uniform(0.1, 2.0, size=(2, 4))
            got = frechet_distance(_stats(m1, np.diag(v1)),
                                   _stats(m2, np.diag(v2)))
            want = sum((m1[i] - m2[i]) ** 2
                       + (math.sqrt(v1[i]) - math.sqrt(v2[i])) ** 2
                       for i in range(4))
            assert got == pytest.approx(want, abs=1e-8)

    def test_zero_iff_equal(self):
        a = _stats([1.0, 2.0], np.eye(2))
        assert frechet_distance(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry_and_nonnegative(self):
        rng = np.random.default_rng(41)
        x = rng.normal(size=(20, 3))
        y = rng.normal(size=(20, 3)) + 1.0
        a, b = gaussian_stats(x), gaussian_stats(y)
        assert frechet_distance(a, b) == pytest.approx(frechet_distance(b, a))
        assert frechet_distance(a, b) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            frechet_distance(_stats([0.0], [[1.0]]),
                             _stats([0.0, 0.0], np.eye(2)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            frechet_distance(_stats([np.nan], [[1.0]]), _stats([0.0], [[1.0]]))


class TestPatchFidPrepare:
    def test_plan_shape_and_bounds(self):
        plan = patch_fid_prepare([(600, 700), (520, 512)], 512, 8, seed=3)
        assert [len(p) for p in plan] == [8, 8]
        for specs, (w, h) in zip(plan, [(600, 700), (520, 512)]):
            for s in specs:
                assert 0 <= s.x0 <= w - 512 and 0 <= s.y0 <= h - 512
                assert s.w == s.h == 512

    def test_deterministic(self):
        p1 = patch_fid_prepare([(600, 700)], 512, 8, seed=3)
        p2 = patch_fid_prepare([(600, 700)], 512, 8, seed=3)
        assert [(s.x0, s.y0) for s in p1[0]] == [(s.x0, s.y0) for s in p2[0]]

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            patch_fid_prepare([(100, 100)], 512, 1)


class TestCosineAlignment:
    def test_parallel(self):
        assert cosine_alignment_score([1, 0], [2, 0]) == pytest.approx(100.0)

    def test_orthogonal_and_negative_clamped(self):
        assert cosine_alignment_score([1, 0], [0, 1]) == 0.0
        assert cosine_alignment_score([1, 0], [-1, 0]) == 0.0

    def test_scale(self):
        assert cosine_alignment_score([1, 1], [1, 1], scale=1.0) \
            == pytest.approx(1.0)

    def test_zero_norm(self):
        with pytest.raises(ValueError):
            cosine_alignment_score([0, 0], [1, 0])


def ssim_oracle(x: np.ndarray, y: np.ndarray) -> float:
    """Scalar-loop SSIM over every full 11x11 window, Gaussian sigma=1.5."""
    r = np.arange(11) - 5.0
    k1 = np.exp(-(r * r) / (2 * 1.5 * 1.5))
    k1 /= k1.sum()
    win = np.outer(k1, k1)
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    h, w = x.shape
    vals = []
    for i in range(h - 10):
        for j in range(w - 10):
            px = x[i:i + 11, j:j + 11]
            py = y[i:i + 11, j:j + 11]
            mx = float((win * px).sum())
            my = float((win * py).sum())
            sxx = float((win * px * px).sum()) - mx * mx
            syy = float((win * py * py).sum()) - my * my
            sxy = float((win * px * py).sum()) - mx * my
            vals.append(((2 * mx * my + c1) * (2 * sxy + c2))
                        / ((mx * mx + my * my + c1) * (sxx + syy + c2)))
    return float(np.mean(vals))


class TestFullReference:
    def test_psnr_unit_offset(self):
        a = noise_rgb(16, 16, seed=1)
        b = rgb(np.clip(a.data.astype(np.int64) + 1, 0, 255))
        # keep to the exact-offset region: regenerate without saturation
        a = rgb(np.full((16, 16, 3), 100))
        b = rgb(np.full((16, 16, 3), 101))
        psnr, _ = full_reference_scores(a, b)
        assert psnr == pytest.approx(10 * math.log10(255 ** 2), abs=1e-9)

    def test_psnr_identical_capped(self):
        a = noise_rgb(16, 16, seed=2)
        psnr, ssim = full_reference_scores(a, a)
        assert psnr == 100.0
        assert ssim == pytest.approx(1.0)

    def test_ssim_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.integers(0, 256, size=(16, 16)).astype(np.float64)
        y = rng.integers(0, 256, size=(16, 16)).astype(np.float64)
        a = rgb(x.astype(np.uint8))
        b = rgb(y.astype(np.uint8))
        _, got = full_reference_scores(a, b)
        assert got == pytest.approx(ssim_oracle(x, y), abs=1e-9)

    def test_psnr_decreases_with_noise(self):
        base = noise_rgb(32, 32, seed=11)
        rng = np.random.default_rng(12)
        prev = 100.0
        for amp in (2, 8, 32):
            noisy = rgb(np.clip(base.data.astype(np.int64)
                                + rng.integers(-amp, amp + 1, base.data.shape),
                                0, 255))
            psnr, _ = full_reference_scores(base, noisy)
            assert psnr < prev
            prev = psnr

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            full_reference_scores(noise_rgb(16, 16), noise_rgb(16, 17))

    def test_too_small_for_window(self):
        with pytest.raises(ValueError):
            full_reference_scores(noise_rgb(8, 8), noise_rgb(8, 8))


class TestBoxes:
    def test_iou_known(self):
        a = BBox(0, 0, 10, 10)
        b = BBox(5, 5, 15, 15)
        assert iou(a, b) == pytest.approx(25.0 / 175.0)
        assert iou(a, a) == 1.0
        assert iou(a, BBox(20, 20, 30, 30)) == 0.0

    def test_degenerate_box(self):
        with pytest.raises(ValueError):
            BBox(5, 0, 5, 10)

    def test_nms_basic(self):
        boxes = [BBox(0, 0, 10, 10, score=0.9),
                 BBox(1, 1, 11, 11, score=0.8),   # overlaps first heavily
                 BBox(20, 20, 30, 30, score=0.7)]
        kept = nms(boxes, 0.5)
        assert [b.score for b in kept] == [0.9, 0.7]

    def test_nms_tie_by_input_order(self):
        boxes = [BBox(0, 0, 10, 10, score=0.5),
                 BBox(0, 0, 10, 10, score=0.5)]
        kept = nms(boxes, 0.5)
        assert kept == [boxes[0]]

    def test_nms_quadratic_oracle(self):
        rng = np.random.default_rng(55)
        boxes = []
        for _ in range(200):
            x0, y0 = rng.uniform(0, 80, size=2)
            boxes.append(BBox(x0, y0, x0 + rng.uniform(5, 30),
                              y0 + rng.uniform(5, 30),
                              score=float(rng.uniform())))
        thr = 0.4
        # reference: straightforward greedy loop
        order = sorted(range(len(boxes)), key=lambda i: (-boxes[i].score, i))
        keep = []
        for i in order:
            if all(iou(boxes[i], boxes[j]) <= thr for j in keep):
                keep.append(i)
        assert nms(boxes, thr) == [boxes[i] for i in keep]

    def test_nms_threshold_validation(self):
        with pytest.raises(ValueError):
            nms([], 1.5)


class TestCropWithPadding:
    def test_worked_example(self):
        spec = crop_with_padding(BBox(100, 100, 200, 200), 4000, 4000, 0.05)
        assert (spec.x0, spec.y0, spec.x0 + spec.w, spec.y0 + spec.h) \
            == (95, 95, 205, 205)

    def test_clamped_at_border(self):
        spec = crop_with_padding(BBox(0, 0, 100, 100), 4000, 4000, 0.05)
        assert (spec.x0, spec.y0) == (0, 0)
        assert (spec.w, spec.h) == (105, 105)

    def test_rounds_outward(self):
        spec = crop_with_padding(BBox(10, 10, 20, 20), 100, 100, 0.033)
        assert spec.x0 == 9 and spec.x0 + spec.w == 21

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            crop_with_padding(BBox(100, 100, 200, 200), 150, 300)

    def test_negative_pad(self):
        with pytest.raises(ValueError):
            crop_with_padding(BBox(0, 0, 10, 10), 100, 100, -0.1)
