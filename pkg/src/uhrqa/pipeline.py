"""Stage orchestration over an append-only JSON Lines manifest.

Each image's journey is a sequence of per-stage records; a run can be
resumed or re-executed because (id, stage) pairs are unique and stages only
ever append. Benchmark assembly lives here too.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics, purify, srqa
from .config import Config
from .imgcore import DecodeError, ImageBuffer, decode_image, to_grayscale
from .judge import JudgeError, MSFI_LOCAL_COUNT, WeightConfig, render_prompt
from .judge.scoring import ics_from_result, msfi_index

STAGES = ("collected", "purified", "tiered", "sr_checked", "final")

_STAGE_LABELS = [
    ("collected", "Image Data Collection", "Raw Data Pool"),
    ("purified", "Preliminary Data Purification", "Candidate Data Pool"),
    ("final", "Final Data Filtering", "Final Data"),
]


class ManifestError(Exception):
    pass


class DuplicateRecordError(ManifestError):
    pass


@dataclass
class ManifestRecord:
    id: str
    path: str
    stage: str
    passed: bool
    reasons: list[str] = field(default_factory=list)
    scores: dict = field(default_factory=dict)
    ts: float = 0.0

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "ManifestRecord":
        return cls(**json.loads(line))


def read_manifest(path: str) -> list[ManifestRecord]:
    """Parse a manifest; corrupt lines are reported with their line number."""
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(ManifestRecord.from_json(line))
            except (json.JSONDecodeError, TypeError, ValueError) as e:
                raise ManifestError(f"{path}:{lineno}: corrupt record: {e}") from e
    return records


class ManifestWriter:
    """Single-writer appender enforcing (id, stage) uniqueness.

    Each record is written as exactly one line in a single write call, so an
    interrupted run leaves the file parseable up to the last complete line.
    """

    def __init__(self, path: str):
        self.path = path
        self._seen: set[tuple[str, str]] = set()
        if os.path.exists(path):
            for r in read_manifest(path):
                self._seen.add((r.id, r.stage))

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._seen

    def append(self, record: ManifestRecord) -> None:
        key = (record.id, record.stage)
        if key in self._seen:
            raise DuplicateRecordError(f"duplicate record {key}")
        if record.ts == 0.0:
            record.ts = time.time()
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(record.to_json() + "\n")
            f.flush()
        self._seen.add(key)


def load_scores_sidecar(path: str) -> dict[str, tuple[float, float]]:
    """JSON Lines of {"id", "s_l", "s_a"} -> id -> (S_L, S_A)."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out[obj["id"]] = (float(obj["s_l"]), float(obj["s_a"]))
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise ManifestError(f"{path}:{lineno}: bad score line: {e}") from e
    return out


def load_captions_sidecar(path: str) -> dict[str, dict]:
    """JSON Lines of {"id", "short", "long"}."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[obj["id"]] = obj
    return out


def collect_images(manifest_path: str, image_dir: str,
                   extensions=(".png", ".jpg", ".jpeg", ".pnm", ".pgm", ".ppm"),
                   ) -> int:
    """Seed the collected stage from a directory of images."""
    writer = ManifestWriter(manifest_path)
    count = 0
    for name in sorted(os.listdir(image_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() not in extensions:
            continue
        if (stem, "collected") in writer:
            continue
        writer.append(ManifestRecord(id=stem, path=os.path.join(image_dir, name),
                                     stage="collected", passed=True))
        count += 1
    return count


def _passed_at(records: list[ManifestRecord], stage: str) -> list[ManifestRecord]:
    return [r for r in records if r.stage == stage and r.passed]


def run_purify_stage(manifest_path: str, cfg: Config | None = None,
                     scores_path: str | None = None,
                     workers: int = 1) -> dict:
    """Score the five purification detectors over every collected record.

    Unreadable images become rejects with reason "decode_error" and never
    abort the cohort. Detector scoring fans out to a thread pool; results
    are reduced in manifest order so output is independent of worker count.
    """
    cfg = cfg or Config()
    records = read_manifest(manifest_path)
    collected = [r for r in records if r.stage == "collected"]
    if not collected:
        raise ManifestError("no collected-stage records in manifest")
    writer = ManifestWriter(manifest_path)
    todo = [r for r in collected if (r.id, "purified") not in writer]

    external = load_scores_sidecar(scores_path) if scores_path else None

    def _score(rec: ManifestRecord):
        try:
            img = decode_image(rec.path)
        except DecodeError as e:
            return rec.id, None, None, str(e)
        gray = to_grayscale(img)
        return (rec.id, (img.width, img.height),
                purify.score_image(rec.id, img, gray, cfg), None)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_score, todo))
    else:
        results = [_score(r) for r in todo]

    decode_failed = {rid: err for rid, _, _, err in results if err is not None}
    dims = {rid: d for rid, d, _, _ in results if d is not None}
    precomputed = {rid: s for rid, _, s, _ in results if s is not None}
    cohort = [(r.id, None) for r in todo if r.id not in decode_failed]

    verdict_by_id = {}
    if cohort:
        if cfg.aesthetics.enabled and external is None:
            raise ManifestError("aesthetics gate enabled but no scores sidecar")
        verdicts = purify.purify_cohort(cohort, external, cfg,
                                        precomputed=precomputed)
        verdict_by_id = {v.image_id: v for v in verdicts}

    kept = rejected = 0
    for rec in todo:
        if rec.id in decode_failed:
            out = ManifestRecord(id=rec.id, path=rec.path, stage="purified",
                                 passed=False, reasons=["decode_error"],
                                 scores={"error": decode_failed[rec.id]})
        else:
            v = verdict_by_id[rec.id]
            w, h = dims[rec.id]
            s = v.scores
            out = ManifestRecord(
                id=rec.id, path=rec.path, stage="purified",
                passed=v.passed, reasons=list(v.reject_reasons),
                scores={"width": w, "height": h,
                        "exposure_fraction": s.exposure_fraction,
                        "laplacian_variance": s.laplacian_variance,
                        "flatness_ratio": s.flatness_ratio,
                        "shannon_entropy": s.shannon_entropy,
                        "aesthetic_a": s.aesthetic_a,
                        "aesthetic_b": s.aesthetic_b})
        writer.append(out)
        kept += out.passed
        rejected += not out.passed
    return {"input": len(todo), "kept": kept, "rejected": rejected}


def run_tier_stage(manifest_path: str, cfg: Config | None = None) -> dict:
    """Classify every purified survivor into the upscale tiers."""
    records = read_manifest(manifest_path)
    writer = ManifestWriter(manifest_path)
    kept = rejected = n = 0
    for rec in _passed_at(records, "purified"):
        if (rec.id, "tiered") in writer:
            continue
        n += 1
        if "width" in rec.scores:
            w, h = rec.scores["width"], rec.scores["height"]
        else:
            img = decode_image(rec.path)
            w, h = img.width, img.height
        decision = srqa.upscale_tier(w, h)
        passed = decision.tier is not srqa.UpscaleTier.REJECTED
        writer.append(ManifestRecord(
            id=rec.id, path=rec.path, stage="tiered", passed=passed,
            reasons=[] if passed else ["resolution"],
            scores={"width": w, "height": h, "tier": decision.tier.value,
                    "tier_reason": decision.reason}))
        kept += passed
        rejected += not passed
    if n == 0 and not any(r.stage == "tiered" for r in records):
        raise ManifestError("no purified survivors to tier")
    return {"input": n, "kept": kept, "rejected": rejected}


def run_srcheck_stage(manifest_path: str, cfg: Config | None = None) -> dict:
    """Seam-continuity inspection of tiered survivors.

    Images no larger than one tile stride have no seams and pass trivially.
    Consistency validation against pre-SR originals runs only when the
    caller tracks those originals (see ``srqa.consistency_check``).
    """
    cfg = cfg or Config()
    records = read_manifest(manifest_path)
    writer = ManifestWriter(manifest_path)
    kept = rejected = n = 0
    for rec in _passed_at(records, "tiered"):
        if (rec.id, "sr_checked") in writer:
            continue
        n += 1
        img = decode_image(rec.path)
        stride = cfg.srqa.seam_stride
        if img.width <= stride and img.height <= stride:
            max_ratio, passed = 0.0, True
        else:
            report = srqa.seam_ratios(img, stride)
            max_ratio = report.max_ratio
            passed = report.passed(cfg.srqa.seam_max_ratio)
        writer.append(ManifestRecord(
            id=rec.id, path=rec.path, stage="sr_checked", passed=passed,
            reasons=[] if passed else ["seam"],
            scores={"seam_max_ratio": max_ratio, "seam_stride": stride}))
        kept += passed
        rejected += not passed
    return {"input": n, "kept": kept, "rejected": rejected}


def run_final_stage(manifest_path: str, cfg: Config | None = None,
                    judge_client=None, seed: int = 0) -> dict:
    """Region-level representative sampling (and judging when a client is
    configured) over seam-checked survivors.

    Without a judge endpoint the stage records the sampled patches and
    passes; with one, an image is rejected when more than one sampled patch
    is flagged.
    """
    cfg = cfg or Config()
    records = read_manifest(manifest_path)
    writer = ManifestWriter(manifest_path)
    kept = rejected = n = 0
    k = cfg.srqa.k_texture + cfg.srqa.k_random
    for rec in _passed_at(records, "sr_checked"):
        if (rec.id, "final") in writer:
            continue
        n += 1
        img = decode_image(rec.path)
        gray = to_grayscale(img)
        patch = cfg.srqa.region_patch
        full = (gray.width // patch) * (gray.height // patch)
        sampled = []
        if full >= k:
            sampled = srqa.hybrid_sample(gray, patch, cfg.srqa.k_texture,
                                         cfg.srqa.k_random, seed)
        flagged = 0
        if judge_client is not None and sampled:
            for spec in sampled:
                patch_img = ImageBuffer(
                    np.ascontiguousarray(spec.slice_from(img.data)))
                coords = [spec.x0 / img.width, spec.y0 / img.height,
                          (spec.x0 + spec.w) / img.width,
                          (spec.y0 + spec.h) / img.height]
                result = judge_client.judge("local_fidelity", {
                    "relative_coords": coords,
                    "images": [_png_b64(patch_img), _png_b64(img)]})
                # a patch is flagged when any local sub-dimension bottoms out
                if min(result.scores.values()) <= 2:
                    flagged += 1
        passed = flagged <= 1
        writer.append(ManifestRecord(
            id=rec.id, path=rec.path, stage="final", passed=passed,
            reasons=[] if passed else ["region_artifacts"],
            scores={"region_patches_sampled": len(sampled),
                    "region_patches_flagged": flagged}))
        kept += passed
        rejected += not passed
    return {"input": n, "kept": kept, "rejected": rejected}


def dataflow_report(manifest_path: str) -> list[tuple[str, str, int]]:
    """Per-stage accounting table: (stage label, subset name, count).

    Collected counts every ingested record; purified and final count the
    survivors of those gates.
    """
    records = read_manifest(manifest_path)
    rows = []
    for stage, label, subset in _STAGE_LABELS:
        sub = [r for r in records if r.stage == stage]
        if not sub:
            continue
        count = len(sub) if stage == "collected" else sum(r.passed for r in sub)
        rows.append((label, subset, count))
    return rows


# ---------------------------------------------------------------------------
# benchmark assembly


@dataclass
class BenchRow:
    method: str
    fid: float | None = None
    fid_patch: float | None = None
    aesthetics: float | None = None
    glcm_score: float | None = None
    msfi: float | None = None
    clip_score: float | None = None
    fg_clip2_score: float | None = None
    ics: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        d = self.to_dict()
        w.writerow(d.keys())
        w.writerow("" if v is None else v for v in d.values())
        return buf.getvalue()


def _png_b64(img: ImageBuffer) -> str:
    from PIL import Image

    arr = img.data[:, :, 0] if img.channels == 1 else img.data
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _crop(img: ImageBuffer, spec) -> ImageBuffer:
    return ImageBuffer(np.ascontiguousarray(spec.slice_from(img.data)))


def _fid_between(embedder, gen, ref) -> float:
    g = metrics.gaussian_stats([embedder.embed_image(i, im) for i, im in gen])
    r = metrics.gaussian_stats([embedder.embed_image(i, im) for i, im in ref])
    return metrics.frechet_distance(g, r)


def run_bench(generated: list[tuple[str, ImageBuffer]],
              reference: list[tuple[str, ImageBuffer]],
              captions: dict[str, dict] | None = None,
              clients: dict | None = None,
              cfg: Config | None = None,
              seed: int = 0,
              method: str = "method") -> BenchRow:
    """Assemble one benchmark row over a generated set.

    ``clients`` may supply "embedder" (image/text embedding endpoint),
    "aesthetic" (scorer endpoint), and "judge" (chat-completion client).
    Metrics whose endpoint is missing or failing are left absent rather
    than failing the run; GLCM is always computed locally.
    """
    cfg = cfg or Config()
    clients = clients or {}
    captions = captions or {}
    if not generated or not reference:
        raise ValueError("generated and reference sets must be non-empty")
    generated = sorted(generated)
    reference = sorted(reference)
    row = BenchRow(method=method)
    glcm_cfg = cfg.glcm

    def _attempt(fn):
        try:
            return fn()
        except Exception:
            return None

    def _glcm():
        vals = [metrics.glcm_score(to_grayscale(im), glcm_cfg)
                for _, im in generated]
        return float(np.mean(vals))

    row.glcm_score = _attempt(_glcm)

    embedder = clients.get("embedder")
    if embedder is not None:
        row.fid = _attempt(lambda: _fid_between(embedder, generated, reference))

        def _fid_patch():
            patch = cfg.bench.fid_patch
            per = cfg.bench.fid_patches_per_image

            def embed_patches(images):
                plan = metrics.patch_fid_prepare(
                    [(im.width, im.height) for _, im in images], patch, per, seed)
                vecs = []
                for (iid, im), specs in zip(images, plan):
                    for s in specs:
                        vecs.append(embedder.embed_image(
                            f"{iid}#{s.index}", _crop(im, s)))
                return vecs

            g = metrics.gaussian_stats(embed_patches(generated))
            r = metrics.gaussian_stats(embed_patches(reference))
            return metrics.frechet_distance(g, r)

        row.fid_patch = _attempt(_fid_patch)

        def _alignment(key, long_form):
            vals = []
            for iid, im in generated:
                cap = captions.get(iid, {}).get(key)
                if cap is None:
                    continue
                u = embedder.embed_image(iid, im)
                v = embedder.embed_text(cap)
                vals.append(metrics.cosine_alignment_score(
                    u, v, cfg.bench.alignment_scale))
            if not vals:
                raise ValueError("no captions")
            return float(np.mean(vals))

        row.clip_score = _attempt(lambda: _alignment("short", False))
        row.fg_clip2_score = _attempt(lambda: _alignment("long", True))

    scorer = clients.get("aesthetic")
    if scorer is not None:
        row.aesthetics = _attempt(lambda: float(np.mean(
            [scorer.score_image(i, im) for i, im in generated])))

    judge = clients.get("judge")
    if judge is not None:
        def _msfi():
            weights = WeightConfig(alpha=cfg.judge.alpha, beta=cfg.judge.beta)
            vals = []
            for iid, im in generated:
                psize = cfg.bench.msfi_patch or \
                    srqa.fidelity_patch_size(im.width, im.height)
                gray = to_grayscale(im)
                specs = srqa.hybrid_sample(gray, psize, cfg.srqa.k_texture,
                                           cfg.srqa.k_random, seed)
                g_res = judge.judge("global_fidelity",
                                    {"images": [_png_b64(im)]})
                locals_ = []
                for s in specs[:MSFI_LOCAL_COUNT]:
                    coords = [s.x0 / im.width, s.y0 / im.height,
                              (s.x0 + s.w) / im.width, (s.y0 + s.h) / im.height]
                    locals_.append(judge.judge("local_fidelity", {
                        "relative_coords": coords,
                        "images": [_png_b64(_crop(im, s)), _png_b64(im)]}))
                vals.append(msfi_index(g_res, locals_, weights))
            return float(np.mean(vals))

        row.msfi = _attempt(_msfi)

        def _ics():
            vals = []
            for iid, im in generated:
                cap = captions.get(iid, {}).get("long")
                if cap is None:
                    continue
                result = judge.judge("ics", {"long_caption": cap,
                                             "images": [_png_b64(im)]})
                vals.append(ics_from_result(result, cfg.judge.alpha,
                                            cfg.judge.beta))
            if not vals:
                raise ValueError("no long captions")
            return float(np.mean(vals))

        row.ics = _attempt(_ics)

    if all(v is None for k, v in row.to_dict().items() if k != "method"):
        raise ValueError("no metric could be computed (all endpoints down?)")
    return row
