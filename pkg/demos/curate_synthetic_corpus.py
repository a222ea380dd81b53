"""Walk a synthetic corpus through the full curation pipeline.

Builds a small throwaway image set (textured keepers, saturated frames,
flat frames), then runs collection, purification, tier classification,
seam inspection, and final region sampling, printing the dataflow table
at the end. Everything happens in a temp directory; no network needed.

Run:  python3 demos/curate_synthetic_corpus.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from uhrqa.imgcore import ImageBuffer, write_pnm
from uhrqa.pipeline import (
    collect_images,
    dataflow_report,
    read_manifest,
    run_final_stage,
    run_purify_stage,
    run_srcheck_stage,
    run_tier_stage,
)


def build_corpus(img_dir: Path, scores_path: Path):
    rng = np.random.default_rng(7)
    scores = []

    # three 12MP textured images: these survive every stage (X4 tier)
    for i in range(3):
        a = rng.integers(0, 250, size=(3000, 4000, 3), dtype=np.int64)
        write_pnm(ImageBuffer(a.astype(np.uint8)), img_dir / f"keeper{i}.ppm")
        scores.append({"id": f"keeper{i}", "s_l": 9.0, "s_a": 9.0})

    # small textured images: pass purification, fail the resolution screen
    for i in range(4):
        a = rng.integers(0, 250, size=(480, 480, 3), dtype=np.int64)
        write_pnm(ImageBuffer(a.astype(np.uint8)), img_dir / f"small{i}.ppm")
        scores.append({"id": f"small{i}", "s_l": 8.0, "s_a": 8.0})

    # engineered rejects: blown-out exposure and textureless flats
    for i in range(3):
        v = 255 if i % 2 == 0 else 128
        a = np.full((480, 480, 3), v, dtype=np.uint8)
        write_pnm(ImageBuffer(a), img_dir / f"reject{i}.ppm")
        scores.append({"id": f"reject{i}", "s_l": 1.0, "s_a": 1.0})

    scores_path.write_text("".join(json.dumps(s) + "\n" for s in scores))


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        img_dir = tmp / "imgs"
        img_dir.mkdir()
        scores_path = tmp / "scores.jsonl"
        manifest = str(tmp / "manifest.jsonl")

        print("building synthetic corpus...")
        build_corpus(img_dir, scores_path)

        n = collect_images(manifest, str(img_dir))
        print(f"collected {n} images")

        for name, stage in [
                ("purify", lambda: run_purify_stage(
                    manifest, scores_path=str(scores_path))),
                ("tier", lambda: run_tier_stage(manifest)),
                ("seam check", lambda: run_srcheck_stage(manifest)),
                ("final", lambda: run_final_stage(manifest))]:
            s = stage()
            print(f"{name:>10s}: {s['kept']}/{s['input']} kept")

        print("\nreject reasons:")
        for r in read_manifest(manifest):
            if r.reasons:
                print(f"  {r.id:10s} [{r.stage}] {', '.join(r.reasons)}")

        print("\ndataflow:")
        for stage, subset, count in dataflow_report(manifest):
            print(f"  {stage:35s} {subset:20s} {count}")


if __name__ == "__main__":
    main()
