"""Show the seam detector separating stitch artifacts from real content.

Tile-based super-resolution can leave brightness discontinuities at tile
boundaries. The detector compares the cross-seam first difference against
the gradient level in 8-px flanking bands: a stitched step spikes the
ratio, while an equally steep natural gradient does not.

Run:  python3 demos/seam_inspection.py
"""

import numpy as np

from uhrqa.imgcore import ImageBuffer
from uhrqa.srqa import seam_ratios


def show(name, arr):
    report = seam_ratios(ImageBuffer(arr), stride=384)
    verdict = "pass" if report.passed(2.5) else "FAIL"
    print(f"{name:28s} max ratio {report.max_ratio:10.3f}  -> {verdict}")
    for orientation, pos, ratio in report.ratios:
        print(f"    {orientation:10s} seam at {pos:4d}: {ratio:10.3f}")


def main():
    h, w = 128, 1200

    flat = np.full((h, w, 3), 120, dtype=np.uint8)
    show("constant frame", flat)

    stitched = flat.copy()
    stitched[:, 768:] += 40  # tile boundary artifact at a stride multiple
    show("stitched +40 step at 768", stitched)

    # a natural gradient with the same total excursion stays smooth
    row = np.round(np.arange(w) * 0.6) % 256
    ramp = np.broadcast_to(row.astype(np.uint8)[None, :, None],
                           (h, w, 3)).copy()
    show("smooth ramp", ramp)

    rng = np.random.default_rng(5)
    noise = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
    show("white noise", noise)


if __name__ == "__main__":
    main()
