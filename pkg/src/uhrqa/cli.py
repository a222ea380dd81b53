"""Command-line front door: one subcommand per pipeline stage and metric.

Exit codes: 0 success, 1 validation/usage error, 2 I/O or endpoint failure.
Diagnostics go to stderr; data to stdout or files.
"""

from __future__ import annotations

import argparse
import json
import sys

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_cfg(args):
    from .config import load_config

    return load_config(getattr(args, "config", None))


def _decode(path):
    from .imgcore import decode_image

    return decode_image(path)


def _emit(args, payload, human: str):
    if getattr(args, "json", False):
        print(json.dumps(payload))
    else:
        print(human)


def cmd_purify(args) -> int:
    from . import pipeline

    cfg = _load_cfg(args)
    if args.collect:
        n = pipeline.collect_images(args.manifest, args.collect)
        print(f"collected {n} images", file=sys.stderr)
    summary = pipeline.run_purify_stage(args.manifest, cfg,
                                        scores_path=args.scores,
                                        workers=args.workers)
    _emit(args, summary,
          f"purified: {summary['kept']}/{summary['input']} kept")
    return EXIT_OK


def cmd_tier(args) -> int:
    from . import pipeline
    from .srqa import upscale_tier

    if args.w is not None or args.h is not None:
        if args.w is None or args.h is None:
            print("error: --w and --h must be given together", file=sys.stderr)
            return EXIT_USAGE
        decision = upscale_tier(args.w, args.h)
        _emit(args, {"tier": decision.tier.value, "reason": decision.reason},
              decision.tier.value)
        return EXIT_OK
    if not args.manifest:
        print("error: need --w/--h or --manifest", file=sys.stderr)
        return EXIT_USAGE
    summary = pipeline.run_tier_stage(args.manifest, _load_cfg(args))
    _emit(args, summary, f"tiered: {summary['kept']}/{summary['input']} kept")
    return EXIT_OK


def cmd_seamcheck(args) -> int:
    from .srqa import seam_ratios

    cfg = _load_cfg(args)
    img = _decode(args.infile)
    stride = args.stride or cfg.srqa.seam_stride
    report = seam_ratios(img, stride)
    ok = report.passed(cfg.srqa.seam_max_ratio)
    _emit(args, {"max_ratio": report.max_ratio, "passed": ok,
                 "stride": stride},
          f"max seam ratio {report.max_ratio:.4f}: "
          f"{'pass' if ok else 'FAIL'}")
    return EXIT_OK


def cmd_consistency(args) -> int:
    from .srqa import consistency_check

    cfg = _load_cfg(args)
    report = consistency_check(_decode(args.infile), _decode(args.ref),
                               cfg.srqa.psnr_min, cfg.srqa.ssim_min, None)
    _emit(args, {"psnr": report.psnr, "ssim": report.ssim,
                 "passed": report.passed},
          f"psnr {report.psnr:.2f} dB, ssim {report.ssim:.4f}: "
          f"{'pass' if report.passed else 'FAIL'}")
    return EXIT_OK


def cmd_sample(args) -> int:
    from .imgcore import to_grayscale
    from .srqa import hybrid_sample

    cfg = _load_cfg(args)
    gray = to_grayscale(_decode(args.infile))
    patch = args.patch or cfg.srqa.region_patch
    specs = hybrid_sample(gray, patch, cfg.srqa.k_texture, cfg.srqa.k_random,
                          args.seed)
    for s in specs:
        print(json.dumps({"x0": s.x0, "y0": s.y0, "w": s.w, "h": s.h,
                          "index": s.index}))
    return EXIT_OK


def cmd_glcm(args) -> int:
    from .imgcore import to_grayscale
    from .metrics import glcm_score

    cfg = _load_cfg(args)
    score = glcm_score(to_grayscale(_decode(args.infile)), cfg.glcm)
    _emit(args, {"glcm_score": score}, f"{score:.4f}")
    return EXIT_OK


def cmd_raps(args) -> int:
    from .imgcore import to_grayscale
    from .metrics import raps

    spectrum = raps(to_grayscale(_decode(args.infile))).tolist()
    out = json.dumps({"spectrum": spectrum})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(out + "\n")
    else:
        print(out)
    return EXIT_OK


def cmd_bench(args) -> int:
    import os

    from . import pipeline
    from .endpoints import EmbedderClient, ScorerClient
    from .judge import JudgeClient

    cfg = _load_cfg(args)

    def load_dir(d):
        out = []
        for name in sorted(os.listdir(d)):
            stem, ext = os.path.splitext(name)
            if ext.lower() in (".png", ".jpg", ".jpeg", ".pnm", ".pgm", ".ppm"):
                out.append((stem, _decode(os.path.join(d, name))))
        return out

    clients = {}
    if args.embedder:
        clients["embedder"] = EmbedderClient(args.embedder)
    if args.scorer:
        clients["aesthetic"] = ScorerClient(args.scorer)
    if cfg.judge.endpoint:
        clients["judge"] = JudgeClient(cfg.judge.endpoint, cfg.judge.model,
                                       cfg.judge.max_in_flight)
    captions = pipeline.load_captions_sidecar(args.captions) \
        if args.captions else None
    row = pipeline.run_bench(load_dir(args.generated), load_dir(args.reference),
                             captions, clients, cfg, args.seed,
                             method=args.method)
    payload = json.dumps(row.to_dict(), sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
        with open(args.out + ".csv", "w", encoding="utf-8") as f:
            f.write(row.to_csv())
    print(payload)
    return EXIT_OK


def cmd_judge_dryrun(args) -> int:
    from .judge import extract_judge_json, render_prompt

    vars: dict = {"images": []}
    if args.caption is not None:
        vars["long_caption"] = args.caption
    if args.coords is not None:
        vars["relative_coords"] = [float(x) for x in args.coords.split(",")]
    messages = render_prompt(args.template, vars)
    print(f"rendered {args.template}: "
          f"{len(messages[0]['content'][0]['text'])} chars", file=sys.stderr)
    if args.response:
        with open(args.response, encoding="utf-8") as f:
            result = extract_judge_json(f.read(), args.template)
        print(json.dumps({"scores": result.scores,
                          "reasoning": result.reasoning}))
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import dataflow_report

    rows = dataflow_report(args.manifest)
    if args.json:
        print(json.dumps([{"stage": a, "subset": b, "count": c}
                          for a, b, c in rows]))
    else:
        for stage, subset, count in rows:
            print(f"{stage}\t{subset}\t{count}")
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="uhrqa",
                description="Gigapixel image curation and benchmark toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, infile=False):
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", action="store_true",
                        help="machine-readable stdout")
        if infile:
            sp.add_argument("--in", dest="infile", required=True)

    sp = sub.add_parser("purify", help="run the purification stage")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--collect", default=None,
                    help="seed collected stage from this image directory")
    sp.add_argument("--scores", default=None,
                    help="aesthetic scores sidecar (JSONL)")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=cmd_purify)

    sp = sub.add_parser("tier", help="classify upscale tier")
    common(sp)
    sp.add_argument("--w", type=int)
    sp.add_argument("--h", type=int)
    sp.add_argument("--manifest")
    sp.set_defaults(fn=cmd_tier)

    sp = sub.add_parser("seamcheck", help="inspect tile-seam continuity")
    common(sp, infile=True)
    sp.add_argument("--stride", type=int, default=None)
    sp.set_defaults(fn=cmd_seamcheck)

    sp = sub.add_parser("consistency", help="post-SR consistency check")
    common(sp, infile=True)
    sp.add_argument("--ref", required=True)
    sp.set_defaults(fn=cmd_consistency)

    sp = sub.add_parser("sample", help="hybrid representative patch sampling")
    common(sp, infile=True)
    sp.add_argument("--patch", type=int, default=None)
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("glcm", help="texture granularity score")
    common(sp, infile=True)
    sp.set_defaults(fn=cmd_glcm)

    sp = sub.add_parser("raps", help="radially averaged power spectrum")
    common(sp, infile=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_raps)

    sp = sub.add_parser("bench", help="assemble one benchmark row")
    common(sp)
    sp.add_argument("--generated", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--captions", default=None)
    sp.add_argument("--embedder", default=None)
    sp.add_argument("--scorer", default=None)
    sp.add_argument("--method", default="method")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("judge-dryrun",
                        help="render prompts / validate fixture responses "
                             "offline")
    common(sp)
    sp.add_argument("--template", required=True)
    sp.add_argument("--caption", default=None)
    sp.add_argument("--coords", default=None,
                    help="x_min,y_min,x_max,y_max (normalized)")
    sp.add_argument("--response", default=None,
                    help="fixture response file to validate")
    sp.set_defaults(fn=cmd_judge_dryrun)

    sp = sub.add_parser("report", help="dataflow accounting table")
    common(sp)
    sp.add_argument("--manifest", required=True)
    sp.set_defaults(fn=cmd_report)

    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    from .imgcore import DecodeError

    try:
        return args.fn(args)
    except DecodeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:  # endpoint and manifest failures
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    raise SystemExit(run_cli())
