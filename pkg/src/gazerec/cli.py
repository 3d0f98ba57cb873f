"""Command-line entry point.

Subcommands: ``simgen`` (synthetic corpus), ``annotate`` (HTTP service
for the annotation tool), ``extract`` (patch datasets), ``train``,
``eval`` (online path with fusion) and ``profile`` (latency report).

A pipeline config file (``key = value`` lines) can supply shared
defaults; explicit flags win. Keys: dataset_root, tau, min_size,
max_overlap, background_count, out_size, frame_stride, fusion_window,
net_spec, train_config, seed, precision.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import NUM_CLASSES
from .metrics import StageTimer, latency_profile, write_fusion_report, write_report
from .nnet import (
    TrainConfig,
    desk_spec,
    load_checkpoint,
    load_network_spec,
    load_train_config,
    save_checkpoint,
    train,
    write_curves,
)
from .patches import load_patch_dataset
from .pipeline import PatchParams, evaluate, extract_patches
from .saliency import WoodingParams, threshold_mask, wooding_map
from .simgen import GazePhysiology, generate_corpus

log = logging.getLogger("gazerec")


@dataclass
class PipelineConfig:
    dataset_root: str = ""
    tau: float = 0.5
    min_size: int = 95
    max_overlap: float = 0.20
    background_count: int = 1
    out_size: int = 64
    frame_stride: int = 1
    fusion_window: int = 0  # 0 = whole video
    net_spec: str = ""  # path, or empty for the desk-scale default
    train_config: str = ""
    seed: int = 0
    precision: str = "single"


def load_pipeline_config(path) -> PipelineConfig:
    values: dict = {}
    types = {f.name: type(f.default) for f in fields(PipelineConfig)}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            values[key] = types[key](value)
    return PipelineConfig(**values)


def _patch_params(args, cfg: PipelineConfig) -> PatchParams:
    pick = lambda flag, default: default if flag is None else flag
    return PatchParams(
        tau=pick(args.tau, cfg.tau),
        min_size=pick(args.min_size, cfg.min_size),
        max_overlap=pick(args.max_overlap, cfg.max_overlap),
        background_count=pick(args.background_count, cfg.background_count),
        out_size=pick(args.out_size, cfg.out_size),
        frame_stride=pick(args.stride, cfg.frame_stride),
    )


def cmd_simgen(args, cfg):
    phys = GazePhysiology(
        fixation_total_ms=(args.fixation_lo, args.fixation_hi),
        distractor_fraction=(args.distractor_lo, args.distractor_hi),
        dominant_distractor_bias=args.dominant_bias,
        distractor_landing_spread=args.landing_spread,
    )
    classes = [int(c) for c in args.classes.split(",")] if args.classes else None
    root = generate_corpus(
        args.videos,
        args.out,
        seed=args.seed if args.seed is not None else cfg.seed,
        classes=classes,
        frame_dims=(args.frame_width, args.frame_height),
        phys=phys,
    )
    print(f"wrote {args.videos} videos under {root}")
    return 0


def cmd_annotate(args, cfg):
    from .annotation.service import serve

    serve(
        args.data or cfg.dataset_root,
        host=args.host,
        port=args.port,
        frontend_dir=args.frontend,
    )
    return 0


def cmd_extract(args, cfg):
    pp = _patch_params(args, cfg)
    manifests = extract_patches(
        args.data or cfg.dataset_root,
        args.out,
        pp,
        splits=tuple(args.splits.split(",")),
        oracle=args.oracle,
        seed=args.seed if args.seed is not None else cfg.seed,
    )
    for split, manifest in manifests.items():
        with open(manifest) as fh:
            n = sum(1 for _ in fh) - 1
        print(f"{split}: {n} patches -> {manifest}")
    return 0


def _load_spec(args, cfg):
    path = args.net or cfg.net_spec
    if path:
        return load_network_spec(path)
    return desk_spec(args.classes)


def cmd_train(args, cfg):
    spec = _load_spec(args, cfg)
    overrides = {}
    for key in ("max_iterations", "batch_size", "base_lr", "val_interval",
                "early_stop_accuracy"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides.setdefault("precision", args.precision or cfg.precision)
    tc_path = args.train_config or cfg.train_config
    tcfg = load_train_config(tc_path, **overrides) if tc_path else TrainConfig(**overrides)

    train_data = load_patch_dataset(args.train_manifest)
    val_data = load_patch_dataset(args.val_manifest) if args.val_manifest else None
    result = train(
        spec, tcfg, train_data, val_data,
        checkpoint_path=args.checkpoint,
        resume_from=args.resume,
        log=print,
    )
    if args.curves_dir:
        curves = Path(args.curves_dir)
        curves.mkdir(parents=True, exist_ok=True)
        write_curves(result, curves / "loss.csv", curves / "val_accuracy.csv")
    best = result.best_val_accuracy
    print(f"done: {result.iterations_run} iterations"
          + (f", best val accuracy {best:.4f}" if val_data else ""))
    return 0


def cmd_eval(args, cfg):
    network, *_ = load_checkpoint(args.checkpoint, dtype=_dtype(args, cfg))
    pp = _patch_params(args, cfg)
    window = args.window if args.window is not None else (cfg.fusion_window or None)
    timer = StageTimer()
    report = evaluate(
        args.data or cfg.dataset_root, network, pp,
        split=args.split, window=window, timer=timer, budget_ms=args.budget_ms,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out / "report.csv", out / "ap_plot.csv")
    write_fusion_report(report.video_decisions, out / "fusion.csv")
    np.savetxt(out / "confusion.csv", report.confusion, fmt="%d", delimiter=",")
    print(f"fused mAP {report.fused_map:.4f} | unfused (majority) {report.unfused_map:.4f} "
          f"| frame accuracy {report.frame_acc:.4f}")
    lat = report.latency
    print(f"latency: {lat.total_mean_ms:.2f} ms/frame mean over {lat.frames} frames "
          f"(budget {lat.budget_ms:.0f} ms, reference {lat.reference_ms} ms)")
    return 0


def cmd_profile(args, cfg):
    network, *_ = load_checkpoint(args.checkpoint, dtype=_dtype(args, cfg))
    pp = _patch_params(args, cfg)
    timer = StageTimer()
    report = evaluate(
        args.data or cfg.dataset_root, network, pp,
        split=args.split, timer=timer, budget_ms=args.budget_ms,
    )
    lat = report.latency
    if lat.frames < args.min_frames:
        print(f"warning: only {lat.frames} frames profiled, wanted {args.min_frames}",
              file=sys.stderr)
    print(f"{'stage':<12}{'mean ms':>10}{'p95 ms':>10}{'max ms':>10}{'n':>8}")
    for s in lat.stages:
        print(f"{s.name:<12}{s.mean_ms:>10.3f}{s.p95_ms:>10.3f}{s.max_ms:>10.3f}{s.count:>8}")
    print(f"{'total':<12}{lat.total_mean_ms:>10.3f}")
    print(f"budget {lat.budget_ms:.0f} ms/frame: {'OK' if lat.within_budget else 'EXCEEDED'} "
          f"(published reference: {lat.reference_ms} ms)")

    if args.full_hd:
        # saliency cost at full HD, reported separately (not asserted)
        from types import SimpleNamespace

        hd_timer = StageTimer()
        wp = WoodingParams()
        rng = np.random.default_rng(0)
        for _ in range(args.full_hd_frames):
            fix = SimpleNamespace(
                x=float(rng.uniform(300, 1620)), y=float(rng.uniform(200, 880)),
                d=float(rng.uniform(400, 1200)),
            )
            with hd_timer.stage("saliency_1080p"):
                smap = wooding_map((1920, 1080), fix, wp)
                threshold_mask(smap, pp.tau)
        hd = latency_profile(hd_timer, budget_ms=args.budget_ms, stage_order=("saliency_1080p",))
        s = hd.stages[0]
        print(f"saliency at 1920x1080 (truncated): mean {s.mean_ms:.2f} ms over {s.count} frames "
              f"(published reference: 20 ms)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "latency.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stage", "mean_ms", "p95_ms", "max_ms", "count"])
            for s in lat.stages:
                writer.writerow([s.name, f"{s.mean_ms:.4f}", f"{s.p95_ms:.4f}",
                                 f"{s.max_ms:.4f}", s.count])
            writer.writerow(["total", f"{lat.total_mean_ms:.4f}", "", "", lat.frames])
    return 0


def _dtype(args, cfg):
    precision = args.precision or cfg.precision
    return np.float64 if precision == "double" else np.float32


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the
    # SUPPRESS defaults keep the subparser from clobbering values parsed
    # at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="pipeline config file (key = value)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--precision", choices=("double", "single"),
                        default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="gazerec",
        description="Gaze-driven object recognition pipeline for egocentric video.",
        parents=[common],
    )
    parser.set_defaults(config=None, seed=None, precision=None, verbose=False)
    sub = parser.add_subparsers(dest="command", required=True)
    sub_kwargs = {"parents": [common]}

    p = sub.add_parser("simgen", **sub_kwargs, help="generate a synthetic corpus")
    p.add_argument("--videos", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-width", type=int, default=320)
    p.add_argument("--frame-height", type=int, default=180)
    p.add_argument("--classes", help="comma-separated category ids (default all 8)")
    p.add_argument("--fixation-lo", type=float, default=1100.0)
    p.add_argument("--fixation-hi", type=float, default=1900.0)
    p.add_argument("--distractor-lo", type=float, default=0.02)
    p.add_argument("--distractor-hi", type=float, default=0.10)
    p.add_argument("--dominant-bias", type=float, default=0.7)
    p.add_argument("--landing-spread", type=float, default=0.9)
    p.set_defaults(func=cmd_simgen)

    p = sub.add_parser("annotate", **sub_kwargs, help="launch the annotation service")
    p.add_argument("--data", help="dataset root (or config dataset_root)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8763)
    p.add_argument("--frontend", help="built frontend directory to serve at /ui")
    p.set_defaults(func=cmd_annotate)

    def patch_flags(p):
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--min-size", type=int, default=None)
        p.add_argument("--max-overlap", type=float, default=None)
        p.add_argument("--background-count", type=int, default=None)
        p.add_argument("--out-size", type=int, default=None)
        p.add_argument("--stride", type=int, default=None)

    p = sub.add_parser("extract", **sub_kwargs, help="extract labeled patches")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--splits", default="train,val")
    p.add_argument("--oracle", action="store_true",
                   help="use simulator ground truth instead of stored annotations")
    patch_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", **sub_kwargs, help="train the network on extracted patches")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--val-manifest")
    p.add_argument("--net", help="network spec file (default: desk-scale)")
    p.add_argument("--classes", type=int, default=NUM_CLASSES)
    p.add_argument("--train-config", help="training config file")
    p.add_argument("--checkpoint", help="checkpoint output path")
    p.add_argument("--curves-dir", help="write loss.csv / val_accuracy.csv here")
    p.add_argument("--resume", help="resume from this checkpoint")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--base-lr", type=float, default=None)
    p.add_argument("--val-interval", type=int, default=None)
    p.add_argument("--early-stop-accuracy", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", **sub_kwargs, help="online evaluation with temporal fusion")
    p.add_argument("--data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--budget-ms", type=float, default=250.0)
    patch_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("profile", **sub_kwargs, help="per-stage latency report")
    p.add_argument("--data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out")
    p.add_argument("--split", default="test")
    p.add_argument("--min-frames", type=int, default=500)
    p.add_argument("--budget-ms", type=float, default=250.0)
    p.add_argument("--full-hd", action="store_true",
                   help="also benchmark saliency at 1920x1080")
    p.add_argument("--full-hd-frames", type=int, default=50)
    patch_flags(p)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    try:
        return args.func(args, cfg)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # surface a clean one-line failure
        if args.verbose:
            raise
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
