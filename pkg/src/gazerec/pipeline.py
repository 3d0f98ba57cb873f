"""Pipeline stages: annotation-driven patch extraction and online
evaluation (saliency -> proposal -> CNN -> temporal fusion).

The online path sees only frames and measured gaze; ground truth enters
afterwards, when decisions are scored.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import NUM_CLASSES
from .annotation.store import AnnotationStore, VideoAnnotation
from .datasetio import frame_path, read_meta, read_split, read_truth, synced_fixations
from .fusion import ScoreSequence, fuse_majority, fuse_mean, fuse_windowed
from .gaze import SyncedFixation
from .imgio import read_rgb
from .metrics import (
    Decision,
    EvalReport,
    StageTimer,
    confusion_matrix,
    frame_accuracy,
    latency_profile,
    mean_average_precision,
)
from .nnet import Network
from .nnet.train import batch_to_input
from .patches import (
    NoFreeSpace,
    Patch,
    augment,
    extract_object_patch,
    make_exclusion_zone,
    sample_background,
    write_patch_dataset,
)
from .saliency import (
    EmptyMaskAtFixation,
    WoodingParams,
    peak_component_bbox,
    threshold_mask,
    wooding_map,
)

log = logging.getLogger("gazerec")


class MissingAnnotations(Exception):
    pass


@dataclass
class PatchParams:
    tau: float = 0.5
    min_size: int = 95  # full-HD scale; shrink for small synthetic frames
    max_overlap: float = 0.20
    background_count: int = 1
    out_size: int = 64
    frame_stride: int = 1
    zone_margin: float = 0.25
    augment_train: bool = True


def oracle_annotations(root, video_ids, tau: float) -> dict[str, VideoAnnotation]:
    """Annotations synthesized from simulator ground truth: exploration
    ends at the first fixation-phase frame, the label is the target
    category. Substitutes for the human tool on synthetic data."""
    out = {}
    for vid in video_ids:
        truth = read_truth(root, vid)
        start = next((r.frame for r in truth if r.phase == "fixation"), 0)
        out[vid] = VideoAnnotation(
            video_id=vid,
            start_frame=start,
            tau=tau,
            category=truth[0].label,
            note="oracle",
        )
    return out


def proposal_box(image_dims, fix: SyncedFixation, tau: float, params: WoodingParams):
    """The saliency-selected proposal for one frame."""
    smap = wooding_map(image_dims, fix, params)
    mask = threshold_mask(smap, tau)
    return peak_component_bbox(mask, smap.fixation)


def extract_video_patches(
    root,
    video_id: str,
    ann: VideoAnnotation,
    pp: PatchParams,
    wp: WoodingParams,
    rng: np.random.Generator,
    with_background: bool = True,
) -> list[Patch]:
    """Object (and background) patches for annotated frames of one video."""
    meta = read_meta(root, video_id)
    fixes = synced_fixations(root, video_id)
    dims = (meta.width, meta.height)
    out: list[Patch] = []
    for frame in range(ann.start_frame, meta.n_frames, pp.frame_stride):
        fix = fixes.get(frame)
        if fix is None or fix.low_confidence:
            continue
        try:
            box = proposal_box(dims, fix, ann.tau, wp)
        except EmptyMaskAtFixation:
            continue
        image = read_rgb(frame_path(root, video_id, frame))
        out.append(
            extract_object_patch(image, box, pp.out_size, label=ann.category,
                                 source=(video_id, frame))
        )
        if with_background and pp.background_count:
            zone = make_exclusion_zone(box, dims, pp.zone_margin)
            try:
                out.extend(
                    sample_background(
                        image, zone, pp.background_count, pp.min_size,
                        pp.max_overlap, rng, out_size=pp.out_size,
                        source=(video_id, frame),
                    )
                )
            except NoFreeSpace:
                log.debug("no background space in %s frame %d", video_id, frame)
    return out


def extract_patches(
    root,
    out_dir,
    pp: PatchParams = PatchParams(),
    wp: WoodingParams = WoodingParams(),
    splits=("train", "val"),
    oracle: bool = False,
    seed: int = 0,
) -> dict[str, Path]:
    """Write per-split patch datasets; returns split -> manifest path.

    Training patches get the 16x augmentation; validation ones do not
    (configurable). Background is never sampled for the test split.
    """
    root = Path(root)
    out_dir = Path(out_dir)
    split_map = read_split(root)
    manifests: dict[str, Path] = {}

    wanted = {s: sorted(v for v, sp in split_map.items() if sp == s) for s in splits}
    all_ids = [v for ids in wanted.values() for v in ids]
    if oracle:
        annotations = oracle_annotations(root, all_ids, pp.tau)
    else:
        annotations = AnnotationStore(root).current()
        missing = [v for v in all_ids if v not in annotations]
        if missing:
            raise MissingAnnotations(f"not annotated: {', '.join(missing)}")

    for split_name, ids in wanted.items():
        patches: list[Patch] = []
        for i, vid in enumerate(ids):
            rng = np.random.default_rng((seed, split_name == "val", i))
            vid_patches = extract_video_patches(
                root, vid, annotations[vid], pp, wp, rng,
                with_background=split_name != "test",
            )
            if split_name == "train" and pp.augment_train:
                vid_patches = [q for p in vid_patches for q in augment(p)]
            patches.extend(vid_patches)
        manifest = out_dir / f"{split_name}_manifest.csv"
        write_patch_dataset(patches, out_dir / split_name, manifest)
        manifests[split_name] = manifest
        counts = Counter(p.label for p in patches)
        log.info(
            "%s: %d patches (%s)",
            split_name,
            len(patches),
            ", ".join(f"{k}:{v}" for k, v in sorted(counts.items())),
        )
    return manifests


# --- online evaluation ---------------------------------------------------------


@dataclass
class VideoRun:
    video_id: str
    sequence: ScoreSequence
    windowed: list[tuple[int, int]] = field(default_factory=list)


def classify_video(
    root,
    video_id: str,
    network: Network,
    pp: PatchParams,
    wp: WoodingParams,
    timer: StageTimer | None = None,
    window: int | None = None,
    exclude_low_confidence: bool = True,
) -> VideoRun:
    """Per-frame scores for one video along the online path.

    Needs only frames, gaze and the trained network; ground truth is
    not read here.
    """
    meta = read_meta(root, video_id)
    fixes = synced_fixations(root, video_id)
    dims = (meta.width, meta.height)
    entries = []
    running = np.zeros(NUM_CLASSES)
    for frame in range(meta.n_frames):
        fix = fixes.get(frame)
        if fix is None or (exclude_low_confidence and fix.low_confidence):
            continue
        image = read_rgb(frame_path(root, video_id, frame))
        if timer:
            with timer.stage("saliency"):
                box = proposal_box(dims, fix, pp.tau, wp)
            with timer.stage("patch"):
                patch = extract_object_patch(image, box, pp.out_size)
                x = batch_to_input(patch.pixels[None], network.dtype)
            with timer.stage("inference"):
                probs = network.forward(x)[0]
            with timer.stage("fusion"):
                running += probs
        else:
            box = proposal_box(dims, fix, pp.tau, wp)
            patch = extract_object_patch(image, box, pp.out_size)
            x = batch_to_input(patch.pixels[None], network.dtype)
            probs = network.forward(x)[0]
            running += probs
        entries.append((frame, probs))
    seq = ScoreSequence.from_arrays(video_id, [f for f, _ in entries], [p for _, p in entries])
    run = VideoRun(video_id=video_id, sequence=seq)
    if window:
        run.windowed = fuse_windowed(seq, window)
    return run


def evaluate(
    root,
    network: Network,
    pp: PatchParams = PatchParams(),
    wp: WoodingParams = WoodingParams(),
    split: str = "test",
    window: int | None = None,
    timer: StageTimer | None = None,
    budget_ms: float = 250.0,
) -> EvalReport:
    """Classify every video of a split and score fused vs majority
    decisions at the video level, plus per-frame accuracy and latency."""
    root = Path(root)
    split_map = read_split(root)
    ids = sorted(split_map if split == "all" else
                 (v for v, s in split_map.items() if s == split))
    if not ids:
        raise ValueError(f"split {split!r} is empty")

    fused_decisions: list[Decision] = []
    majority_decisions: list[Decision] = []
    frame_decisions: list[Decision] = []
    fusion_rows: list[dict] = []
    for vid in ids:
        run = classify_video(root, vid, network, pp, wp, timer=timer, window=window)
        true_cat = read_meta(root, vid).target_category
        n = len(run.sequence.entries)
        fused = fuse_mean(run.sequence)
        maj = fuse_majority(run.sequence)
        fused_decisions.append(
            Decision(vid, fused.category, true_cat, float(fused.scores[fused.category] / n))
        )
        majority_decisions.append(
            Decision(vid, maj.category, true_cat, float(maj.scores[maj.category] / n))
        )
        for frame, probs in run.sequence.entries:
            pred = int(np.argmax(probs))
            frame_decisions.append(
                Decision(f"{vid}:{frame}", pred, true_cat, float(probs[pred]))
            )
        fusion_rows.append(
            {
                "video_id": vid,
                "n_frames": n,
                "decision": fused.category,
                "decision_majority": maj.category,
                "tie": fused.tie or maj.tie,
                "top_score": float(fused.scores[fused.category] / n),
            }
        )

    fused_map, per_class_fused = mean_average_precision(fused_decisions)
    unfused_map, per_class_unfused = mean_average_precision(majority_decisions)
    report = EvalReport(
        fused_map=fused_map,
        unfused_map=unfused_map,
        per_class_fused=per_class_fused,
        per_class_unfused=per_class_unfused,
        frame_acc=frame_accuracy(frame_decisions),
        confusion=confusion_matrix(frame_decisions, NUM_CLASSES),
        latency=latency_profile(timer, budget_ms=budget_ms) if timer else None,
        video_decisions=fusion_rows,
    )
    return report
