"""Synthetic egocentric recordings: rendered table scenes plus a gaze trace.

Each recording shows four simple geometric objects lined up on a plain
background, filmed by a lightly shaking camera, together with a 50 Hz
gaze stream following the observation phases seen in practice: a short
scene discovery scatter, a long fixation on the target (with
micro-saccade jitter), optional distractor excursions to other objects,
and a final grasp phase. Blinks puncture the stream with invalid
samples. Frames render at 25 Hz; ground truth records the target box
and the active phase per frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from scipy.ndimage import uniform_filter1d

from . import CATEGORY_NAMES
from .gaze import GazeSample, GazeTrack, write_gaze_file
from .imgio import write_rgb
from .saliency import BoundingBox

GAZE_RATE_HZ = 50.0
FRAME_RATE_HZ = 25.0
GAZE_PERIOD_MS = 1000.0 / GAZE_RATE_HZ
FRAME_PERIOD_MS = 1000.0 / FRAME_RATE_HZ


class OverlappingObjects(Exception):
    pass


# base colors per category id 1..8 (background is 0)
_BASE_COLORS = {
    1: (220, 60, 50),  # cone
    2: (60, 110, 220),  # cylinder
    3: (230, 180, 40),  # hemisphere
    4: (70, 180, 80),  # hexagonal prism
    5: (160, 70, 200),  # rectangular prism
    6: (240, 130, 30),  # rectangular pyramid
    7: (40, 190, 190),  # triangular prism
    8: (200, 60, 140),  # triangular pyramid
}


@dataclass(frozen=True)
class SceneObject:
    category: int  # 1..8
    color: tuple[int, int, int]
    size: int  # px, bounding square side
    center: tuple[int, int]
    flipped: bool = False  # placed upside down

    @property
    def box(self) -> BoundingBox:
        cx, cy = self.center
        half = self.size // 2
        return BoundingBox(cx - half, cy - half, cx - half + self.size, cy - half + self.size)


@dataclass(frozen=True)
class SceneSpec:
    frame_dims: tuple[int, int]  # (W, H)
    objects: tuple[SceneObject, ...]
    background: tuple[int, int, int] = (236, 234, 228)
    jitter_amplitude: float = 2.5  # px of camera shake
    blur_probability: float = 0.1
    noise_sigma: float = 3.0  # sensor noise keeps patches non-trivial


@dataclass(frozen=True)
class GazePhysiology:
    """Phase duration ranges (ms) and measurement noise for the trace."""

    discovery_ms: tuple[float, float] = (240.0, 300.0)
    fixation_min_ms: float = 250.0
    fixation_total_ms: tuple[float, float] = (1100.0, 1900.0)
    distractor_ms: tuple[float, float] = (100.0, 500.0)
    grasp_ms: tuple[float, float] = (400.0, 900.0)
    microsaccade_deg: float = 0.5
    camera_beta_deg: float = 24.0
    blink_probability: float = 0.7
    blink_ms: tuple[float, float] = (100.0, 300.0)
    max_blinks: int = 2
    # per-video share of attended time spent on distractors
    distractor_fraction: tuple[float, float] = (0.02, 0.10)
    # repeated glances favor one salient distractor object
    dominant_distractor_bias: float = 0.7
    # brief glances land off-center (saccadic undershoot) and hold an
    # unstable fixation; both expressed relative to the object size and
    # the micro-saccade amplitude
    distractor_landing_spread: float = 0.9
    distractor_jitter_factor: float = 3.0
    viewing_distance_mm: float = 600.0
    distance_noise_mm: float = 20.0
    # vergence is unsettled during brief glances, so measured distance
    # is far noisier there (this is what makes distractor patches badly
    # scaled and weakly scored downstream)
    distractor_distance_noise_mm: float = 120.0


@dataclass(frozen=True)
class GazePhase:
    name: str  # discovery | fixation | distractor | grasp
    start_ms: float
    duration_ms: float
    object_index: int  # scene object the eye rests on (-1 for discovery)

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms


@dataclass(frozen=True)
class GazeScript:
    phases: tuple[GazePhase, ...]
    blinks: tuple[tuple[float, float], ...]  # (start ms, duration ms)

    @property
    def total_ms(self) -> float:
        return self.phases[-1].end_ms

    def phase_at(self, t_ms: float) -> GazePhase:
        for phase in self.phases:
            if phase.start_ms <= t_ms < phase.end_ms:
                return phase
        return self.phases[-1]


# --- rendering ----------------------------------------------------------------


def _silhouette_points(category: int, flipped: bool) -> list[np.ndarray]:
    """Polygons (unit coordinates, y down) that make up each silhouette."""
    shapes = {
        # cone: triangle over a shallow base bulge
        1: [np.array([(0.5, 0.0), (0.95, 0.85), (0.05, 0.85)])],
        # cylinder body; elliptical caps drawn separately
        2: [np.array([(0.2, 0.12), (0.8, 0.12), (0.8, 0.88), (0.2, 0.88)])],
        # hemisphere handled with an ellipse wedge
        3: [],
        4: [np.array([(0.5, 0.02), (0.93, 0.27), (0.93, 0.73), (0.5, 0.98), (0.07, 0.73), (0.07, 0.27)])],
        5: [np.array([(0.08, 0.08), (0.92, 0.08), (0.92, 0.92), (0.08, 0.92)])],
        # truncated pyramid on a thin plinth
        6: [
            np.array([(0.32, 0.05), (0.68, 0.05), (0.95, 0.82), (0.05, 0.82)]),
            np.array([(0.02, 0.82), (0.98, 0.82), (0.98, 0.95), (0.02, 0.95)]),
        ],
        # prism in three-quarter view: rectangle with a triangular roof
        7: [np.array([(0.08, 0.45), (0.5, 0.05), (0.92, 0.45), (0.92, 0.95), (0.08, 0.95)])],
        8: [np.array([(0.5, 0.0), (0.78, 0.95), (0.22, 0.95)])],
    }
    polys = [p.copy() for p in shapes[category]]
    if flipped:
        for p in polys:
            p[:, 1] = 1.0 - p[:, 1]
    return polys


def _draw_object(frame: np.ndarray, obj: SceneObject, offset: tuple[float, float]) -> None:
    ox, oy = offset
    x0 = obj.center[0] - obj.size / 2 + ox
    y0 = obj.center[1] - obj.size / 2 + oy
    color = obj.color

    def to_px(poly: np.ndarray) -> np.ndarray:
        pts = np.empty_like(poly)
        pts[:, 0] = x0 + poly[:, 0] * obj.size
        pts[:, 1] = y0 + poly[:, 1] * obj.size
        return np.round(pts).astype(np.int32)

    for poly in _silhouette_points(obj.category, obj.flipped):
        cv2.fillPoly(frame, [to_px(poly)], color)

    s = obj.size
    cx = int(round(x0 + 0.5 * s))
    if obj.category == 1:  # cone base bulge
        base_y = 0.15 if obj.flipped else 0.85
        cv2.ellipse(frame, (cx, int(round(y0 + base_y * s))),
                    (int(0.45 * s), int(0.1 * s)), 0, 0, 360, color, -1)
    elif obj.category == 2:  # cylinder caps
        for cap_y in (0.12, 0.88):
            cv2.ellipse(frame, (cx, int(round(y0 + cap_y * s))),
                        (int(0.3 * s), int(0.1 * s)), 0, 0, 360, color, -1)
    elif obj.category == 3:  # hemisphere: half disc, flat side down
        cy = 0.25 if obj.flipped else 0.75
        start, end = (0, 180) if obj.flipped else (180, 360)
        cv2.ellipse(frame, (cx, int(round(y0 + cy * s))),
                    (int(0.46 * s), int(0.46 * s)), 0, start, end, color, -1)
        cv2.ellipse(frame, (cx, int(round(y0 + cy * s))),
                    (int(0.46 * s), int(0.12 * s)), 0, 0, 360, color, -1)


def validate_scene(spec: SceneSpec) -> None:
    w, h = spec.frame_dims
    boxes = []
    for obj in spec.objects:
        b = obj.box
        if b.x0 < 0 or b.y0 < 0 or b.x1 > w or b.y1 > h:
            raise OverlappingObjects(f"object box {b} leaves the {w}x{h} frame")
        boxes.append(b)
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if boxes[i].intersection_area(boxes[j]) > 0:
                raise OverlappingObjects(f"objects {i} and {j} overlap")


def render_scene(
    spec: SceneSpec,
    seed: int | np.random.Generator = 0,
    offset: tuple[float, float] = (0.0, 0.0),
    force_blur: bool | None = None,
) -> np.ndarray:
    """Rasterize one frame: deterministic for a given spec and seed.

    ``offset`` shifts the whole scene (camera shake). Blur is applied
    with the spec's probability unless ``force_blur`` overrides it.
    """
    validate_scene(spec)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w, h = spec.frame_dims
    frame = np.empty((h, w, 3), dtype=np.uint8)
    frame[:] = spec.background
    for obj in spec.objects:
        _draw_object(frame, obj, offset)
    blur = force_blur if force_blur is not None else bool(rng.random() < spec.blur_probability)
    if blur:
        frame = cv2.GaussianBlur(frame, (7, 7), 0, borderType=cv2.BORDER_REFLECT)
    if spec.noise_sigma > 0:
        noise = rng.normal(0.0, spec.noise_sigma, size=frame.shape)
        frame = np.clip(frame.astype(np.float32) + noise, 0, 255).astype(np.uint8)
    return frame


# --- gaze simulation ----------------------------------------------------------


def microsaccade_px(width_px: int, phys: GazePhysiology) -> float:
    """Micro-saccade amplitude converted from degrees to pixels."""
    focal_px = (width_px / 2.0) / math.tan(math.radians(phys.camera_beta_deg))
    return focal_px * math.tan(math.radians(phys.microsaccade_deg))


def build_script(
    spec: SceneSpec,
    target_index: int,
    rng: np.random.Generator,
    phys: GazePhysiology = GazePhysiology(),
) -> GazeScript:
    """Phase schedule: discovery, fixation blocks with optional distractor
    excursions, then grasp; plus blink gaps."""
    n_objects = len(spec.objects)
    if not 0 <= target_index < n_objects:
        raise IndexError(f"target index {target_index} out of range")

    discovery = rng.uniform(*phys.discovery_ms)
    fixation_total = rng.uniform(*phys.fixation_total_ms)
    grasp = rng.uniform(*phys.grasp_ms)

    distractor_durations: list[float] = []
    others = [i for i in range(n_objects) if i != target_index]
    if others:
        fraction = rng.uniform(*phys.distractor_fraction)
        want = fraction / max(1e-9, 1.0 - fraction) * (fixation_total + grasp)
        lo, hi = phys.distractor_ms
        while want >= lo:
            d = float(min(hi, want)) if want < 2 * lo else float(rng.uniform(lo, min(hi, want - lo)))
            distractor_durations.append(d)
            want -= d

    # fixation blocks stay above the physiological minimum; excursions
    # beyond the block count chain back to back (the eye can hop from
    # one distracting object straight to another)
    k = len(distractor_durations)
    m = max(1, min(int(fixation_total // phys.fixation_min_ms), k + 1))
    weights = rng.dirichlet(np.ones(m)) if m > 1 else np.array([1.0])
    spare = fixation_total - phys.fixation_min_ms * m
    fix_blocks = phys.fixation_min_ms + weights * spare
    slots: list[list[float]] = [[] for _ in range(m)]
    for j, dur in enumerate(distractor_durations):
        slots[j % m].append(dur)

    dominant = int(rng.choice(others)) if others else -1
    phases: list[GazePhase] = []
    t = 0.0

    def push(name, dur, obj_idx):
        nonlocal t
        phases.append(GazePhase(name, t, float(dur), obj_idx))
        t += float(dur)

    push("discovery", discovery, -1)
    for i, block in enumerate(fix_blocks):
        push("fixation", block, target_index)
        for dur in slots[i]:
            if len(others) > 1 and rng.random() > phys.dominant_distractor_bias:
                pick = int(rng.choice([o for o in others if o != dominant]))
            else:
                pick = dominant
            push("distractor", dur, pick)
    push("grasp", grasp, target_index)

    blinks = []
    if rng.random() < phys.blink_probability:
        for _ in range(int(rng.integers(1, phys.max_blinks + 1))):
            dur = rng.uniform(*phys.blink_ms)
            start = rng.uniform(discovery, max(discovery + 1.0, t - dur))
            blinks.append((float(start), float(dur)))
    return GazeScript(tuple(phases), tuple(sorted(blinks)))


def _camera_path(n_samples: int, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """Smooth (n, 2) camera offset walk bounded by the amplitude."""
    if amplitude <= 0:
        return np.zeros((n_samples, 2))
    raw = rng.standard_normal((n_samples, 2))
    smooth = uniform_filter1d(raw, size=9, axis=0, mode="nearest")
    peak = np.abs(smooth).max() or 1.0
    return smooth / peak * amplitude


def simulate_gaze(
    spec: SceneSpec,
    target_index: int,
    seed: int | np.random.Generator = 0,
    phys: GazePhysiology = GazePhysiology(),
) -> tuple[GazeScript, GazeTrack, np.ndarray]:
    """Gaze samples at 50 Hz for a scripted observation of the scene.

    Returns the script, the gaze track (camera-frame coordinates, with
    blink gaps marked invalid) and the per-sample camera offset path
    used, so the renderer can shake frames consistently.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    script = build_script(spec, target_index, rng, phys)
    n_samples = int(script.total_ms // GAZE_PERIOD_MS)
    offsets = _camera_path(n_samples, spec.jitter_amplitude, rng)
    jitter_px = microsaccade_px(spec.frame_dims[0], phys)

    # per-glance errors, drawn once per phase: the tracker's distance
    # estimate shares one vergence error for a whole glance, and a brief
    # distractor glance lands off the object center
    phase_d_center = {}
    phase_anchor = {}
    for phase in script.phases:
        sigma = (
            phys.distractor_distance_noise_mm
            if phase.name == "distractor"
            else (2.0 * phys.distance_noise_mm if phase.name == "discovery" else 10.0)
        )
        phase_d_center[phase.start_ms] = float(
            np.clip(rng.normal(phys.viewing_distance_mm, sigma), 250.0, 1500.0)
        )
        if phase.object_index >= 0:
            obj = spec.objects[phase.object_index]
            if phase.name == "distractor":
                spread = phys.distractor_landing_spread * obj.size / 2.0
                anchor = (
                    obj.center[0] + rng.uniform(-spread, spread),
                    obj.center[1] + rng.uniform(-spread, spread),
                )
            else:
                anchor = (float(obj.center[0]), float(obj.center[1]))
            phase_anchor[phase.start_ms] = anchor

    # discovery scatter: short hops across the line-up
    hops = []
    t_hop = 0.0
    discovery_end = script.phases[0].duration_ms
    while t_hop < discovery_end:
        hops.append((t_hop, int(rng.integers(len(spec.objects)))))
        t_hop += rng.uniform(60.0, 100.0)

    def point_on(obj: SceneObject, anchor=None, jitter_scale=1.0) -> tuple[float, float]:
        box = obj.box
        ax, ay = anchor if anchor is not None else obj.center
        jx, jy = rng.normal(0.0, jitter_scale * jitter_px / 2.0, size=2)
        x = min(max(ax + jx, box.x0 + 1), box.x1 - 2)
        y = min(max(ay + jy, box.y0 + 1), box.y1 - 2)
        return x, y

    w, h = spec.frame_dims
    samples = []
    for i in range(n_samples):
        t = i * GAZE_PERIOD_MS
        if any(s <= t < s + d for s, d in script.blinks):
            samples.append(GazeSample(t, math.nan, math.nan, math.nan, False))
            continue
        phase = script.phase_at(t)
        if phase.name == "discovery":
            active = max(idx for start, idx in hops if start <= t)
            x, y = point_on(spec.objects[active])
        else:
            x, y = point_on(
                spec.objects[phase.object_index],
                anchor=phase_anchor[phase.start_ms],
                jitter_scale=phys.distractor_jitter_factor
                if phase.name == "distractor"
                else 1.0,
            )
        x = min(max(x + offsets[i, 0], 0.0), w - 1.0)
        y = min(max(y + offsets[i, 1], 0.0), h - 1.0)
        d = float(
            np.clip(
                rng.normal(phase_d_center[phase.start_ms], phys.distance_noise_mm),
                250.0,
                1500.0,
            )
        )
        samples.append(GazeSample(t, float(x), float(y), d, True))
    return script, GazeTrack(tuple(samples), GAZE_RATE_HZ), offsets


# --- scene construction and corpus generation ---------------------------------


def make_scene(
    target_category: int,
    rng: np.random.Generator,
    frame_dims: tuple[int, int] = (320, 180),
    n_objects: int = 4,
) -> tuple[SceneSpec, int]:
    """Random line-up of ``n_objects`` distinct categories including the
    target; returns the spec and the target's index in the line-up."""
    w, h = frame_dims
    others = [c for c in range(1, len(CATEGORY_NAMES)) if c != target_category]
    cats = [target_category] + list(rng.choice(others, size=n_objects - 1, replace=False))
    rng.shuffle(cats)
    target_index = cats.index(target_category)

    slots = np.linspace(0.14, 0.86, n_objects) * w
    line_y = 0.58 * h
    objects = []
    for i, cat in enumerate(cats):
        size = int(rng.uniform(0.18, 0.28) * h)
        cx = int(slots[i] + rng.uniform(-0.015, 0.015) * w)
        cy = int(line_y + rng.uniform(-0.03, 0.03) * h)
        base = _BASE_COLORS[int(cat)]
        color = tuple(int(np.clip(c + rng.integers(-18, 19), 0, 255)) for c in base)
        objects.append(
            SceneObject(
                category=int(cat),
                color=color,
                size=size,
                center=(cx, cy),
                flipped=bool(rng.random() < 0.25),
            )
        )
    spec = SceneSpec(frame_dims=frame_dims, objects=tuple(objects))
    validate_scene(spec)
    return spec, target_index


TRUTH_HEADER = ["frame", "x0", "y0", "x1", "y1", "label", "phase"]


@dataclass
class RecordingPaths:
    root: Path
    video_id: str

    @property
    def video_dir(self) -> Path:
        return self.root / "videos" / self.video_id

    @property
    def frames_dir(self) -> Path:
        return self.video_dir / "frames"

    def frame_path(self, index: int) -> Path:
        return self.frames_dir / f"{index:06d}.png"

    @property
    def gaze_csv(self) -> Path:
        return self.video_dir / "gaze.csv"

    @property
    def truth_csv(self) -> Path:
        return self.video_dir / "truth.csv"

    @property
    def meta_txt(self) -> Path:
        return self.video_dir / "meta.txt"


def write_recording(
    root: Path,
    video_id: str,
    spec: SceneSpec,
    target_index: int,
    seed: int | np.random.Generator,
    phys: GazePhysiology = GazePhysiology(),
) -> RecordingPaths:
    """Render one full recording to disk: frames, gaze, truth, meta."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    paths = RecordingPaths(Path(root), video_id)
    paths.frames_dir.mkdir(parents=True, exist_ok=True)

    script, track, offsets = simulate_gaze(spec, target_index, rng, phys)
    write_gaze_file(paths.gaze_csv, track)

    target = spec.objects[target_index]
    n_frames = int(script.total_ms // FRAME_PERIOD_MS)
    w, h = spec.frame_dims
    with open(paths.truth_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_HEADER)
        for i in range(n_frames):
            t = i * FRAME_PERIOD_MS
            sample_idx = min(len(offsets) - 1, i * 2)
            off = offsets[sample_idx]
            frame = render_scene(spec, rng, offset=(off[0], off[1]))
            write_rgb(paths.frame_path(i), frame)
            box = target.box
            shifted = BoundingBox(
                int(round(box.x0 + off[0])),
                int(round(box.y0 + off[1])),
                int(round(box.x1 + off[0])),
                int(round(box.y1 + off[1])),
            ).clamped(w, h)
            writer.writerow(
                [i, shifted.x0, shifted.y0, shifted.x1, shifted.y1,
                 target.category, script.phase_at(t).name]
            )
    meta = {
        "width": w,
        "height": h,
        "fps": FRAME_RATE_HZ,
        "gaze_rate": GAZE_RATE_HZ,
        "n_frames": n_frames,
        "target_category": target.category,
    }
    with open(paths.meta_txt, "w") as fh:
        for key, value in meta.items():
            fh.write(f"{key} = {value}\n")
    return paths


def split_counts(n: int) -> tuple[int, int, int]:
    """60/20/20 split of n videos; a lone video goes to train."""
    n_train = max(1, round(0.6 * n)) if n else 0
    n_val = round(0.2 * n)
    if n_train + n_val > n:
        n_val = n - n_train
    n_test = n - n_train - n_val
    return n_train, n_val, n_test


def generate_corpus(
    n_videos: int,
    out_dir,
    seed: int = 0,
    classes=None,
    frame_dims: tuple[int, int] = (320, 180),
    phys: GazePhysiology = GazePhysiology(),
) -> Path:
    """Balanced corpus of recordings with a 60/20/20 split manifest.

    ``classes`` restricts the target categories (default: all 8); videos
    are distributed round-robin so classes stay balanced.
    """
    if n_videos < 1:
        raise ValueError("need at least one video")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    classes = list(classes) if classes else list(range(1, len(CATEGORY_NAMES)))

    targets = [classes[i % len(classes)] for i in range(n_videos)]
    seeds = np.random.SeedSequence(seed).spawn(n_videos)

    by_class: dict[int, list[str]] = {c: [] for c in classes}
    for i, (cat, child) in enumerate(zip(targets, seeds)):
        rng = np.random.default_rng(child)
        video_id = f"v{i:04d}"
        spec, target_index = make_scene(cat, rng, frame_dims)
        write_recording(root, video_id, spec, target_index, rng, phys)
        by_class[cat].append(video_id)

    rows = []
    for cat in classes:
        vids = by_class[cat]
        n_train, n_val, _ = split_counts(len(vids))
        for j, vid in enumerate(vids):
            split = "train" if j < n_train else ("val" if j < n_train + n_val else "test")
            rows.append((vid, split))
    rows.sort()
    with open(root / "split.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "split"])
        writer.writerows(rows)
    return root
