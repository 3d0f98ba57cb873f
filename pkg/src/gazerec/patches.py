"""Object / background patch extraction and the rotation-blur augmentation.

Object patches are crops of the saliency-selected proposal box, resized
square to the network input resolution. Background patches are sampled
outside a full-width exclusion band covering the object line-up row, so
that an unlabeled object never leaks into the rejection class. Training
patches are expanded 16x: rotations {0, 90, 180, 270} crossed with
Gaussian blur kernels {1, 3, 5, 7} (the identity pair reproduces the
input exactly).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace
from pathlib import Path

import cv2
import numpy as np

from .imgio import read_rgb, write_rgb
from .saliency import BoundingBox

ROTATIONS = (0, 90, 180, 270)
BLUR_KERNELS = (1, 3, 5, 7)


class PatchError(Exception):
    pass


class BoxOutOfBounds(PatchError):
    pass


class NoFreeSpace(PatchError):
    pass


class AlreadyAugmented(PatchError):
    pass


@dataclass(frozen=True)
class Patch:
    pixels: np.ndarray  # (H, W, 3) uint8
    box: BoundingBox  # source frame coordinates
    label: int  # 0 = background
    source: tuple[str, int]  # (video id, frame index)
    augmentation: tuple[int, int] = (0, 1)  # (rotation deg, blur kernel)

    @property
    def is_original(self) -> bool:
        return self.augmentation == (0, 1)


@dataclass(frozen=True)
class ExclusionZone:
    """Full-width horizontal band barred from background sampling."""

    band: BoundingBox

    def intersects(self, box: BoundingBox) -> bool:
        return self.band.intersection_area(box) > 0


def extract_object_patch(
    frame: np.ndarray,
    box: BoundingBox,
    out_size: int,
    label: int = 0,
    source: tuple[str, int] = ("", -1),
) -> Patch:
    """Crop ``box`` and resize square to ``out_size`` (bilinear).

    Aspect ratio is not preserved; the network input is square.
    """
    h, w = frame.shape[:2]
    if box.x0 < 0 or box.y0 < 0 or box.x1 > w or box.y1 > h:
        raise BoxOutOfBounds(f"{box} outside {w}x{h} frame")
    crop = frame[box.y0 : box.y1, box.x0 : box.x1]
    if crop.shape[0] == out_size and crop.shape[1] == out_size:
        pixels = crop.copy()
    else:
        pixels = cv2.resize(crop, (out_size, out_size), interpolation=cv2.INTER_LINEAR)
    return Patch(pixels=pixels, box=box, label=label, source=source)


def make_exclusion_zone(
    object_box: BoundingBox, frame_dims: tuple[int, int], margin_factor: float = 0.25
) -> ExclusionZone:
    """Band spanning the frame width around the object line-up row.

    The vertical extent is the object box grown by margin_factor times
    its height on each side, clamped to the frame.
    """
    w, h = frame_dims
    margin = margin_factor * object_box.height
    y0 = max(0, int(round(object_box.y0 - margin)))
    y1 = min(h, int(round(object_box.y1 + margin)))
    return ExclusionZone(band=BoundingBox(0, y0, w, y1))


def overlap_ratio(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over the smaller box area.

    Stricter than IoU; two candidates covering the same small region
    are rejected even when one of them is large.
    """
    inter = a.intersection_area(b)
    return inter / min(a.area, b.area)


def sample_background(
    frame: np.ndarray,
    zone: ExclusionZone,
    count: int,
    min_size: int = 95,
    max_overlap: float = 0.20,
    seed: int | np.random.Generator = 0,
    out_size: int | None = None,
    source: tuple[str, int] = ("", -1),
    max_attempts_per_box: int = 200,
) -> list[Patch]:
    """Sample up to ``count`` square background boxes outside the zone.

    Boxes are uniform in position and side length, at least
    ``min_size`` px, pairwise overlap ratio at most ``max_overlap``.
    Sampling is deterministic for a given seed and gives up after a
    bounded number of rejections, returning what it has.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    h, w = frame.shape[:2]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    # free strips above and below the band
    strips = []
    if zone.band.y0 >= min_size:
        strips.append((0, zone.band.y0))
    if h - zone.band.y1 >= min_size:
        strips.append((zone.band.y1, h))
    if not strips or w < min_size:
        raise NoFreeSpace("no strip outside the exclusion zone fits the minimum size")

    accepted: list[BoundingBox] = []
    attempts = 0
    budget = max_attempts_per_box * count
    while len(accepted) < count and attempts < budget:
        attempts += 1
        sy0, sy1 = strips[rng.integers(len(strips))]
        max_side = min(w, sy1 - sy0)
        side = int(rng.integers(min_size, max_side + 1))
        x0 = int(rng.integers(0, w - side + 1))
        y0 = int(rng.integers(sy0, sy1 - side + 1))
        box = BoundingBox(x0, y0, x0 + side, y0 + side)
        if zone.intersects(box):
            continue
        if any(overlap_ratio(box, other) > max_overlap for other in accepted):
            continue
        accepted.append(box)

    out = []
    for box in accepted:
        size = out_size if out_size is not None else box.width
        out.append(extract_object_patch(frame, box, size, label=0, source=source))
    return out


def _rotate_cw(pixels: np.ndarray, degrees: int) -> np.ndarray:
    """Lossless clockwise rotation by a multiple of 90 degrees."""
    return np.ascontiguousarray(np.rot90(pixels, k=-(degrees // 90)))


def _blur(pixels: np.ndarray, kernel: int) -> np.ndarray:
    if kernel == 1:
        return pixels.copy()
    # sigma 0 lets OpenCV derive it from the kernel size
    # (0.3 * ((k - 1) / 2 - 1) + 0.8), reflective borders keep the mean
    return cv2.GaussianBlur(pixels, (kernel, kernel), 0, borderType=cv2.BORDER_REFLECT)


def augment(patch: Patch) -> list[Patch]:
    """All 16 rotation x blur variants of an original patch.

    The (0 deg, 1x1) pair is the input itself, bit for bit. Labels and
    provenance are preserved.
    """
    if not patch.is_original:
        raise AlreadyAugmented(f"patch already carries augmentation {patch.augmentation}")
    out = []
    for rot in ROTATIONS:
        rotated = _rotate_cw(patch.pixels, rot) if rot else patch.pixels
        for k in BLUR_KERNELS:
            if rot == 0 and k == 1:
                pixels = patch.pixels.copy()
            else:
                pixels = _blur(rotated, k)
            out.append(replace(patch, pixels=pixels, augmentation=(rot, k)))
    return out


# --- manifest serialization --------------------------------------------------

MANIFEST_HEADER = [
    "patch_file",
    "label",
    "video_id",
    "frame",
    "box_x0",
    "box_y0",
    "box_x1",
    "box_y1",
    "rotation",
    "blur_k",
]


def write_patch_dataset(
    patches: list[Patch], image_dir: str | os.PathLike, manifest_path: str | os.PathLike
) -> None:
    """Write patch images plus the manifest CSV describing them."""
    image_dir = Path(image_dir)
    image_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for i, p in enumerate(patches):
            vid, frame = p.source
            name = f"{vid or 'x'}_f{frame:06d}_l{p.label}_r{p.augmentation[0]}_k{p.augmentation[1]}_{i:06d}.png"
            write_rgb(image_dir / name, p.pixels)
            writer.writerow(
                [
                    os.path.relpath(image_dir / name, manifest_path.parent),
                    p.label,
                    vid,
                    frame,
                    p.box.x0,
                    p.box.y0,
                    p.box.x1,
                    p.box.y1,
                    p.augmentation[0],
                    p.augmentation[1],
                ]
            )


def load_patch_dataset(manifest_path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Load all patches of a manifest as (N, H, W, 3) uint8 plus labels."""
    manifest_path = Path(manifest_path)
    images, labels = [], []
    with open(manifest_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            images.append(read_rgb(manifest_path.parent / row["patch_file"]))
            labels.append(int(row["label"]))
    if not images:
        raise PatchError(f"manifest {manifest_path} lists no patches")
    return np.stack(images), np.array(labels, dtype=np.int64)
