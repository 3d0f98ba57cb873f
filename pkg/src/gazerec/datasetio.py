"""Reading the on-disk dataset layout.

Root layout::

    <root>/split.csv                      video_id,split
    <root>/videos/<id>/frames/%06d.png
    <root>/videos/<id>/gaze.csv           t_ms,x_px,y_px,d_mm,valid
    <root>/videos/<id>/truth.csv          frame,x0,y0,x1,y1,label,phase
    <root>/videos/<id>/meta.txt           key = value
    <root>/annotations.jsonl              appended by the annotation store
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .gaze import FrameClock, GazeTrack, SyncedFixation, interpolate_track, parse_gaze_file
from .saliency import BoundingBox


class DatasetRootMissing(Exception):
    pass


@dataclass(frozen=True)
class VideoMeta:
    width: int
    height: int
    fps: float
    gaze_rate: float
    n_frames: int
    target_category: int


@dataclass(frozen=True)
class TruthRow:
    frame: int
    box: BoundingBox
    label: int
    phase: str


def video_dir(root, video_id: str) -> Path:
    return Path(root) / "videos" / video_id


def frame_path(root, video_id: str, index: int) -> Path:
    return video_dir(root, video_id) / "frames" / f"{index:06d}.png"


def read_meta(root, video_id: str) -> VideoMeta:
    values = {}
    with open(video_dir(root, video_id) / "meta.txt") as fh:
        for line in fh:
            if "=" in line:
                key, val = (p.strip() for p in line.split("=", 1))
                values[key] = val
    return VideoMeta(
        width=int(values["width"]),
        height=int(values["height"]),
        fps=float(values["fps"]),
        gaze_rate=float(values["gaze_rate"]),
        n_frames=int(float(values["n_frames"])),
        target_category=int(values.get("target_category", -1)),
    )


def read_truth(root, video_id: str) -> list[TruthRow]:
    rows = []
    with open(video_dir(root, video_id) / "truth.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                TruthRow(
                    frame=int(row["frame"]),
                    box=BoundingBox(int(row["x0"]), int(row["y0"]), int(row["x1"]), int(row["y1"])),
                    label=int(row["label"]),
                    phase=row["phase"],
                )
            )
    return rows


def read_split(root) -> dict[str, str]:
    path = Path(root) / "split.csv"
    if not path.exists():
        raise DatasetRootMissing(f"no split manifest at {path}")
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["video_id"]] = row["split"]
    return out


def list_videos(root) -> list[str]:
    return sorted(read_split(root))


def load_gaze(root, video_id: str) -> GazeTrack:
    meta = read_meta(root, video_id)
    return parse_gaze_file(video_dir(root, video_id) / "gaze.csv", nominal_rate=meta.gaze_rate)


def synced_fixations(root, video_id: str) -> dict[int, SyncedFixation]:
    """Gaze resampled at this video's frame clock, keyed by frame index."""
    meta = read_meta(root, video_id)
    track = load_gaze(root, video_id)
    clock = FrameClock.regular(meta.n_frames, meta.fps)
    fixes = interpolate_track(track, clock, frame_dims=(meta.width, meta.height))
    return {f.frame_index: f for f in fixes}
