"""Append-only annotation persistence.

One JSON record per line in ``<root>/annotations.jsonl``; the current
annotation of a video is its last record, earlier lines are the
history. Appends are atomic enough for a single service process (one
writer, serialized by a lock) and the file stays human-diffable.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path


class ValidationFailed(Exception):
    pass


@dataclass(frozen=True)
class VideoAnnotation:
    video_id: str
    start_frame: int  # first frame after scene exploration
    tau: float  # saliency threshold in (0, 1)
    category: int
    note: str = ""
    created: float = 0.0  # unix seconds, stamped on save

    def validate(self, n_frames: int | None = None, n_classes: int | None = None) -> None:
        if not (0.0 < self.tau < 1.0):
            raise ValidationFailed(f"tau must be in (0, 1), got {self.tau}")
        if self.start_frame < 0:
            raise ValidationFailed(f"negative start_frame {self.start_frame}")
        if n_frames is not None and self.start_frame >= n_frames:
            raise ValidationFailed(
                f"start_frame {self.start_frame} outside video of {n_frames} frames"
            )
        if self.category < 0 or (n_classes is not None and self.category >= n_classes):
            raise ValidationFailed(f"unknown category {self.category}")
        if not self.video_id:
            raise ValidationFailed("missing video_id")


class AnnotationStore:
    def __init__(self, root):
        self.path = Path(root) / "annotations.jsonl"
        self._lock = threading.Lock()

    def save(self, ann: VideoAnnotation) -> VideoAnnotation:
        """Validate, stamp and append; returns the stored record."""
        ann.validate()
        stored = VideoAnnotation(
            video_id=ann.video_id,
            start_frame=int(ann.start_frame),
            tau=float(ann.tau),
            category=int(ann.category),
            note=ann.note,
            created=ann.created or time.time(),
        )
        line = json.dumps(asdict(stored), sort_keys=True)
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")
        return stored

    def _records(self) -> list[VideoAnnotation]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(VideoAnnotation(**json.loads(line)))
        return out

    def history(self, video_id: str) -> list[VideoAnnotation]:
        return [a for a in self._records() if a.video_id == video_id]

    def current(self) -> dict[str, VideoAnnotation]:
        """Latest annotation per video."""
        out: dict[str, VideoAnnotation] = {}
        for ann in self._records():
            out[ann.video_id] = ann
        return out

    def get(self, video_id: str) -> VideoAnnotation | None:
        return self.current().get(video_id)
