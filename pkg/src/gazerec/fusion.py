"""Temporal fusion of per-frame classification scores.

A video gets one category by summing the per-frame class scores and
taking the argmax. An incorrectly classified frame usually carries a
much weaker winning score than a correctly classified one, so the sum
recovers the right category even when well under half of the frames
vote for it. Majority voting over per-frame argmaxes is kept as the
comparison baseline, and a trailing-window variant supports online use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EmptySequence(Exception):
    pass


class WindowTooSmall(Exception):
    pass


@dataclass(frozen=True)
class ScoreSequence:
    video_id: str
    entries: tuple[tuple[int, np.ndarray], ...]  # (frame index, class scores)

    def __post_init__(self):
        frames = [f for f, _ in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("frame indices must be strictly increasing")

    @classmethod
    def from_arrays(cls, video_id: str, frames, scores) -> "ScoreSequence":
        return cls(video_id, tuple((int(f), np.asarray(s, dtype=float)) for f, s in zip(frames, scores)))


@dataclass(frozen=True)
class FusedDecision:
    category: int
    tie: bool
    scores: np.ndarray = field(repr=False)  # summed (mean fusion) or counts (majority)


def fuse_mean(seq: ScoreSequence) -> FusedDecision:
    """Sum scores per class over the sequence; argmax wins.

    Ties break toward the lowest category id and are flagged.
    """
    if not seq.entries:
        raise EmptySequence(seq.video_id)
    total = np.sum([s for _, s in seq.entries], axis=0)
    best = int(np.argmax(total))
    tie = bool(np.sum(total == total[best]) > 1)
    return FusedDecision(category=best, tie=tie, scores=total)


def fuse_majority(seq: ScoreSequence) -> FusedDecision:
    """Most frequent per-frame argmax; ties toward the lowest id."""
    if not seq.entries:
        raise EmptySequence(seq.video_id)
    n_classes = len(seq.entries[0][1])
    counts = np.zeros(n_classes)
    for _, s in seq.entries:
        counts[int(np.argmax(s))] += 1
    best = int(np.argmax(counts))
    tie = bool(np.sum(counts == counts[best]) > 1)
    return FusedDecision(category=best, tie=tie, scores=counts)


def fuse_windowed(seq: ScoreSequence, window: int) -> list[tuple[int, int]]:
    """Mean fusion over the trailing ``window`` entries at every frame.

    The window is truncated at the start of the sequence; with
    window == len(seq) the last decision equals ``fuse_mean``.
    """
    if window < 1:
        raise WindowTooSmall(f"window must be >= 1, got {window}")
    if not seq.entries:
        raise EmptySequence(seq.video_id)
    out = []
    for i, (frame, _) in enumerate(seq.entries):
        lo = max(0, i + 1 - window)
        sub = ScoreSequence(seq.video_id, seq.entries[lo : i + 1])
        out.append((frame, fuse_mean(sub).category))
    return out
