"""Gaze stream ingestion and gaze/frame synchronization.

A head-mounted eye tracker samples gaze at a higher rate than the scene
camera records frames (50 Hz vs 25 Hz here), with gaps during blinks.
This module parses the raw gaze CSV, keeps blink gaps explicit, and
resamples gaze onto frame timestamps with a natural cubic spline fitted
per coordinate.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

#: a raw sample counts as coinciding with a frame when |dt| is below this
ALIGN_EPS_MS = 1.0

#: gaps longer than this are considered unreliable (distractor fixations
#: and blinks stay under half a second)
MAX_RELIABLE_GAP_MS = 500.0


class GazeError(Exception):
    """Base class for gaze stream errors."""


class MalformedRow(GazeError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class NonMonotonicTime(GazeError):
    pass


class EmptyFile(GazeError):
    pass


class InsufficientSamples(GazeError):
    pass


@dataclass(frozen=True)
class GazeSample:
    """One eye-tracker sample; x/y/d are NaN while the eyes are closed."""

    t: float  # ms since stream start
    x: float  # px, image plane
    y: float  # px
    d: float  # mm along the gaze axis
    valid: bool


@dataclass(frozen=True)
class GazeTrack:
    samples: tuple[GazeSample, ...]
    nominal_rate: float  # Hz

    @property
    def valid_samples(self) -> tuple[GazeSample, ...]:
        return tuple(s for s in self.samples if s.valid)

    def valid_span(self) -> tuple[float, float]:
        valid = self.valid_samples
        if not valid:
            raise InsufficientSamples("track has no valid samples")
        return valid[0].t, valid[-1].t


@dataclass(frozen=True)
class FrameClock:
    frame_times: tuple[float, ...]  # ms
    rate: float  # Hz

    def __post_init__(self):
        times = np.asarray(self.frame_times, dtype=float)
        if times.size > 1:
            diffs = np.diff(times)
            if np.any(diffs <= 0):
                raise ValueError("frame times must be strictly increasing")
            nominal = 1000.0 / self.rate
            if np.any(np.abs(diffs - nominal) > nominal):
                raise ValueError("frame spacing deviates more than one period")

    @classmethod
    def regular(cls, n_frames: int, rate: float = 25.0) -> "FrameClock":
        period = 1000.0 / rate
        return cls(tuple(i * period for i in range(n_frames)), rate)


@dataclass(frozen=True)
class SyncedFixation:
    """Gaze resampled at one frame timestamp.

    ``interpolated`` marks frames with no raw sample within half a gaze
    period; ``low_confidence`` marks frames inside a validity gap longer
    than ``MAX_RELIABLE_GAP_MS`` (downstream stages may skip those).
    """

    frame_index: int
    x: float
    y: float
    d: float
    interpolated: bool
    low_confidence: bool = False


GAZE_CSV_HEADER = ["t_ms", "x_px", "y_px", "d_mm", "valid"]


def parse_gaze_file(path: str | os.PathLike, nominal_rate: float = 50.0) -> GazeTrack:
    """Parse a gaze CSV (``t_ms,x_px,y_px,d_mm,valid``) into a track.

    Rows with valid=0 have empty coordinate fields and are retained as
    gap markers. Timestamps must be strictly increasing.
    """
    samples: list[GazeSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        if [h.strip() for h in header] != GAZE_CSV_HEADER:
            raise MalformedRow(1, f"bad header {header!r}")
        prev_t = -math.inf
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(line_no, f"expected 5 fields, got {len(row)}")
            try:
                t = float(row[0])
                valid = bool(int(row[4]))
            except ValueError as e:
                raise MalformedRow(line_no, str(e)) from None
            if t <= prev_t:
                raise NonMonotonicTime(f"line {line_no}: t={t} after t={prev_t}")
            prev_t = t
            if valid:
                try:
                    x, y, d = float(row[1]), float(row[2]), float(row[3])
                except ValueError as e:
                    raise MalformedRow(line_no, str(e)) from None
                if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(d)):
                    raise MalformedRow(line_no, "non-finite coordinates on valid row")
                if d <= 0:
                    raise MalformedRow(line_no, f"non-positive distance {d}")
            else:
                x = y = d = math.nan
            samples.append(GazeSample(t, x, y, d, valid))
    if not samples:
        raise EmptyFile(f"{path} has a header but no rows")
    return GazeTrack(tuple(samples), nominal_rate)


def write_gaze_file(path: str | os.PathLike, track: GazeTrack) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GAZE_CSV_HEADER)
        for s in track.samples:
            if s.valid:
                writer.writerow([f"{s.t:g}", f"{s.x:g}", f"{s.y:g}", f"{s.d:g}", 1])
            else:
                writer.writerow([f"{s.t:g}", "", "", "", 0])


def interpolate_track(
    track: GazeTrack,
    clock: FrameClock,
    frame_dims: tuple[int, int] | None = None,
) -> list[SyncedFixation]:
    """Resample gaze at frame timestamps via natural cubic splines.

    One spline per coordinate (x, y, d) is fitted over the valid samples;
    frames outside [first_valid_t, last_valid_t] are dropped because the
    spline is unreliable beyond its knots. With ``frame_dims=(W, H)`` the
    output coordinates are clamped to image bounds, which matters near
    gap boundaries where the spline can overshoot.
    """
    valid = track.valid_samples
    if len(valid) < 4:
        raise InsufficientSamples(
            f"need at least 4 valid samples for cubic interpolation, got {len(valid)}"
        )
    if not clock.frame_times:
        raise ValueError("frame clock is empty")

    t = np.array([s.t for s in valid])
    sx = CubicSpline(t, np.array([s.x for s in valid]), bc_type="natural")
    sy = CubicSpline(t, np.array([s.y for s in valid]), bc_type="natural")
    sd = CubicSpline(t, np.array([s.d for s in valid]), bc_type="natural")

    half_period_ms = 500.0 / track.nominal_rate
    # validity gaps: (start_t, end_t) between consecutive valid samples
    gaps = [
        (t[i], t[i + 1])
        for i in range(len(t) - 1)
        if t[i + 1] - t[i] > MAX_RELIABLE_GAP_MS
    ]

    out: list[SyncedFixation] = []
    for idx, ft in enumerate(clock.frame_times):
        if ft < t[0] or ft > t[-1]:
            continue
        nearest = np.min(np.abs(t - ft))
        x, y, d = float(sx(ft)), float(sy(ft)), float(sd(ft))
        d = max(d, 1.0)  # spline overshoot must not break the d > 0 invariant
        if frame_dims is not None:
            w, h = frame_dims
            x = min(max(x, 0.0), w - 1.0)
            y = min(max(y, 0.0), h - 1.0)
        low_conf = any(g0 < ft < g1 for g0, g1 in gaps)
        out.append(
            SyncedFixation(
                frame_index=idx,
                x=x,
                y=y,
                d=d,
                interpolated=bool(nearest >= half_period_ms),
                low_confidence=low_conf,
            )
        )
    return out
