"""Gaze-contingent saliency maps and proposal box extraction.

The map is a Gaussian centered on the measured fixation point whose
spread adapts to the viewing distance: a close object covers more of
the field of view, so its foveal projection is wider in pixels. With a
fovea projection angle ``alpha``, a camera half-width opening ``beta``
and a maximum working distance ``A``,

    sigma(d) = (A / d) * width * tan(alpha * pi / 180)
                       / (2 * tan(beta * pi / 180))

and the map value at pixel (x, y) for fixation (xf, yf) is

    exp((-(x - xf)^2 - (y - yf)^2) / (2 * sigma^2 + eps))

normalized so that its maximum over the pixel grid is exactly 1.
Thresholding the map yields an approximate segmentation mask; the
8-connected component containing the fixation gives the proposal box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage


class SaliencyError(Exception):
    pass


class NonPositiveDistance(SaliencyError):
    pass


class FixationOutOfBounds(SaliencyError):
    pass


class TauOutOfRange(SaliencyError):
    pass


class EmptyMaskAtFixation(SaliencyError):
    pass


@dataclass(frozen=True)
class WoodingParams:
    alpha_deg: float = 2.0  # fovea projection angle
    beta_deg: float = 24.0  # camera half-width opening angle
    A_mm: float = 1600.0  # maximum object distance
    epsilon: float = 0.01

    def __post_init__(self):
        if min(self.alpha_deg, self.beta_deg, self.A_mm, self.epsilon) <= 0:
            raise ValueError("all parameters must be strictly positive")
        if self.alpha_deg >= self.beta_deg:
            raise ValueError("alpha must be smaller than beta")


@dataclass(frozen=True)
class BoundingBox:
    """Half-open pixel box [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def intersection_area(self, other: "BoundingBox") -> int:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(0, w) * max(0, h)

    def clamped(self, width: int, height: int) -> "BoundingBox":
        return BoundingBox(
            max(0, self.x0), max(0, self.y0), min(width, self.x1), min(height, self.y1)
        )


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray  # (H, W) float in [0, 1]
    fixation: tuple[float, float]  # (x, y) px
    sigma: float  # px

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def sigma_of_distance(params: WoodingParams, image_width: int, d: float) -> float:
    """Gaussian spread in pixels for viewing distance ``d`` (mm).

    Inversely proportional to d: sigma(d) * d is constant for a fixed
    image width.
    """
    if d <= 0:
        raise NonPositiveDistance(f"distance must be positive, got {d}")
    alpha = math.radians(params.alpha_deg)
    beta = math.radians(params.beta_deg)
    return (params.A_mm / d) * (image_width * math.tan(alpha)) / (2.0 * math.tan(beta))


#: beyond this many sigmas the map value is below e^-8 and is cut to zero
TRUNCATION_RADIUS_SIGMAS = 4.0


def wooding_map(
    frame_dims: tuple[int, int],
    fixation,
    params: WoodingParams = WoodingParams(),
    truncate: bool = True,
    normalization: str = "peak",
) -> SaliencyMap:
    """Saliency map for one frame and one fixation.

    ``fixation`` needs ``x``, ``y`` and ``d`` attributes (a
    ``SyncedFixation`` works, as does any namespace-like object).
    ``normalization="peak"`` divides by the grid maximum so the peak is
    exactly 1 (required by threshold semantics); ``"sum"`` divides by
    the total mass instead. ``truncate`` zeroes values beyond
    4 sigma from the fixation, which keeps full-HD maps cheap.
    """
    w, h = frame_dims
    xf, yf, d = float(fixation.x), float(fixation.y), float(fixation.d)
    if not (0 <= xf < w and 0 <= yf < h):
        raise FixationOutOfBounds(f"fixation ({xf}, {yf}) outside {w}x{h} frame")
    sigma = sigma_of_distance(params, w, d)

    values = np.zeros((h, w), dtype=np.float64)
    if truncate:
        r = TRUNCATION_RADIUS_SIGMAS * sigma
        x0, x1 = max(0, int(xf - r)), min(w, int(xf + r) + 2)
        y0, y1 = max(0, int(yf - r)), min(h, int(yf + r) + 2)
    else:
        x0, y0, x1, y1 = 0, 0, w, h
    ys = np.arange(y0, y1, dtype=np.float64)[:, None]
    xs = np.arange(x0, x1, dtype=np.float64)[None, :]
    r2 = (xs - xf) ** 2 + (ys - yf) ** 2
    window = np.exp(-r2 / (2.0 * sigma**2 + params.epsilon))
    if truncate:
        window[r2 > (TRUNCATION_RADIUS_SIGMAS * sigma) ** 2] = 0.0
    values[y0:y1, x0:x1] = window

    if normalization == "peak":
        values /= values.max()
    elif normalization == "sum":
        values /= values.sum()
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return SaliencyMap(values=values, fixation=(xf, yf), sigma=sigma)


def threshold_mask(smap: SaliencyMap, tau: float) -> np.ndarray:
    """Binary mask of pixels with saliency >= tau, tau in (0, 1)."""
    if not (0.0 < tau < 1.0):
        raise TauOutOfRange(f"tau must be in (0, 1), got {tau}")
    return smap.values >= tau


_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def peak_component_bbox(mask: np.ndarray, fixation: tuple[float, float]) -> BoundingBox:
    """Tight box around the 8-connected mask component at the fixation."""
    h, w = mask.shape
    fx = min(max(int(round(fixation[0])), 0), w - 1)
    fy = min(max(int(round(fixation[1])), 0), h - 1)
    if not mask[fy, fx]:
        raise EmptyMaskAtFixation(f"mask is empty at fixation ({fx}, {fy})")
    labels, _ = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    component = labels == labels[fy, fx]
    ys, xs = np.nonzero(component)
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


# --- debug / overlay renderings ---------------------------------------------


def to_grayscale_u8(smap: SaliencyMap) -> np.ndarray:
    """Map as an 8-bit grayscale image, peak at 255."""
    return np.clip(smap.values * 255.0, 0, 255).astype(np.uint8)


def heatmap_overlay(frame: np.ndarray, smap: SaliencyMap, alpha: float = 0.5) -> np.ndarray:
    """Blend a jet-colored rendering of the map onto the frame."""
    heat = cv2.applyColorMap(to_grayscale_u8(smap), cv2.COLORMAP_JET)
    heat = cv2.cvtColor(heat, cv2.COLOR_BGR2RGB)
    return cv2.addWeighted(frame, 1.0 - alpha, heat, alpha, 0.0)


def weighted_overlay(frame: np.ndarray, smap: SaliencyMap) -> np.ndarray:
    """Use the map to weight frame brightness (dark outside the focus)."""
    return (frame.astype(np.float64) * smap.values[:, :, None]).astype(np.uint8)


def mask_overlay(
    frame: np.ndarray, smap: SaliencyMap, tau: float, color=(0, 255, 0)
) -> np.ndarray:
    """Draw the tau-level mask outline onto the frame."""
    mask = threshold_mask(smap, tau).astype(np.uint8)
    contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    out = frame.copy()
    cv2.drawContours(out, contours, -1, color, 1)
    return out
