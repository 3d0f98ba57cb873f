"""Local HTTP service behind the annotation tool.

Endpoints (JSON unless noted):

    GET  /videos                          -> [{video_id, frame_count, annotated, ...}]
    GET  /categories                      -> [{id, name}]
    GET  /videos/{id}/frames/{n}          -> PNG; query: overlay=none|gray|heatmap|mask|weighted,
                                             tau=0.5; bbox echoed in X-Bbox header
    GET  /videos/{id}/frames/{n}/bbox     -> {x0, y0, x1, y1, area} for the tau level
    GET  /videos/{id}/gaze                -> synchronized fixations per frame
    GET  /videos/{id}/annotation          -> current annotation (404 when none)
    POST /videos/{id}/annotation          -> persist; body {start_frame, tau, category, note?}

Saliency overlays are recomputed per request so a threshold change is
visible immediately; everything is derived from measured gaze, never
from ground truth.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .. import CATEGORY_NAMES, NUM_CLASSES
from ..datasetio import DatasetRootMissing, frame_path, read_meta, read_split, synced_fixations
from ..gaze import SyncedFixation
from ..imgio import encode_png_rgb, read_rgb
from ..saliency import (
    WoodingParams,
    heatmap_overlay,
    mask_overlay,
    peak_component_bbox,
    threshold_mask,
    to_grayscale_u8,
    weighted_overlay,
    wooding_map,
)
from .store import AnnotationStore, ValidationFailed, VideoAnnotation

OVERLAY_MODES = ("none", "gray", "heatmap", "mask", "weighted")


class AnnotationBody(BaseModel):
    start_frame: int
    tau: float
    category: int
    note: str = ""


class _VideoCache:
    """Per-video synchronized fixations, computed once."""

    def __init__(self, root: Path):
        self.root = root
        self._fixations: dict[str, dict[int, SyncedFixation]] = {}

    def fixations(self, video_id: str) -> dict[int, SyncedFixation]:
        if video_id not in self._fixations:
            self._fixations[video_id] = synced_fixations(self.root, video_id)
        return self._fixations[video_id]


def build_app(
    dataset_root,
    params: WoodingParams = WoodingParams(),
    frontend_dir=None,
) -> FastAPI:
    root = Path(dataset_root)
    app = FastAPI(title="gazerec annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = AnnotationStore(root)
    cache = _VideoCache(root)

    def split() -> dict[str, str]:
        try:
            return read_split(root)
        except DatasetRootMissing as e:
            raise HTTPException(status_code=404, detail=str(e)) from None

    def fixation_for(video_id: str, frame: int, meta) -> SyncedFixation:
        if frame < 0 or frame >= meta.n_frames:
            raise HTTPException(status_code=404, detail=f"frame {frame} out of range")
        fix = cache.fixations(video_id).get(frame)
        if fix is None or fix.low_confidence:
            raise HTTPException(status_code=409, detail=f"no gaze for frame {frame}")
        return fix

    @app.get("/videos")
    def list_videos():
        current = store.current()
        out = []
        for video_id, part in sorted(split().items()):
            meta = read_meta(root, video_id)
            out.append(
                {
                    "video_id": video_id,
                    "frame_count": meta.n_frames,
                    "width": meta.width,
                    "height": meta.height,
                    "fps": meta.fps,
                    "split": part,
                    "annotated": video_id in current,
                }
            )
        return out

    @app.get("/categories")
    def categories():
        return [{"id": i, "name": name} for i, name in enumerate(CATEGORY_NAMES)]

    @app.get("/videos/{video_id}/gaze")
    def gaze(video_id: str):
        if video_id not in split():
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        fixes = cache.fixations(video_id)
        return {
            "video_id": video_id,
            "fixations": [
                {
                    "frame": f.frame_index,
                    "x": f.x,
                    "y": f.y,
                    "d": f.d,
                    "interpolated": f.interpolated,
                    "low_confidence": f.low_confidence,
                }
                for f in fixes.values()
            ],
        }

    def compute_overlay(video_id: str, frame: int, overlay: str, tau: float):
        if video_id not in split():
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        if overlay not in OVERLAY_MODES:
            raise HTTPException(status_code=422, detail=f"overlay must be one of {OVERLAY_MODES}")
        if not (0.0 < tau < 1.0):
            raise HTTPException(status_code=422, detail="tau must be in (0, 1)")
        meta = read_meta(root, video_id)
        fix = fixation_for(video_id, frame, meta)
        image = read_rgb(frame_path(root, video_id, frame))
        smap = wooding_map((meta.width, meta.height), fix, params)
        mask = threshold_mask(smap, tau)
        box = peak_component_bbox(mask, smap.fixation)
        if overlay == "none":
            out = image.copy()
        elif overlay == "gray":
            out = np.repeat(to_grayscale_u8(smap)[:, :, None], 3, axis=2)
        elif overlay == "heatmap":
            out = heatmap_overlay(image, smap)
        elif overlay == "mask":
            out = mask_overlay(image, smap, tau)
        else:
            out = weighted_overlay(image, smap)
        if overlay != "gray":
            cv2.rectangle(out, (box.x0, box.y0), (box.x1 - 1, box.y1 - 1), (255, 0, 0), 1)
            cv2.drawMarker(out, (int(round(fix.x)), int(round(fix.y))), (255, 0, 0),
                           cv2.MARKER_CROSS, 8, 1)
        return out, box

    @app.get("/videos/{video_id}/frames/{frame}")
    def frame_image(video_id: str, frame: int, overlay: str = "none", tau: float = 0.5):
        image, box = compute_overlay(video_id, frame, overlay, tau)
        return Response(
            content=encode_png_rgb(image),
            media_type="image/png",
            headers={"X-Bbox": f"{box.x0},{box.y0},{box.x1},{box.y1}"},
        )

    @app.get("/videos/{video_id}/frames/{frame}/bbox")
    def frame_bbox(video_id: str, frame: int, tau: float = 0.5):
        _, box = compute_overlay(video_id, frame, "none", tau)
        return {"x0": box.x0, "y0": box.y0, "x1": box.x1, "y1": box.y1, "area": box.area}

    @app.get("/videos/{video_id}/annotation")
    def get_annotation(video_id: str):
        ann = store.get(video_id)
        if ann is None:
            raise HTTPException(status_code=404, detail=f"{video_id} not annotated")
        return ann

    @app.post("/videos/{video_id}/annotation")
    def post_annotation(video_id: str, body: AnnotationBody):
        if video_id not in split():
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        meta = read_meta(root, video_id)
        ann = VideoAnnotation(
            video_id=video_id,
            start_frame=body.start_frame,
            tau=body.tau,
            category=body.category,
            note=body.note,
        )
        try:
            ann.validate(n_frames=meta.n_frames, n_classes=NUM_CLASSES)
            stored = store.save(ann)
        except ValidationFailed as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        return {"video_id": video_id, "created": stored.created,
                "history_length": len(store.history(video_id))}

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


def serve(dataset_root, host: str = "127.0.0.1", port: int = 8763,
          params: WoodingParams = WoodingParams(), frontend_dir=None) -> None:
    import uvicorn

    uvicorn.run(build_app(dataset_root, params, frontend_dir), host=host, port=port)
