/** Shapes of the annotation service's JSON payloads. */

export interface VideoInfo {
  video_id: string;
  frame_count: number;
  width: number;
  height: number;
  fps: number;
  split: string;
  annotated: boolean;
}

export interface Category {
  id: number;
  name: string;
}

export interface FixationInfo {
  frame: number;
  x: number;
  y: number;
  d: number;
  interpolated: boolean;
  low_confidence: boolean;
}

export interface BboxInfo {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  area: number;
}

export interface StoredAnnotation {
  video_id: string;
  start_frame: number;
  tau: number;
  category: number;
  note: string;
  created: number;
}

/** The four overlay renderings the service offers for a frame. */
export type OverlayMode = "none" | "heatmap" | "mask" | "weighted";

export const OVERLAY_MODES: OverlayMode[] = ["none", "heatmap", "mask", "weighted"];
