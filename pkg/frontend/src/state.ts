/** Pure session-state logic for the annotation tool.
 *
 * Everything here is synchronous and framework-free so the behavior is
 * directly testable: playback transitions with clamped seeking, the
 * live threshold slider, the annotation draft (persisted until
 * submitted), and the sequence gate that drops stale overlay responses.
 */

import { OverlayMode } from "./types.js";

/** Slider bounds keep tau strictly inside (0, 1). */
export const TAU_MIN = 0.01;
export const TAU_MAX = 0.99;
export const DEFAULT_TAU = 0.5;

export interface AnnotationDraft {
  startFrame: number | null;
  tau: number;
  category: number | null;
  note: string;
}

export interface UiSessionState {
  videoId: string | null;
  frame: number;
  frameCount: number;
  playing: boolean;
  fps: number;
  overlay: OverlayMode;
  draft: AnnotationDraft;
  /** transient notice (clamped seek, no gaze, ...) shown inline */
  warning: string | null;
}

export type PlaybackAction =
  | { kind: "play" }
  | { kind: "pause" }
  | { kind: "step"; delta: number }
  | { kind: "seek"; frame: number };

export function emptyDraft(): AnnotationDraft {
  return { startFrame: null, tau: DEFAULT_TAU, category: null, note: "" };
}

export function initialState(): UiSessionState {
  return {
    videoId: null,
    frame: 0,
    frameCount: 0,
    playing: false,
    fps: 25,
    overlay: "heatmap",
    draft: emptyDraft(),
    warning: null,
  };
}

export function loadVideo(
  state: UiSessionState,
  videoId: string,
  frameCount: number,
  fps: number,
  savedDraft: AnnotationDraft | null = null,
): UiSessionState {
  return {
    ...state,
    videoId,
    frame: 0,
    frameCount,
    fps,
    playing: false,
    draft: savedDraft ?? emptyDraft(),
    warning: null,
  };
}

function clampFrame(state: UiSessionState, frame: number): { frame: number; clamped: boolean } {
  const max = Math.max(0, state.frameCount - 1);
  const clamped = Math.min(Math.max(frame, 0), max);
  return { frame: clamped, clamped: clamped !== frame };
}

export function applyPlayback(state: UiSessionState, action: PlaybackAction): UiSessionState {
  switch (action.kind) {
    case "play":
      return { ...state, playing: true, warning: null };
    case "pause":
      return { ...state, playing: false };
    case "step": {
      const { frame, clamped } = clampFrame(state, state.frame + action.delta);
      return {
        ...state,
        frame,
        playing: false,
        warning: clamped ? "already at the end of the video" : null,
      };
    }
    case "seek": {
      const { frame, clamped } = clampFrame(state, action.frame);
      return { ...state, frame, warning: clamped ? "seek clamped to video bounds" : null };
    }
  }
}

/** One playback tick; pauses on the last frame instead of wrapping. */
export function advanceFrame(state: UiSessionState): UiSessionState {
  if (!state.playing) return state;
  if (state.frame + 1 >= state.frameCount) {
    return { ...state, playing: false };
  }
  return { ...state, frame: state.frame + 1 };
}

export function adjustThreshold(state: UiSessionState, tau: number): UiSessionState {
  const bounded = Math.min(Math.max(tau, TAU_MIN), TAU_MAX);
  return { ...state, draft: { ...state.draft, tau: bounded }, warning: null };
}

export function setOverlayMode(state: UiSessionState, overlay: OverlayMode): UiSessionState {
  return { ...state, overlay };
}

export function setCategory(state: UiSessionState, category: number): UiSessionState {
  return { ...state, draft: { ...state.draft, category } };
}

export function setNote(state: UiSessionState, note: string): UiSessionState {
  return { ...state, draft: { ...state.draft, note } };
}

/** Marks the current frame as the end of scene exploration. */
export function markStartFrame(state: UiSessionState): UiSessionState {
  return { ...state, draft: { ...state.draft, startFrame: state.frame } };
}

export function canSubmit(state: UiSessionState): boolean {
  return state.videoId !== null && state.draft.startFrame !== null && state.draft.category !== null;
}

/** Category hotkeys: digits 1..9 select category ids 1..8 and 0 = background via 9. */
export function categoryForKey(key: string, categoryCount: number): number | null {
  if (!/^[1-9]$/.test(key)) return null;
  const n = Number(key);
  if (n < categoryCount) return n;
  if (n === 9) return 0; // background on the last hotkey
  return null;
}

// --- stale-response gate ------------------------------------------------------

/** Monotonic sequence numbers; only the latest issued request may apply
 * its response. One gate per visual resource. */
export class RequestGate {
  private counter = 0;

  next(): number {
    this.counter += 1;
    return this.counter;
  }

  accepts(seq: number): boolean {
    return seq === this.counter;
  }
}

// --- draft persistence ----------------------------------------------------------

/** Minimal Storage surface so tests can inject a fake. */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const DRAFT_PREFIX = "gazerec-draft:";

export class DraftStore {
  constructor(private storage: StorageLike) {}

  save(videoId: string, draft: AnnotationDraft): void {
    this.storage.setItem(DRAFT_PREFIX + videoId, JSON.stringify(draft));
  }

  load(videoId: string): AnnotationDraft | null {
    const raw = this.storage.getItem(DRAFT_PREFIX + videoId);
    if (raw === null) return null;
    try {
      const parsed = JSON.parse(raw) as AnnotationDraft;
      if (typeof parsed.tau !== "number") return null;
      return parsed;
    } catch {
      return null;
    }
  }

  clear(videoId: string): void {
    this.storage.removeItem(DRAFT_PREFIX + videoId);
  }
}

/** Next video needing work after a submission, or null when done. */
export function nextUnannotated(
  videos: { video_id: string; annotated: boolean }[],
  currentId: string,
): string | null {
  const start = videos.findIndex((v) => v.video_id === currentId);
  for (let i = 1; i <= videos.length; i++) {
    const v = videos[(start + i) % videos.length];
    if (v && !v.annotated && v.video_id !== currentId) return v.video_id;
  }
  return null;
}
