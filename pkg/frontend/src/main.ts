/** DOM wiring for the annotation tool. All state transitions live in
 * state.ts; all server traffic in api.ts. */

import { ApiClient, NoGazeError } from "./api.js";
import {
  DraftStore,
  RequestGate,
  UiSessionState,
  adjustThreshold,
  advanceFrame,
  applyPlayback,
  canSubmit,
  categoryForKey,
  initialState,
  loadVideo,
  markStartFrame,
  nextUnannotated,
  setCategory,
  setNote,
  setOverlayMode,
} from "./state.js";
import { Category, OVERLAY_MODES, OverlayMode, VideoInfo } from "./types.js";

const api = new ApiClient("");
const drafts = new DraftStore(window.localStorage);
const overlayGate = new RequestGate();

let state: UiSessionState = initialState();
let videos: VideoInfo[] = [];
let categories: Category[] = [];
let playTimer: number | null = null;
let lastBlobUrl: string | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const videoList = $("video-list");
const frameImage = $<HTMLImageElement>("frame-image");
const frameSlider = $<HTMLInputElement>("frame-slider");
const frameLabel = $("frame-label");
const tauSlider = $<HTMLInputElement>("tau-slider");
const tauLabel = $("tau-label");
const overlaySelect = $<HTMLSelectElement>("overlay-select");
const categorySelect = $<HTMLSelectElement>("category-select");
const noteInput = $<HTMLInputElement>("note-input");
const warningBar = $("warning-bar");
const bboxLabel = $("bbox-label");
const startLabel = $("start-label");
const submitButton = $<HTMLButtonElement>("submit-button");

function setState(next: UiSessionState, opts: { refreshFrame?: boolean } = {}): void {
  const frameChanged = next.frame !== state.frame || next.videoId !== state.videoId;
  const tauChanged = next.draft.tau !== state.draft.tau;
  const overlayChanged = next.overlay !== state.overlay;
  state = next;
  if (state.videoId) {
    drafts.save(state.videoId, state.draft);
  }
  render();
  if (opts.refreshFrame || frameChanged || tauChanged || overlayChanged) {
    void refreshOverlay();
  }
  syncPlayTimer();
}

function render(): void {
  frameSlider.max = String(Math.max(0, state.frameCount - 1));
  frameSlider.value = String(state.frame);
  frameLabel.textContent = `${state.frame} / ${Math.max(0, state.frameCount - 1)}`;
  tauSlider.value = String(state.draft.tau);
  tauLabel.textContent = state.draft.tau.toFixed(2);
  overlaySelect.value = state.overlay;
  categorySelect.value = state.draft.category === null ? "" : String(state.draft.category);
  noteInput.value = state.draft.note;
  warningBar.textContent = state.warning ?? "";
  warningBar.style.display = state.warning ? "block" : "none";
  startLabel.textContent =
    state.draft.startFrame === null ? "exploration end not marked" : `start frame: ${state.draft.startFrame}`;
  submitButton.disabled = !canSubmit(state);
  $("play-button").textContent = state.playing ? "pause" : "play";
  for (const el of videoList.querySelectorAll("button")) {
    el.classList.toggle("active", el.dataset.videoId === state.videoId);
  }
}

async function refreshOverlay(): Promise<void> {
  if (!state.videoId) return;
  const seq = overlayGate.next();
  try {
    const blobUrl = await api.frameBlob(state.videoId, state.frame, state.overlay, state.draft.tau);
    if (!overlayGate.accepts(seq)) {
      URL.revokeObjectURL(blobUrl);
      return; // a newer request superseded this one
    }
    if (lastBlobUrl) URL.revokeObjectURL(lastBlobUrl);
    lastBlobUrl = blobUrl;
    frameImage.src = blobUrl;
    tauSlider.disabled = false;
    const box = await api.bbox(state.videoId, state.frame, state.draft.tau);
    if (overlayGate.accepts(seq)) {
      bboxLabel.textContent = `box ${box.x1 - box.x0}x${box.y1 - box.y0} (${box.area} px)`;
    }
  } catch (err) {
    if (!overlayGate.accepts(seq)) return;
    if (err instanceof NoGazeError) {
      state = { ...state, warning: "no gaze for this frame (blink)" };
      tauSlider.disabled = true;
      bboxLabel.textContent = "";
      render();
    } else {
      state = { ...state, warning: `service error: ${String(err)}` };
      render();
    }
  }
}

function syncPlayTimer(): void {
  if (state.playing && playTimer === null) {
    playTimer = window.setInterval(() => {
      setState(advanceFrame(state));
    }, 1000 / state.fps);
  } else if (!state.playing && playTimer !== null) {
    window.clearInterval(playTimer);
    playTimer = null;
  }
}

async function selectVideo(videoId: string): Promise<void> {
  const info = videos.find((v) => v.video_id === videoId);
  if (!info) return;
  let draft = drafts.load(videoId);
  if (!draft) {
    const stored = await api.annotation(videoId);
    if (stored) {
      draft = { startFrame: stored.start_frame, tau: stored.tau, category: stored.category, note: stored.note };
    }
  }
  setState(loadVideo(state, videoId, info.frame_count, info.fps, draft), { refreshFrame: true });
}

function renderVideoList(): void {
  videoList.replaceChildren();
  for (const v of videos) {
    const button = document.createElement("button");
    button.dataset.videoId = v.video_id;
    button.textContent = `${v.annotated ? "[done] " : ""}${v.video_id} (${v.frame_count}f, ${v.split})`;
    button.addEventListener("click", () => void selectVideo(v.video_id));
    videoList.appendChild(button);
  }
  render();
}

async function submit(): Promise<void> {
  if (!state.videoId || !canSubmit(state)) return;
  const { startFrame, tau, category, note } = state.draft;
  try {
    await api.submitAnnotation(state.videoId, {
      start_frame: startFrame as number,
      tau,
      category: category as number,
      note,
    });
  } catch (err) {
    state = { ...state, warning: `submit failed, draft kept: ${String(err)}` };
    render();
    return;
  }
  drafts.clear(state.videoId);
  const submitted = state.videoId;
  videos = await api.listVideos();
  renderVideoList();
  const next = nextUnannotated(videos, submitted);
  if (next) {
    await selectVideo(next);
  } else {
    state = { ...state, warning: "all videos annotated" };
    render();
  }
}

function wireControls(): void {
  $("play-button").addEventListener("click", () =>
    setState(applyPlayback(state, { kind: state.playing ? "pause" : "play" })),
  );
  $("step-back").addEventListener("click", () => setState(applyPlayback(state, { kind: "step", delta: -1 })));
  $("step-forward").addEventListener("click", () => setState(applyPlayback(state, { kind: "step", delta: 1 })));
  frameSlider.addEventListener("input", () =>
    setState(applyPlayback(state, { kind: "seek", frame: Number(frameSlider.value) })),
  );
  tauSlider.addEventListener("input", () => setState(adjustThreshold(state, Number(tauSlider.value))));
  overlaySelect.addEventListener("change", () =>
    setState(setOverlayMode(state, overlaySelect.value as OverlayMode)),
  );
  categorySelect.addEventListener("change", () => {
    if (categorySelect.value !== "") setState(setCategory(state, Number(categorySelect.value)));
  });
  noteInput.addEventListener("change", () => setState(setNote(state, noteInput.value)));
  $("mark-start").addEventListener("click", () => setState(markStartFrame(state)));
  submitButton.addEventListener("click", () => void submit());

  document.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement && ev.target.type === "text") return;
    const category = categoryForKey(ev.key, categories.length);
    if (category !== null) {
      setState(setCategory(state, category));
    } else if (ev.key === " ") {
      ev.preventDefault();
      setState(applyPlayback(state, { kind: state.playing ? "pause" : "play" }));
    } else if (ev.key === "ArrowRight") {
      setState(applyPlayback(state, { kind: "step", delta: 1 }));
    } else if (ev.key === "ArrowLeft") {
      setState(applyPlayback(state, { kind: "step", delta: -1 }));
    } else if (ev.key === "Enter" && canSubmit(state)) {
      void submit();
    }
  });
}

async function init(): Promise<void> {
  for (const mode of OVERLAY_MODES) {
    const option = document.createElement("option");
    option.value = mode;
    option.textContent = mode;
    overlaySelect.appendChild(option);
  }
  wireControls();
  [videos, categories] = await Promise.all([api.listVideos(), api.categories()]);
  for (const c of categories) {
    const option = document.createElement("option");
    option.value = String(c.id);
    option.textContent = `${c.id}: ${c.name}`;
    categorySelect.appendChild(option);
  }
  renderVideoList();
  const first = videos.find((v) => !v.annotated) ?? videos[0];
  if (first) await selectVideo(first.video_id);
}

void init();
