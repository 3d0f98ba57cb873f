/** Typed client for the local annotation service.
 *
 * The UI never computes saliency itself: every overlay pixel and every
 * proposal box comes from these endpoints.
 */

import { BboxInfo, Category, FixationInfo, StoredAnnotation, VideoInfo, OverlayMode } from "./types.js";

/** Frame has no reliable gaze (blink gap); the service answers 409. */
export class NoGazeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NoGazeError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    const body = await response.text().catch(() => "");
    if (response.status === 409) {
      throw new NoGazeError(body || "no gaze for this frame");
    }
    throw new ApiError(response.status, body || response.statusText);
  }
  return response.json() as Promise<T>;
}

export interface AnnotationSubmission {
  start_frame: number;
  tau: number;
  category: number;
  note: string;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  listVideos(): Promise<VideoInfo[]> {
    return fetch(`${this.baseUrl}/videos`).then((r) => asJson<VideoInfo[]>(r));
  }

  categories(): Promise<Category[]> {
    return fetch(`${this.baseUrl}/categories`).then((r) => asJson<Category[]>(r));
  }

  gaze(videoId: string): Promise<FixationInfo[]> {
    return fetch(`${this.baseUrl}/videos/${videoId}/gaze`)
      .then((r) => asJson<{ fixations: FixationInfo[] }>(r))
      .then((body) => body.fixations);
  }

  /** URL of the composited frame image for an <img> src. */
  frameUrl(videoId: string, frame: number, overlay: OverlayMode, tau: number): string {
    const params = new URLSearchParams({ overlay, tau: tau.toFixed(3) });
    return `${this.baseUrl}/videos/${videoId}/frames/${frame}?${params}`;
  }

  /** Fetch the overlay image as a blob URL (lets stale responses be
   * dropped by sequence number instead of racing <img> loads). */
  async frameBlob(videoId: string, frame: number, overlay: OverlayMode, tau: number): Promise<string> {
    const response = await fetch(this.frameUrl(videoId, frame, overlay, tau));
    if (!response.ok) {
      const body = await response.text().catch(() => "");
      if (response.status === 409) throw new NoGazeError(body || "no gaze");
      throw new ApiError(response.status, body || response.statusText);
    }
    return URL.createObjectURL(await response.blob());
  }

  bbox(videoId: string, frame: number, tau: number): Promise<BboxInfo> {
    const params = new URLSearchParams({ tau: tau.toFixed(3) });
    return fetch(`${this.baseUrl}/videos/${videoId}/frames/${frame}/bbox?${params}`).then((r) =>
      asJson<BboxInfo>(r),
    );
  }

  /** Current annotation, or null when the video has none yet. */
  async annotation(videoId: string): Promise<StoredAnnotation | null> {
    const response = await fetch(`${this.baseUrl}/videos/${videoId}/annotation`);
    if (response.status === 404) return null;
    return asJson<StoredAnnotation>(response);
  }

  submitAnnotation(videoId: string, body: AnnotationSubmission): Promise<{ video_id: string; created: number }> {
    return fetch(`${this.baseUrl}/videos/${videoId}/annotation`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<{ video_id: string; created: number }>(r));
  }
}
