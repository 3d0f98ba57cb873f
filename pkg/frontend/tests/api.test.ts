import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, NoGazeError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  const response = {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: () => Promise.resolve(body),
    text: () => Promise.resolve(typeof body === "string" ? body : JSON.stringify(body)),
  } as unknown as Response;
  const fn = vi.fn(() => Promise.resolve(response));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists videos from /videos", async () => {
    const payload = [{ video_id: "v0000", frame_count: 50, annotated: false }];
    const fetchMock = mockFetch(200, payload);
    const got = await new ApiClient("http://svc").listVideos();
    expect(fetchMock).toHaveBeenCalledWith("http://svc/videos");
    expect(got).toEqual(payload);
  });

  it("builds overlay frame URLs with mode and tau", () => {
    const api = new ApiClient();
    expect(api.frameUrl("v0001", 7, "heatmap", 0.45)).toBe(
      "/videos/v0001/frames/7?overlay=heatmap&tau=0.450",
    );
  });

  it("unwraps the gaze fixation list", async () => {
    mockFetch(200, { video_id: "v0001", fixations: [{ frame: 0, x: 1, y: 2 }] });
    const got = await new ApiClient().gaze("v0001");
    expect(got).toHaveLength(1);
    expect(got[0]?.frame).toBe(0);
  });

  it("maps 409 on bbox to NoGazeError", async () => {
    mockFetch(409, "no gaze for frame 3");
    await expect(new ApiClient().bbox("v0001", 3, 0.5)).rejects.toBeInstanceOf(NoGazeError);
  });

  it("maps other failures to ApiError with status", async () => {
    mockFetch(500, "boom");
    const err = await new ApiClient().bbox("v0001", 3, 0.5).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(500);
  });

  it("returns null for an unannotated video", async () => {
    mockFetch(404, "not annotated");
    expect(await new ApiClient().annotation("v0002")).toBeNull();
  });

  it("posts annotation JSON", async () => {
    const fetchMock = mockFetch(200, { video_id: "v0003", created: 123.0 });
    const body = { start_frame: 8, tau: 0.5, category: 3, note: "" };
    const got = await new ApiClient().submitAnnotation("v0003", body);
    expect(got.video_id).toBe("v0003");
    expect(fetchMock).toHaveBeenCalledWith("/videos/v0003/annotation", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  });
});
