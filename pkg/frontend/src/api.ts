// Thin fetch client for the floornav service. All state lives server-side;
// the UI only renders what these calls return.

import type {
  ActionName,
  ApiErrorBody,
  FloorplanDoc,
  FloorplanEntry,
  NoiseConfig,
  SessionView,
  StartPose,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let body: ApiErrorBody = { error: "http_error", detail: res.statusText };
      try {
        body = (await res.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(res.status, body.error, body.detail);
    }
    return (await res.json()) as T;
  }

  listFloorplans(): Promise<{ floorplans: FloorplanEntry[] }> {
    return this.request("/floorplans");
  }

  getFloorplan(id: string): Promise<FloorplanDoc> {
    return this.request(`/floorplans/${id}`);
  }

  uploadFloorplan(documentText: string): Promise<{ floorplan_id: string }> {
    return this.request("/floorplans", { method: "POST", body: documentText });
  }

  rasterUrl(id: string): string {
    return `${this.baseUrl}/floorplans/${id}/raster.png`;
  }

  createSession(
    floorplanId: string,
    startPose: StartPose,
    instruction: string,
    noise?: NoiseConfig,
  ): Promise<SessionView> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        floorplan_id: floorplanId,
        start_pose: [startPose.x, startPose.y, startPose.theta],
        instruction,
        ...(noise ? { noise } : {}),
      }),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`);
  }

  stepSession(id: string, action: ActionName, magnitude: number | null): Promise<SessionView> {
    return this.request(`/sessions/${id}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action, magnitude }),
    });
  }

  saveSession(id: string): Promise<{ episode_id: string }> {
    return this.request(`/sessions/${id}/save`, { method: "POST" });
  }

  listEpisodes(): Promise<{ episodes: string[] }> {
    return this.request("/episodes");
  }

  getEpisode(id: string): Promise<Record<string, unknown>> {
    return this.request(`/episodes/${id}`);
  }

  frameUrl(view: SessionView): string {
    // cache-bust per step: the endpoint always serves the latest frame
    return `${this.baseUrl}${view.frame_url}?step=${view.step}`;
  }
}
