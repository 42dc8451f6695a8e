// Thin typed client for the backend JSON API.

import type {
  ClustersPayload,
  NetworkPayload,
  PeriodInfo,
  SimulateRequest,
  SimulateResponse,
  TrackResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "unknown";
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body?.detail?.code) {
      code = body.detail.code;
      message = body.detail.message ?? message;
    } else if (Array.isArray(body?.detail)) {
      code = "request_invalid";
      message = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, code, message);
}

export class CorrnetApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string, params?: Record<string, string>): string {
    const query = params ? `?${new URLSearchParams(params)}` : "";
    return `${this.base}${path}${query}`;
  }

  async periods(): Promise<PeriodInfo[]> {
    const body = await unwrap<{ periods: PeriodInfo[] }>(
      await this.fetchImpl(this.url("/periods")),
    );
    return body.periods;
  }

  network(period: string): Promise<NetworkPayload> {
    return this.fetchImpl(this.url("/network", { period })).then((r) =>
      unwrap<NetworkPayload>(r),
    );
  }

  getClusters(period: string): Promise<ClustersPayload> {
    return this.fetchImpl(this.url("/clusters", { period })).then((r) =>
      unwrap<ClustersPayload>(r),
    );
  }

  putClusters(period: string, boundaries: number[]): Promise<ClustersPayload> {
    return this.fetchImpl(this.url("/clusters", { period }), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ boundaries }),
    }).then((r) => unwrap<ClustersPayload>(r));
  }

  simulate(request: SimulateRequest): Promise<SimulateResponse> {
    return this.fetchImpl(this.url("/simulate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    }).then((r) => unwrap<SimulateResponse>(r));
  }

  track(period: string, subset: string[]): Promise<TrackResponse> {
    return this.fetchImpl(
      this.url("/track", { period, subset: subset.join(",") }),
    ).then((r) => unwrap<TrackResponse>(r));
  }
}
