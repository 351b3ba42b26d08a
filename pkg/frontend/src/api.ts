import type {
  ClusterDetailsPayload,
  ClustersPayload,
  ComparePayload,
  ErrorBody,
  ForecastPayload,
  ManifestPayload,
  PathsPayload,
  ProjectionPayload,
  SegmentsPayload,
  SnapshotsPayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export interface RequestInitLike {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export type FetchLike = (url: string, init?: RequestInitLike) => Promise<HttpResponse>;

function buildQuery(params: Record<string, string | number | undefined>): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) {
      parts.push(`${key}=${encodeURIComponent(String(value))}`);
    }
  }
  return parts.length > 0 ? `?${parts.join("&")}` : "";
}

/**
 * Thin client over the service endpoints. The fetch implementation is
 * injectable so tests can run against canned responses without a server.
 */
export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "/api/v1", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInitLike): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let body: Partial<ErrorBody> | null = null;
      try {
        body = (await response.json()) as Partial<ErrorBody>;
      } catch {
        body = null;
      }
      throw new ApiError(
        response.status,
        body?.code ?? "error",
        body?.message ?? `request failed with status ${response.status}`,
      );
    }
    return (await response.json()) as T;
  }

  projection(): Promise<ProjectionPayload> {
    return this.request("/projection");
  }

  snapshots(from?: string, to?: string): Promise<SnapshotsPayload> {
    return this.request(`/snapshots${buildQuery({ from, to })}`);
  }

  segments(): Promise<SegmentsPayload> {
    return this.request("/segments");
  }

  clusters(period?: number): Promise<ClustersPayload> {
    return this.request(`/clusters${buildQuery({ period })}`);
  }

  clusterDetails(id: string): Promise<ClusterDetailsPayload> {
    return this.request(`/clusters/${encodeURIComponent(id)}/details`);
  }

  paths(): Promise<PathsPayload> {
    return this.request("/paths");
  }

  forecast(tier?: string, model?: string): Promise<ForecastPayload> {
    return this.request(`/forecast${buildQuery({ tier, model })}`);
  }

  manifest(): Promise<ManifestPayload> {
    return this.request("/manifest");
  }

  compare(ids: string[]): Promise<ComparePayload> {
    return this.request("/compare", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ids }),
    });
  }
}
