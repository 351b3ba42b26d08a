import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike, type RequestInitLike } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInitLike;
}

function recordingFetch(calls: Call[], status = 200, body: unknown = {}): FetchLike {
  return (url, init) => {
    calls.push({ url, init });
    return Promise.resolve({
      ok: status < 400,
      status,
      json: () => Promise.resolve(body),
    });
  };
}

describe("api client", () => {
  it("builds endpoint urls with optional query parameters", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("/api/v1", recordingFetch(calls));
    await client.projection();
    await client.snapshots("1980-01", "1980-06");
    await client.snapshots();
    await client.clusters(2);
    await client.clusterDetails("p0000-0021-c00");
    await client.forecast("primary", "NaiveLast");
    expect(calls.map((c) => c.url)).toEqual([
      "/api/v1/projection",
      "/api/v1/snapshots?from=1980-01&to=1980-06",
      "/api/v1/snapshots",
      "/api/v1/clusters?period=2",
      "/api/v1/clusters/p0000-0021-c00/details",
      "/api/v1/forecast?tier=primary&model=NaiveLast",
    ]);
  });

  it("posts comparison requests as json", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("/api/v1", recordingFetch(calls));
    await client.compare(["a", "b"]);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("/api/v1/compare");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body ?? "")).toEqual({ ids: ["a", "b"] });
  });

  it("surfaces service errors with their code and message", async () => {
    const client = new ApiClient(
      "/api/v1",
      recordingFetch([], 404, { code: "unknown-cluster", message: "no cluster x" }),
    );
    const error = await client.clusterDetails("x").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(404);
    expect((error as ApiError).code).toBe("unknown-cluster");
    expect((error as ApiError).message).toBe("no cluster x");
  });

  it("copes with unparseable error bodies", async () => {
    const broken: FetchLike = () =>
      Promise.resolve({
        ok: false,
        status: 503,
        json: () => Promise.reject(new Error("not json")),
      });
    const client = new ApiClient("/api/v1", broken);
    const error = await client.manifest().catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).code).toBe("error");
    expect((error as ApiError).status).toBe(503);
  });
});
