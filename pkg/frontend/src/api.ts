// Thin fetch client for the service; the only network surface of the app.

import type { CorpusManifest, HealthStatus, QueryRequestBody, QueryResponse } from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`service returned HTTP ${status}`);
    this.status = status;
    this.detail = detail;
  }
}

export async function postQuery(
  body: QueryRequestBody,
  options: { baseUrl?: string; signal?: AbortSignal } = {},
): Promise<QueryResponse> {
  const base = options.baseUrl ?? "";
  const response = await fetch(`${base}/v1/query`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
    signal: options.signal,
  });
  if (!response.ok) {
    let detail: unknown = null;
    try {
      detail = await response.json();
    } catch {
      detail = null;
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as QueryResponse;
}

export async function getHealth(baseUrl = ""): Promise<HealthStatus> {
  const response = await fetch(`${baseUrl}/v1/health`);
  if (!response.ok) throw new ApiError(response.status, null);
  return (await response.json()) as HealthStatus;
}

export async function getCorpus(baseUrl = ""): Promise<CorpusManifest> {
  const response = await fetch(`${baseUrl}/v1/corpus`);
  if (!response.ok) throw new ApiError(response.status, null);
  return (await response.json()) as CorpusManifest;
}
