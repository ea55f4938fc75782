/** Fetch client for the local feedback service. */

import { parseAnalysis, type UiAnalysis } from "./types.js";

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

export function makeAnalyzeFn(baseUrl = "") {
  return async function analyze(text: string, signal?: AbortSignal): Promise<UiAnalysis> {
    let response: Response;
    try {
      response = await fetch(`${baseUrl}/api/analyze`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
        signal,
      });
    } catch (err) {
      if ((err as Error).name === "AbortError") throw err;
      throw new ServiceError(`feedback service unreachable: ${(err as Error).message}`);
    }
    if (!response.ok) {
      throw new ServiceError(`analyze failed (HTTP ${response.status})`, response.status);
    }
    return parseAnalysis(await response.json());
  };
}

export async function fetchHealth(baseUrl = ""): Promise<{ status: string; model: string }> {
  const response = await fetch(`${baseUrl}/api/health`);
  if (!response.ok) throw new ServiceError(`health failed (HTTP ${response.status})`);
  return (await response.json()) as { status: string; model: string };
}

export async function fetchModels(baseUrl = ""): Promise<{ models: string[]; default: string }> {
  const response = await fetch(`${baseUrl}/api/models`);
  if (!response.ok) throw new ServiceError(`models failed (HTTP ${response.status})`);
  return (await response.json()) as { models: string[]; default: string };
}
