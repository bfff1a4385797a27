import type { WireReal } from "./wire.js";

/** One retrieved neighbor as the service reports it. */
export interface Hit {
  id: string;
  score: number;
  label: string | null;
  target_months?: number;
  attributes?: Record<string, string>;
}

/** Class probabilities for one query, in the service's class order. */
export interface ClassScores {
  classes: string[];
  raw: number[];
  probabilities: number[];
}

/** One exported operating point. The leading sentinel has threshold "inf". */
export interface RocExportPoint {
  threshold: WireReal;
  fpr: number;
  tpr: number;
}

/** A stored run's curve for one class, exactly as exported. */
export interface RocExport {
  run: string;
  class: string;
  auc: number;
  points: RocExportPoint[];
}

/** The subset of a fetch Response the client needs; eases test doubles. */
export interface WireResponse {
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<WireResponse>;

/** A non-2xx service reply, carrying the error slug and human detail. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly slug: string,
    readonly detail: string,
  ) {
    super(`${slug}: ${detail}`);
    this.name = "ServiceError";
  }
}

const browserFetch: FetchLike = (url, init) => fetch(url, init);

/** Thin typed wrapper over the service's HTTP JSON API. */
export class ApiClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchLike = browserFetch,
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: { method: string; headers?: Record<string, string>; body?: string } = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = null;
    }
    if (response.status >= 400) {
      const err = (parsed ?? {}) as { error?: string; detail?: string };
      throw new ServiceError(response.status, err.error ?? "unknown_error", err.detail ?? text);
    }
    return parsed;
  }

  async search(vector: number[], k: number): Promise<Hit[]> {
    const body = (await this.request("POST", "/search", { vector, k })) as { hits: Hit[] };
    return body.hits;
  }

  async classify(vector: number[], k: number, mode: "knn" | "zeroshot"): Promise<ClassScores> {
    return (await this.request("POST", "/classify", { vector, k, mode })) as ClassScores;
  }

  async roc(run: string, className: string): Promise<RocExport> {
    const path = `/roc/${encodeURIComponent(run)}/${encodeURIComponent(className)}`;
    return (await this.request("GET", path)) as RocExport;
  }

  async runs(): Promise<string[]> {
    const body = (await this.request("GET", "/runs")) as { runs: string[] };
    return body.runs;
  }
}
