// Typed client for the explorer API; the only way the UI talks to the engine.

import type {
  CandidatesResponse,
  FailedSubproofJson,
  ProofNodeJson,
  RelationsResponse,
  StatsJson,
  TupleRef,
  TuplesPage,
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

export interface TupleQuery {
  prefix?: string;
  limit?: number;
  offset?: number;
}

export class ExplorerApi {
  constructor(public readonly baseUrl: string) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? {}
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          };
    const response = await fetch(this.baseUrl + path, init);
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      throw new ApiError(response.status, "bad-response", "response is not JSON");
    }
    if (!response.ok) {
      const err = payload as { error?: string; detail?: string };
      throw new ApiError(response.status, err.error ?? "error", err.detail ?? `HTTP ${response.status}`);
    }
    return payload as T;
  }

  relations(): Promise<RelationsResponse> {
    return this.request("/relations");
  }

  tuples(relation: string, query: TupleQuery = {}): Promise<TuplesPage> {
    const params = new URLSearchParams();
    if (query.prefix) params.set("prefix", query.prefix);
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    const qs = params.toString();
    return this.request(`/tuples/${relation}${qs ? "?" + qs : ""}`);
  }

  explain(tuple: TupleRef, depth: number | null): Promise<ProofNodeJson> {
    const body: { tuple: TupleRef; depth?: number } = { tuple };
    if (depth !== null) body.depth = depth;
    return this.request("/explain", body);
  }

  expand(tuple: TupleRef): Promise<ProofNodeJson> {
    return this.request("/expand", { tuple });
  }

  negationCandidates(tuple: TupleRef): Promise<CandidatesResponse> {
    return this.request("/negation/candidates", { tuple });
  }

  negationEvaluate(
    tuple: TupleRef,
    rule: number,
    bindings: Record<string, string | number>,
  ): Promise<FailedSubproofJson> {
    return this.request("/negation/evaluate", { tuple, rule, bindings });
  }

  stats(): Promise<StatsJson> {
    return this.request("/stats");
  }
}
