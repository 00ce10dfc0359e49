import type {
  AskRequest,
  AskResponse,
  ConfigsResponse,
  CorpusStats,
  ScoreRequest,
  ScoreResponse,
} from "./types.js";

// Minimal fetch surface so tests can inject recorded fixtures.
export interface FetchLike {
  (url: string, init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  }): Promise<{
    ok: boolean;
    status: number;
    statusText: string;
    json(): Promise<unknown>;
  }>;
}

export class ApiError extends Error {
  constructor(message: string, public code: string, public status: number) {
    super(message);
    this.name = "ApiError";
  }
}

interface ErrorBody {
  error?: string;
  code?: string;
}

export class ApiClient {
  constructor(private fetchFn: FetchLike, private baseUrl: string = "") {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    let resp;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(String(err), "network_error", 0);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    if (!resp.ok) {
      const eb = (body ?? {}) as ErrorBody;
      throw new ApiError(eb.error ?? resp.statusText, eb.code ?? "http_error", resp.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  ask(req: AskRequest): Promise<AskResponse> {
    return this.post<AskResponse>("/api/ask", req);
  }

  score(req: ScoreRequest): Promise<ScoreResponse> {
    return this.post<ScoreResponse>("/api/eval/score", req);
  }

  corpusStats(): Promise<CorpusStats> {
    return this.request<CorpusStats>("/api/corpus/stats");
  }

  configs(): Promise<ConfigsResponse> {
    return this.request<ConfigsResponse>("/api/configs");
  }
}

export function toApiError(err: unknown): ApiError {
  return err instanceof ApiError ? err : new ApiError(String(err), "unexpected", 0);
}
