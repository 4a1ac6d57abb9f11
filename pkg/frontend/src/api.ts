/** Thin typed client for the review REST API. Every mutation goes through here. */

import type { AnnotationRow, Candidate, SessionSummary } from "./model.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(res: Response): Promise<T> {
  if (res.ok) return (await res.json()) as T;
  let code = `HTTP ${res.status}`;
  let message = res.statusText;
  try {
    const body = (await res.json()) as { error?: string; message?: string };
    if (body.error) code = body.error;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the HTTP status text
  }
  throw new ApiError(code, message, res.status);
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchFn = (input, init) => fetch(input, init),
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchFn(this.baseUrl + path);
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listSessions(): Promise<SessionSummary[]> {
    return asJson(await this.get("/api/sessions"));
  }

  async summary(sessionId: string): Promise<SessionSummary> {
    return asJson(await this.get(`/api/sessions/${encodeURIComponent(sessionId)}`));
  }

  async candidates(sessionId: string): Promise<Candidate[]> {
    return asJson(
      await this.get(`/api/sessions/${encodeURIComponent(sessionId)}/candidates`),
    );
  }

  async annotations(sessionId: string, concept: string): Promise<AnnotationRow[]> {
    return asJson(
      await this.get(
        `/api/sessions/${encodeURIComponent(sessionId)}/annotations/${encodeURIComponent(concept)}`,
      ),
    );
  }

  /** pairId contains a non-ASCII separator, so it must be URL-encoded. */
  async decide(
    sessionId: string,
    pairId: string,
    action: string,
    target?: string,
  ): Promise<SessionSummary> {
    const body: Record<string, string> = { action };
    if (target !== undefined) body.target = target;
    return asJson(
      await this.post(
        `/api/sessions/${encodeURIComponent(sessionId)}/candidates/${encodeURIComponent(pairId)}/decision`,
        body,
      ),
    );
  }

  async compile(sessionId: string, epoch?: number): Promise<unknown> {
    return asJson(
      await this.post(
        `/api/sessions/${encodeURIComponent(sessionId)}/compile`,
        epoch === undefined ? {} : { epoch },
      ),
    );
  }
}
