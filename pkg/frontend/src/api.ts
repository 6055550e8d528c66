// Typed client for the elicitation service. The only configuration is the
// server base URL.

import type {
  CreateSessionOptions,
  ModelSnapshot,
  QueryPayload,
  ResponseBody,
  SessionExport,
  SessionInfo,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = 'http-error';
  let detail = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body === 'object') {
      code = body.error ?? code;
      detail = body.detail ?? detail;
    }
  } catch {
    // non-JSON error body; keep the defaults
  }
  return new ApiError(resp.status, code, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.url(path), init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  createSession(options: CreateSessionOptions = {}): Promise<SessionInfo> {
    return this.request<SessionInfo>('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(options),
    });
  }

  getQuery(sessionId: string): Promise<QueryPayload> {
    return this.request<QueryPayload>(`/sessions/${sessionId}/query`);
  }

  submitResponse(sessionId: string, body: ResponseBody): Promise<ModelSnapshot> {
    return this.request<ModelSnapshot>(`/sessions/${sessionId}/response`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getModel(sessionId: string): Promise<ModelSnapshot> {
    return this.request<ModelSnapshot>(`/sessions/${sessionId}/model`);
  }

  exportSession(sessionId: string): Promise<SessionExport> {
    return this.request<SessionExport>(`/sessions/${sessionId}/export`);
  }
}
