// Typed client for the restoration session service. Everything the UI
// knows about a session comes through here; there is no other channel.

export type StageName = "damage" | "denoise" | "face" | "colorize";

export const STAGE_ORDER: StageName[] = ["damage", "denoise", "face", "colorize"];

export interface StageParams {
  backend_id: string;
  strength: number;
  steps: number;
  guidance: number;
  prompt: string;
  checkpoint: string;
  upscale: number;
  seed: number;
  extras: Record<string, string>;
}

export interface StageStatus {
  name: StageName;
  committed: boolean;
}

export interface SessionView {
  session_id: string;
  cursor: number;
  status: "active" | "complete";
  current_stage: StageName | null;
  stages: StageStatus[];
  preset: string;
  links: Record<string, string>;
}

export interface BackendInfo {
  backend_id: string;
  stage: StageName;
  kind: string;
  requires_mask: boolean;
  params_schema: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly stage: string | null;

  constructor(status: number, code: string, message: string, stage: string | null = null) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.stage = stage;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

// the full surface the UI needs; RestoreClient is the real one, tests
// substitute an in-memory double
export interface SessionApi {
  createSession(png: Uint8Array, preset?: string): Promise<SessionView>;
  getSession(sessionId: string): Promise<SessionView>;
  uploadMask(sessionId: string, png: Uint8Array): Promise<void>;
  downloadMask(sessionId: string): Promise<Uint8Array>;
  original(sessionId: string): Promise<Uint8Array>;
  preview(sessionId: string, params: StageParams): Promise<Uint8Array>;
  commit(sessionId: string, params: StageParams): Promise<SessionView>;
  rollback(sessionId: string, toStage: number): Promise<SessionView>;
  result(sessionId: string): Promise<Uint8Array>;
  backends(stage?: StageName): Promise<BackendInfo[]>;
}

const raiseForStatus = async (resp: Response): Promise<Response> => {
  if (resp.ok) return resp;
  let code = "http-error";
  let message = `HTTP ${resp.status}`;
  let stage: string | null = null;
  try {
    const body = await resp.json();
    if (body && typeof body === "object") {
      if (typeof body.code === "string") code = body.code;
      if (typeof body.message === "string") message = body.message;
      if (typeof body.stage === "string") stage = body.stage;
      // FastAPI validation errors arrive as {detail: [...]}
      if (body.detail !== undefined && code === "http-error") {
        code = "invalid-params";
        message = JSON.stringify(body.detail);
      }
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(resp.status, code, message, stage);
};

export class RestoreClient implements SessionApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await raiseForStatus(await this.fetchImpl(this.base + path, init));
    return (await resp.json()) as T;
  }

  private async bytes(path: string, init?: RequestInit): Promise<Uint8Array> {
    const resp = await raiseForStatus(await this.fetchImpl(this.base + path, init));
    return new Uint8Array(await resp.arrayBuffer());
  }

  createSession(png: Uint8Array, preset = "default"): Promise<SessionView> {
    const form = new FormData();
    form.append("image", new Blob([png as BlobPart], { type: "image/png" }), "photo.png");
    form.append("preset", preset);
    return this.json<SessionView>("/sessions", { method: "POST", body: form });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.json<SessionView>(`/sessions/${sessionId}`);
  }

  uploadMask(sessionId: string, png: Uint8Array): Promise<void> {
    return this.json<{ ok: boolean }>(`/sessions/${sessionId}/mask`, {
      method: "POST",
      headers: { "Content-Type": "image/png" },
      body: png as BodyInit,
    }).then(() => undefined);
  }

  downloadMask(sessionId: string): Promise<Uint8Array> {
    return this.bytes(`/sessions/${sessionId}/mask`);
  }

  original(sessionId: string): Promise<Uint8Array> {
    return this.bytes(`/sessions/${sessionId}/original`);
  }

  preview(sessionId: string, params: StageParams): Promise<Uint8Array> {
    return this.bytes(`/sessions/${sessionId}/preview`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(params),
    });
  }

  commit(sessionId: string, params: StageParams): Promise<SessionView> {
    return this.json<SessionView>(`/sessions/${sessionId}/commit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(params),
    });
  }

  rollback(sessionId: string, toStage: number): Promise<SessionView> {
    return this.json<SessionView>(`/sessions/${sessionId}/rollback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ to_stage: toStage }),
    });
  }

  result(sessionId: string): Promise<Uint8Array> {
    return this.bytes(`/sessions/${sessionId}/result`);
  }

  backends(stage?: StageName): Promise<BackendInfo[]> {
    const query = stage ? `?stage=${stage}` : "";
    return this.json<BackendInfo[]>(`/backends${query}`);
  }
}
