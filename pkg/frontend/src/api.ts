// Typed client for the studio API. Every rejection surfaces as an ApiError
// carrying the server's stable code and human message; the UI invents no
// error semantics of its own.

import type {
  CanvasInfo,
  CatalogEntry,
  CompileResponse,
  FsEntry,
  GraphResponse,
  KernelDoc,
  Mutation,
  MutationResponse,
} from "./types";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details?: Record<string, unknown>;

  constructor(status: number, code: string, message: string,
              details?: Record<string, unknown>) {
    super(message);
    this.status = status;
    this.code = code;
    this.details = details;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(
      response.status,
      typeof body.code === "string" ? body.code : "error",
      typeof body.message === "string" ? body.message : response.statusText,
      body.details,
    );
  }
  return body as T;
}

function post<T>(url: string, payload: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  listCanvases(): Promise<{ canvases: CanvasInfo[]; activeTab: number }> {
    return request(`${this.base}/api/canvas`);
  }

  createCanvas(body: { name?: string; path?: string } = {}): Promise<CanvasInfo> {
    return post(`${this.base}/api/canvas`, body);
  }

  getGraph(canvasId: string): Promise<GraphResponse> {
    return request(`${this.base}/api/canvas/${canvasId}/graph`);
  }

  mutate(canvasId: string, mutation: Mutation): Promise<MutationResponse> {
    return post(`${this.base}/api/canvas/${canvasId}/mutate`, mutation);
  }

  undo(canvasId: string): Promise<{ revision: number; noop?: boolean }> {
    return post(`${this.base}/api/canvas/${canvasId}/undo`, {});
  }

  redo(canvasId: string): Promise<{ revision: number; noop?: boolean }> {
    return post(`${this.base}/api/canvas/${canvasId}/redo`, {});
  }

  compile(canvasId: string, kernel: string, opset?: number): Promise<CompileResponse> {
    const body: Record<string, unknown> = { kernel };
    if (opset !== undefined) body.opset = opset;
    return post(`${this.base}/api/canvas/${canvasId}/compile`, body);
  }

  save(canvasId: string, path?: string): Promise<{ path: string }> {
    return post(`${this.base}/api/canvas/${canvasId}/save`,
                path ? { path } : {});
  }

  importModel(body: { kernel: string; path?: string; data?: string;
                      name?: string }): Promise<CanvasInfo> {
    return post(`${this.base}/api/import`, body);
  }

  catalog(): Promise<CatalogEntry[]> {
    return request<{ layers: CatalogEntry[] }>(`${this.base}/api/catalog`)
      .then((body) => body.layers);
  }

  kernels(): Promise<KernelDoc[]> {
    return request<{ kernels: KernelDoc[] }>(`${this.base}/api/kernels`)
      .then((body) => body.kernels);
  }

  listDir(path: string): Promise<{ path: string; entries: FsEntry[] }> {
    return request(`${this.base}/api/fs?path=${encodeURIComponent(path)}`);
  }

  pollRevision(canvasId: string, after: number, timeoutSeconds: number,
               signal?: AbortSignal): Promise<{ revision: number }> {
    const url = `${this.base}/api/canvas/${canvasId}/revision` +
      `?after=${after}&timeout=${timeoutSeconds}`;
    return request(url, { signal });
  }
}
