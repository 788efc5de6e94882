/**
 * Thin typed client for the layer-generation job service.  Every byte the
 * UI displays comes through this module; there is no generation logic on
 * the client side.
 */

export type Phase = "foreground" | "composite" | "background" | "full" | "replace_bg";
export type LayerName = "foreground" | "background" | "composite" | "mask";

export interface JobInfo {
  id: string;
  state: "queued" | "running" | "done" | "error";
  progress: number;
  result?: { layerset?: string };
  error?: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    private base: string,
    private fetchFn: FetchLike = (...a) => globalThis.fetch(...a),
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + url, init);
    if (!res.ok) {
      const body = await res.text();
      throw new ServiceError(res.status, body || res.statusText);
    }
    return res.json() as Promise<T>;
  }

  async health(): Promise<boolean> {
    const res = await this.fetchFn(this.base + "/healthz");
    return res.ok;
  }

  async createSession(defaults?: Record<string, unknown>): Promise<string> {
    const body = defaults ? { defaults } : {};
    const doc = await this.json<{ id: string }>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return doc.id;
  }

  async submitJob(
    sessionId: string, phase: Phase, config?: Record<string, unknown>,
  ): Promise<string> {
    const doc = await this.json<{ id: string }>(`/sessions/${sessionId}/jobs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config ? { phase, config } : { phase }),
    });
    return doc.id;
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.json<JobInfo>(`/jobs/${jobId}`);
  }

  async listLayersets(sessionId: string): Promise<string[]> {
    const doc = await this.json<{ layersets: string[] }>(
      `/sessions/${sessionId}/layersets`);
    return doc.layersets;
  }

  layerUrl(sessionId: string, layersetId: string, layer: LayerName): string {
    return `${this.base}/sessions/${sessionId}/layersets/${layersetId}/${layer}`;
  }

  /** Raw layer bytes; null when the layerset or layer is gone (404). */
  async fetchLayer(
    sessionId: string, layersetId: string, layer: LayerName,
  ): Promise<Uint8Array | null> {
    const res = await this.fetchFn(this.layerUrl(sessionId, layersetId, layer));
    if (res.status === 404) return null;
    if (!res.ok) throw new ServiceError(res.status, res.statusText);
    return new Uint8Array(await res.arrayBuffer());
  }
}
