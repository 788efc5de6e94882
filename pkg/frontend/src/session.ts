/**
 * Session view model: phase gating, submit-and-poll, layer tabs, and the
 * layerset history.  All state is reconstructible from the service, so a
 * page refresh loses nothing.
 */

import { JobInfo, LayerName, Phase, ServiceClient } from "./api.js";

export const LAYER_TABS: LayerName[] = ["foreground", "background", "composite", "mask"];

/** Phases that need an earlier phase's artifacts in the session. */
const PHASE_DEPS: Partial<Record<Phase, { needs: string; message: string }>> = {
  composite: { needs: "foreground", message: "run the foreground phase first" },
  background: { needs: "composite", message: "run the composite phase first" },
};

export interface SessionState {
  sessionId: string;
  phasesDone: Set<string>;
  history: string[];
  tabs: Partial<Record<LayerName, Uint8Array>>;
  activeJob: string | null;
  statusMessage: string;
}

export class SessionView {
  state: SessionState;

  constructor(private client: ServiceClient, sessionId: string) {
    this.state = {
      sessionId,
      phasesDone: new Set(),
      history: [],
      tabs: {},
      activeJob: null,
      statusMessage: "",
    };
  }

  static async create(client: ServiceClient, defaults?: Record<string, unknown>) {
    return new SessionView(client, await client.createSession(defaults));
  }

  /** Rebuild history and tabs from the service after a refresh. */
  async restore(): Promise<void> {
    this.state.history = await this.client.listLayersets(this.state.sessionId);
    const latest = this.state.history.at(-1);
    if (latest !== undefined) {
      this.state.phasesDone = new Set(["foreground", "composite", "background"]);
      await this.loadTabs(latest);
    }
  }

  canSubmit(phase: Phase): { ok: boolean; message: string } {
    if (this.state.activeJob !== null) {
      return { ok: false, message: "a job is already running in this session" };
    }
    const dep = PHASE_DEPS[phase];
    if (dep && !this.state.phasesDone.has(dep.needs)) {
      return { ok: false, message: dep.message };
    }
    return { ok: true, message: "" };
  }

  /**
   * Submit a phase, poll to completion, then load the produced layers into
   * the tabs and append the layerset to history.  onProgress sees every
   * polled value in order.
   */
  async submitAndPoll(
    phase: Phase,
    config?: Record<string, unknown>,
    onProgress?: (p: number) => void,
    pollMs = 20,
  ): Promise<JobInfo> {
    const gate = this.canSubmit(phase);
    if (!gate.ok) {
      this.state.statusMessage = gate.message;
      throw new Error(gate.message);
    }
    const jobId = await this.client.submitJob(this.state.sessionId, phase, config);
    this.state.activeJob = jobId;
    try {
      let job = await this.client.getJob(jobId);
      onProgress?.(job.progress);
      while (job.state === "queued" || job.state === "running") {
        await new Promise((r) => setTimeout(r, pollMs));
        job = await this.client.getJob(jobId);
        onProgress?.(job.progress);
      }
      if (job.state === "error") {
        this.state.statusMessage = job.error ?? "job failed";
        return job;
      }
      this.state.phasesDone.add(phase);
      if (phase === "full" || phase === "replace_bg") {
        for (const p of ["foreground", "composite", "background"]) {
          this.state.phasesDone.add(p);
        }
      }
      const layerset = job.result?.layerset;
      if (layerset !== undefined) {
        this.state.history.push(layerset);
        await this.loadTabs(layerset);
      }
      this.state.statusMessage = "done";
      return job;
    } finally {
      this.state.activeJob = null;
    }
  }

  private async loadTabs(layersetId: string): Promise<void> {
    for (const layer of LAYER_TABS) {
      const bytes = await this.client.fetchLayer(this.state.sessionId, layersetId, layer);
      if (bytes !== null) this.state.tabs[layer] = bytes;
    }
  }
}
