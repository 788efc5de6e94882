/**
 * In-memory stand-in for the layer service, speaking the same JSON/HTTP
 * contract through a fetch-compatible function.  Layer "images" are
 * deterministic byte strings derived from the session's generation
 * counter, with one deliberate property mirroring the real pipeline:
 * a replace_bg job reuses the previous layerset's foreground bytes
 * unchanged while background and composite bytes differ.
 */

import { FetchLike } from "../src/api.js";

interface MockLayerset {
  layers: Map<string, Uint8Array>;
}

interface MockJob {
  state: "queued" | "running" | "done" | "error";
  ticks: number;
  totalTicks: number;
  result?: { layerset: string };
  error?: string;
  finish: () => string | null;
}

interface MockSession {
  layersets: Map<string, MockLayerset>;
  order: string[];
  phasesDone: Set<string>;
  counter: number;
}

const LAYERS = ["foreground", "background", "composite", "mask"];

function bytes(tag: string): Uint8Array {
  return new TextEncoder().encode(`PNGDATA:${tag}`);
}

export class MockService {
  sessions = new Map<string, MockSession>();
  jobs = new Map<string, MockJob>();
  private nextId = 1;
  /** polls needed before a job completes; >1 exercises progress updates */
  totalTicks = 4;

  fetchFn: FetchLike = async (url, init) => this.route(url, init);

  private id(prefix: string): string {
    return `${prefix}-${this.nextId++}`;
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  private makeLayerset(session: MockSession, phase: string): string {
    const gen = session.counter++;
    const layers = new Map<string, Uint8Array>();
    const prevId = session.order.at(-1);
    for (const layer of LAYERS) {
      if (phase === "replace_bg" && layer === "foreground" && prevId !== undefined) {
        layers.set(layer, session.layersets.get(prevId)!.layers.get(layer)!);
      } else {
        layers.set(layer, bytes(`${layer}:${gen}`));
      }
    }
    const id = this.id("ls");
    session.layersets.set(id, { layers });
    session.order.push(id);
    return id;
  }

  private route(url: string, init?: RequestInit): Response {
    const u = new URL(url, "http://mock");
    const parts = u.pathname.split("/").filter((p) => p.length > 0);
    const method = init?.method ?? "GET";

    if (parts[0] === "healthz") return this.json(200, { status: "ok" });

    if (parts[0] === "sessions" && parts.length === 1 && method === "POST") {
      const id = this.id("sess");
      this.sessions.set(id, {
        layersets: new Map(),
        order: [],
        phasesDone: new Set(),
        counter: 0,
      });
      return this.json(201, { id });
    }

    if (parts[0] === "sessions" && parts[2] === "jobs" && method === "POST") {
      const session = this.sessions.get(parts[1]);
      if (!session) return this.json(404, { detail: "no such session" });
      const body = JSON.parse(String(init?.body ?? "{}"));
      const phase: string = body.phase;
      const deps: Record<string, string> = {
        composite: "foreground",
        background: "composite",
      };
      if (deps[phase] && !session.phasesDone.has(deps[phase])) {
        return this.json(409, { detail: `${deps[phase]} phase required first` });
      }
      const jobId = this.id("job");
      const producesLayerset = phase !== "foreground" && phase !== "composite";
      this.jobs.set(jobId, {
        state: "queued",
        ticks: 0,
        totalTicks: this.totalTicks,
        finish: () => {
          session.phasesDone.add(phase);
          if (phase === "full" || phase === "replace_bg") {
            for (const p of ["foreground", "composite", "background"]) {
              session.phasesDone.add(p);
            }
          }
          return producesLayerset ? this.makeLayerset(session, phase) : null;
        },
      });
      return this.json(201, { id: jobId });
    }

    if (parts[0] === "jobs" && method === "GET") {
      const job = this.jobs.get(parts[1]);
      if (!job) return this.json(404, { detail: "no such job" });
      if (job.state === "queued" || job.state === "running") {
        job.ticks++;
        job.state = "running";
        if (job.ticks >= job.totalTicks) {
          const layerset = job.finish();
          job.state = "done";
          if (layerset !== null) job.result = { layerset };
        }
      }
      return this.json(200, {
        id: parts[1],
        state: job.state,
        progress: Math.min(job.ticks / job.totalTicks, 1),
        result: job.result,
        error: job.error,
      });
    }

    if (parts[0] === "sessions" && parts[2] === "layersets") {
      const session = this.sessions.get(parts[1]);
      if (!session) return this.json(404, { detail: "no such session" });
      if (parts.length === 3) return this.json(200, { layersets: session.order });
      const layerset = session.layersets.get(parts[3]);
      if (!layerset) return this.json(404, { detail: "no such layerset" });
      const data = layerset.layers.get(parts[4]);
      if (!data) return this.json(404, { detail: "no such layer" });
      return new Response(new Uint8Array(data).buffer, {
        status: 200,
        headers: { "content-type": "image/png" },
      });
    }

    return this.json(404, { detail: `unhandled route ${method} ${u.pathname}` });
  }
}
