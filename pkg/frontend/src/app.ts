/**
 * Minimal browser shell: a canvas for box layout with the latent-grid
 * snapping overlay, prompt fields, phase buttons, layer tabs, and a
 * history strip with the comparison view.  Everything rendered is fetched
 * from the service; this file only wires DOM events to the view models.
 */

import { boxFromDrag, CanvasBox, fromLatentBox, snapGridLines, toLatentBox } from "./box.js";
import { LayerName, Phase, ServiceClient } from "./api.js";
import { CompareView } from "./compare.js";
import { LAYER_TABS, SessionView } from "./session.js";

interface AppElements {
  canvas: HTMLCanvasElement;
  promptFg: HTMLInputElement;
  promptBg: HTMLInputElement;
  promptAll: HTMLInputElement;
  status: HTMLElement;
  progress: HTMLProgressElement;
  tabBar: HTMLElement;
  layerImage: HTMLImageElement;
  historyList: HTMLElement;
  phaseButtons: Record<Phase, HTMLButtonElement>;
}

export class App {
  boxes: CanvasBox[] = [];
  private drag: { x: number; y: number } | null = null;
  private compare: CompareView;

  constructor(
    private els: AppElements,
    private client: ServiceClient,
    private session: SessionView,
  ) {
    this.compare = new CompareView(client, session.state.sessionId);
    this.bindCanvas();
    this.bindPhases();
    this.redraw();
  }

  static async boot(els: AppElements, base: string): Promise<App> {
    const client = new ServiceClient(base);
    const session = await SessionView.create(client);
    await session.restore();
    return new App(els, client, session);
  }

  private bindCanvas(): void {
    const c = this.els.canvas;
    c.addEventListener("pointerdown", (e) => {
      this.drag = { x: e.offsetX, y: e.offsetY };
    });
    c.addEventListener("pointerup", (e) => {
      if (!this.drag) return;
      const box = boxFromDrag(
        this.drag.x, this.drag.y, e.offsetX, e.offsetY, c.width, c.height);
      this.drag = null;
      if (box) this.boxes.push(box);
      this.redraw();
    });
  }

  private bindPhases(): void {
    for (const [phase, button] of Object.entries(this.els.phaseButtons)) {
      button.addEventListener("click", () => void this.run(phase as Phase));
    }
  }

  config(): Record<string, unknown> {
    return {
      prompt_fg: this.els.promptFg.value,
      prompt_bg: this.els.promptBg.value,
      prompt_all: this.els.promptAll.value || null,
      boxes: this.boxes.map(toLatentBox),
    };
  }

  async run(phase: Phase): Promise<void> {
    const gate = this.session.canSubmit(phase);
    this.els.status.textContent = gate.message;
    for (const b of Object.values(this.els.phaseButtons)) b.disabled = true;
    try {
      const job = await this.session.submitAndPoll(phase, this.config(), (p) => {
        this.els.progress.value = p;
      });
      this.els.status.textContent =
        job.state === "done" ? "done" : this.session.state.statusMessage;
      this.renderTabs();
      this.renderHistory();
    } finally {
      for (const b of Object.values(this.els.phaseButtons)) b.disabled = false;
    }
  }

  showTab(layer: LayerName): void {
    const latest = this.session.state.history.at(-1);
    if (latest === undefined) return;
    this.els.layerImage.src =
      this.client.layerUrl(this.session.state.sessionId, latest, layer);
  }

  private renderTabs(): void {
    this.els.tabBar.replaceChildren();
    for (const layer of LAYER_TABS) {
      const tab = document.createElement("button");
      tab.textContent = layer;
      tab.addEventListener("click", () => this.showTab(layer));
      this.els.tabBar.appendChild(tab);
    }
    this.showTab("composite");
  }

  private renderHistory(): void {
    this.els.historyList.replaceChildren();
    for (const id of this.session.state.history) {
      const item = document.createElement("button");
      item.textContent = id;
      item.addEventListener("click", () => void this.compareWithLatest(id));
      this.els.historyList.appendChild(item);
    }
  }

  private async compareWithLatest(id: string): Promise<void> {
    const latest = this.session.state.history.at(-1);
    if (latest === undefined) return;
    await this.compare.load(id, latest, "foreground");
  }

  /** Boxes plus the snapped outline each will actually produce. */
  redraw(): void {
    const ctx = this.els.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.els.canvas;
    ctx.clearRect(0, 0, width, height);
    const grid = snapGridLines(width, height);
    ctx.strokeStyle = "#ddd";
    for (const x of grid.xs) { ctx.beginPath(); ctx.moveTo(x, 0); ctx.lineTo(x, height); ctx.stroke(); }
    for (const y of grid.ys) { ctx.beginPath(); ctx.moveTo(0, y); ctx.lineTo(width, y); ctx.stroke(); }
    for (const box of this.boxes) {
      ctx.strokeStyle = "#06c";
      ctx.strokeRect(box.cx - box.w / 2, box.cy - box.h / 2, box.w, box.h);
      const snapped = fromLatentBox(toLatentBox(box), box.promptSlot);
      ctx.strokeStyle = "#f80";
      ctx.strokeRect(
        snapped.cx - snapped.w / 2, snapped.cy - snapped.h / 2, snapped.w, snapped.h);
    }
  }
}
