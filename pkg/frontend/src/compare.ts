/**
 * Side-by-side comparison of two layersets from the history, one layer at
 * a time, with a shared pan/zoom transform.  Missing layers render as a
 * placeholder tile instead of failing.
 */

import { LayerName, ServiceClient } from "./api.js";

export interface Pane {
  layersetId: string;
  bytes: Uint8Array | null; // null = placeholder
}

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export class CompareView {
  left: Pane | null = null;
  right: Pane | null = null;
  transform: ViewTransform = { zoom: 1, panX: 0, panY: 0 };

  constructor(private client: ServiceClient, private sessionId: string) {}

  async load(leftId: string, rightId: string, layer: LayerName): Promise<void> {
    const [a, b] = await Promise.all([
      this.client.fetchLayer(this.sessionId, leftId, layer),
      this.client.fetchLayer(this.sessionId, rightId, layer),
    ]);
    this.left = { layersetId: leftId, bytes: a };
    this.right = { layersetId: rightId, bytes: b };
  }

  /** Both panes move together; there is one transform, not two. */
  panBy(dx: number, dy: number): void {
    this.transform.panX += dx;
    this.transform.panY += dy;
  }

  zoomAt(factor: number, x: number, y: number): void {
    const t = this.transform;
    t.panX = x - (x - t.panX) * factor;
    t.panY = y - (y - t.panY) * factor;
    t.zoom *= factor;
  }

  panesIdentical(): boolean {
    const a = this.left?.bytes;
    const b = this.right?.bytes;
    if (!a || !b || a.length !== b.length) return false;
    return a.every((v, i) => v === b[i]);
  }
}
