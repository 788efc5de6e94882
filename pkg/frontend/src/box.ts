/**
 * Canvas-side box model and its conversion to the latent-space layout the
 * service consumes.  The image is 8x the latent grid; conversion floors,
 * so edges snap down to the containing latent pixel.  The round trip
 * image -> latent -> image therefore moves any edge by less than one
 * latent pixel (8 image pixels).
 */

export const LATENT_SCALE = 8;

export interface CanvasBox {
  /** center and extent in image pixels */
  cx: number;
  cy: number;
  w: number;
  h: number;
  /** which foreground prompt slot this box uses */
  promptSlot: number;
}

export interface LatentBoxSpec {
  cx: number;
  cy: number;
  w: number;
  h: number;
}

/** Build a box from a drag gesture; returns null for degenerate drags. */
export function boxFromDrag(
  x0: number, y0: number, x1: number, y1: number,
  canvasW: number, canvasH: number, promptSlot = 0,
): CanvasBox | null {
  const clamp = (v: number, hi: number) => Math.min(Math.max(v, 0), hi);
  const ax = clamp(Math.min(x0, x1), canvasW);
  const bx = clamp(Math.max(x0, x1), canvasW);
  const ay = clamp(Math.min(y0, y1), canvasH);
  const by = clamp(Math.max(y0, y1), canvasH);
  if (bx - ax < 1 || by - ay < 1) return null;
  return {
    cx: (ax + bx) / 2,
    cy: (ay + by) / 2,
    w: bx - ax,
    h: by - ay,
    promptSlot,
  };
}

/** Image-pixel box to latent units, flooring each quantity. */
export function toLatentBox(box: CanvasBox): LatentBoxSpec {
  return {
    cx: Math.floor(box.cx / LATENT_SCALE),
    cy: Math.floor(box.cy / LATENT_SCALE),
    w: Math.floor(box.w / LATENT_SCALE),
    h: Math.floor(box.h / LATENT_SCALE),
  };
}

/** Latent box back to image pixels, for redrawing the snapped overlay. */
export function fromLatentBox(spec: LatentBoxSpec, promptSlot = 0): CanvasBox {
  return {
    cx: spec.cx * LATENT_SCALE,
    cy: spec.cy * LATENT_SCALE,
    w: spec.w * LATENT_SCALE,
    h: spec.h * LATENT_SCALE,
    promptSlot,
  };
}

/** Grid lines (image-pixel coordinates) for the snapping overlay. */
export function snapGridLines(canvasW: number, canvasH: number): { xs: number[]; ys: number[] } {
  const xs: number[] = [];
  const ys: number[] = [];
  for (let x = 0; x <= canvasW; x += LATENT_SCALE) xs.push(x);
  for (let y = 0; y <= canvasH; y += LATENT_SCALE) ys.push(y);
  return { xs, ys };
}
