// Damage-mask drawing layer.
//
// The mask lives at the image's native resolution as one byte per pixel,
// 0 or 255, no matter how the canvas on screen is zoomed or panned. A
// brush stamp covers every pixel whose center lies within the brush
// radius of the stroke path (a disc for a click, a capsule per segment),
// computed directly from the distance so the painted set is exact rather
// than an approximation from stepped stamping.

import { encodeGrayPng, decodeGrayPng } from "./png.js";

export interface StrokePoint {
  x: number;
  y: number;
}

export class MaskLayer {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
      throw new Error(`bad mask dimensions ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height);
  }

  clear(): void {
    this.data.fill(0);
  }

  isEmpty(): boolean {
    return !this.data.some((v) => v !== 0);
  }

  paintedCount(): number {
    let n = 0;
    for (let i = 0; i < this.data.length; i++) {
      if (this.data[i] === 255) n++;
    }
    return n;
  }

  // single click: disc of radius r centered on the pixel
  paintDot(cx: number, cy: number, radius: number): void {
    this.paintStroke([{ x: cx, y: cy }], radius);
  }

  paintStroke(points: StrokePoint[], radius: number): void {
    if (radius < 1) throw new Error(`brush radius must be >= 1, got ${radius}`);
    if (points.length === 0) return;
    const r2 = radius * radius;
    const segments = points.length === 1
      ? [[points[0], points[0]] as const]
      : points.slice(1).map((p, i) => [points[i], p] as const);
    for (const [a, b] of segments) {
      const x0 = Math.max(0, Math.floor(Math.min(a.x, b.x) - radius));
      const x1 = Math.min(this.width - 1, Math.ceil(Math.max(a.x, b.x) + radius));
      const y0 = Math.max(0, Math.floor(Math.min(a.y, b.y) - radius));
      const y1 = Math.min(this.height - 1, Math.ceil(Math.max(a.y, b.y) + radius));
      for (let y = y0; y <= y1; y++) {
        for (let x = x0; x <= x1; x++) {
          if (distanceSqToSegment(x, y, a, b) <= r2) {
            this.data[y * this.width + x] = 255;
          }
        }
      }
    }
  }

  toPng(): Uint8Array {
    return encodeGrayPng(this.width, this.height, this.data);
  }

  static fromPng(bytes: Uint8Array): MaskLayer {
    const { width, height, pixels } = decodeGrayPng(bytes);
    const layer = new MaskLayer(width, height);
    for (let i = 0; i < pixels.length; i++) {
      if (pixels[i] !== 0 && pixels[i] !== 255) {
        throw new Error(`mask pixels must be 0 or 255, found ${pixels[i]}`);
      }
    }
    layer.data.set(pixels);
    return layer;
  }
}

export function distanceSqToSegment(px: number, py: number, a: StrokePoint, b: StrokePoint): number {
  const abx = b.x - a.x;
  const aby = b.y - a.y;
  const lengthSq = abx * abx + aby * aby;
  let t = 0;
  if (lengthSq > 0) {
    t = ((px - a.x) * abx + (py - a.y) * aby) / lengthSq;
    t = Math.max(0, Math.min(1, t));
  }
  const dx = px - (a.x + t * abx);
  const dy = py - (a.y + t * aby);
  return dx * dx + dy * dy;
}

export interface ViewTransform {
  zoom: number; // on-screen pixels per image pixel
  panX: number; // canvas position of the image's left edge
  panY: number;
}

// canvas event coordinates -> native image pixel, independent of zoom level
export function screenToImage(sx: number, sy: number, view: ViewTransform): StrokePoint {
  if (view.zoom <= 0) throw new Error("zoom must be positive");
  return {
    x: Math.floor((sx - view.panX) / view.zoom),
    y: Math.floor((sy - view.panY) / view.zoom),
  };
}
