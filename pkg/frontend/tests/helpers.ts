import { decodeGrayPng } from "../src/png.js";
import type { StrokePoint } from "../src/mask.js";

// Independent stroke-geometry oracle: a pixel belongs to the stroke when
// its center lies within `radius` of the polyline. Distances are computed
// from scratch here, not via the module under test.
export const strokeOracle = (
  width: number,
  height: number,
  points: StrokePoint[],
  radius: number,
): Set<number> => {
  const segs: Array<[StrokePoint, StrokePoint]> = [];
  if (points.length === 1) {
    segs.push([points[0], points[0]]);
  } else {
    for (let i = 1; i < points.length; i++) segs.push([points[i - 1], points[i]]);
  }
  const hit = new Set<number>();
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (const [a, b] of segs) {
        const vx = b.x - a.x;
        const vy = b.y - a.y;
        const len2 = vx * vx + vy * vy;
        const t = len2 === 0 ? 0 : Math.min(1, Math.max(0, ((x - a.x) * vx + (y - a.y) * vy) / len2));
        const dx = x - a.x - t * vx;
        const dy = y - a.y - t * vy;
        if (Math.sqrt(dx * dx + dy * dy) <= radius) {
          hit.add(y * width + x);
          break;
        }
      }
    }
  }
  return hit;
};

// 255-pixel index set of an exported mask PNG; trips on any non-binary value
export const paintedSet = (png: Uint8Array): Set<number> => {
  const { pixels } = decodeGrayPng(png);
  const set = new Set<number>();
  for (let i = 0; i < pixels.length; i++) {
    if (pixels[i] === 255) set.add(i);
    else if (pixels[i] !== 0) throw new Error(`non-binary pixel ${pixels[i]}`);
  }
  return set;
};

export const sameSet = (a: Set<number>, b: Set<number>): boolean =>
  a.size === b.size && [...a].every((v) => b.has(v));
