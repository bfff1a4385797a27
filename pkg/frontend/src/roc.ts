import type { RocExport } from "./client.js";
import { formatReal, wireToNumber } from "./wire.js";

/** One curve point with the threshold decoded and its display text fixed. */
export interface CurvePoint {
  threshold: number;
  thresholdText: string;
  fpr: number;
  tpr: number;
}

/** Decode exported points, keeping the wire spelling ("inf") for display. */
export function curvePoints(exported: RocExport): CurvePoint[] {
  return exported.points.map((p) => ({
    threshold: wireToNumber(p.threshold),
    thresholdText: typeof p.threshold === "string" ? p.threshold : formatReal(p.threshold),
    fpr: p.fpr,
    tpr: p.tpr,
  }));
}

/**
 * Index of the curve point nearest to a dragged false-positive rate.
 *
 * Dragging past either end clamps to that terminal point. In range, the
 * nearest point wins; ties (including vertical runs, where several points
 * share one fpr) resolve to the latest point, the highest tpr available at
 * that rate.
 */
export function snapIndex(points: CurvePoint[], fpr: number): number {
  if (points.length === 0) throw new Error("empty curve");
  if (fpr < points[0].fpr) return 0;
  if (fpr > points[points.length - 1].fpr) return points.length - 1;
  let best = 0;
  let bestDist = Infinity;
  for (let i = 0; i < points.length; i++) {
    const dist = Math.abs(points[i].fpr - fpr);
    if (dist <= bestDist) {
      best = i;
      bestDist = dist;
    }
  }
  return best;
}

export function clampIndex(points: CurvePoint[], index: number): number {
  if (points.length === 0) throw new Error("empty curve");
  return Math.min(Math.max(index, 0), points.length - 1);
}

/** Index of the top-left-most point: maximal tpr - fpr, earliest on ties. */
export function bestIndex(points: CurvePoint[]): number {
  if (points.length === 0) throw new Error("empty curve");
  let best = 0;
  for (let i = 1; i < points.length; i++) {
    if (points[i].tpr - points[i].fpr > points[best].tpr - points[best].fpr) best = i;
  }
  return best;
}

/** Sensitivity is the exported true-positive rate, read through unchanged. */
export function sensitivity(point: CurvePoint): number {
  return point.tpr;
}

/** Specificity is 1 - fpr: the one piece of display arithmetic the UI does. */
export function specificity(point: CurvePoint): number {
  return 1 - point.fpr;
}
