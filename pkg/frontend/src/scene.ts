/**
 * Map scene construction. A scene is a flat list of draw operations in
 * paint order; the canvas painter executes them verbatim. Keeping this
 * step pure makes the map testable without a DOM.
 */

import type { NetworkGeometry, Snapshot } from "./types.js";
import {
  ORDER_RED,
  STATION_PURPLE,
  formatClock,
  scenarioLabel,
  stationGlyphRadius,
  vehicleClassFor,
  vehicleStyle,
} from "./viewModel.js";

export type SceneOp =
  | { kind: "segment"; x1: number; y1: number; x2: number; y2: number; width: number; color: string }
  | { kind: "dot"; x: number; y: number; r: number; color: string }
  | { kind: "halo"; x: number; y: number; r: number; color: string }
  | { kind: "hex"; x: number; y: number; r: number; color: string }
  | { kind: "square"; x: number; y: number; r: number; color: string }
  | { kind: "text"; x: number; y: number; text: string; color: string; size: number };

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  heightPx: number;
}

const ROAD_GREY = "#c8c8c8";
const LEGEND_INK = "#222222";
const HALO_YELLOW = "#ffd92f";
const PAUSED_INK = "#d7301f";

export function fitTransform(
  geometry: NetworkGeometry,
  widthPx: number,
  heightPx: number,
  padPx = 20,
): ViewTransform {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const [, x, y] of geometry.nodes) {
    minX = Math.min(minX, x);
    minY = Math.min(minY, y);
    maxX = Math.max(maxX, x);
    maxY = Math.max(maxY, y);
  }
  if (!Number.isFinite(minX)) {
    return { scale: 1, offsetX: padPx, offsetY: padPx, heightPx };
  }
  const spanX = Math.max(maxX - minX, 1);
  const spanY = Math.max(maxY - minY, 1);
  const scale = Math.min((widthPx - 2 * padPx) / spanX, (heightPx - 2 * padPx) / spanY);
  return {
    scale,
    offsetX: padPx - minX * scale,
    offsetY: padPx - minY * scale,
    heightPx,
  };
}

/** Meters to pixels, with the y axis flipped so larger y draws higher. */
export function project(t: ViewTransform, xM: number, yM: number): [number, number] {
  return [xM * t.scale + t.offsetX, t.heightPx - (yM * t.scale + t.offsetY)];
}

export function buildMapScene(
  geometry: NetworkGeometry,
  snapshot: Snapshot | null,
  widthPx: number,
  heightPx: number,
): SceneOp[] {
  const t = fitTransform(geometry, widthPx, heightPx);
  const ops: SceneOp[] = [];
  const at = new Map<number, [number, number]>();
  for (const [id, x, y] of geometry.nodes) at.set(id, [x, y]);

  for (const [a, b] of geometry.edges) {
    const pa = at.get(a);
    const pb = at.get(b);
    if (!pa || !pb) continue;
    const [x1, y1] = project(t, pa[0], pa[1]);
    const [x2, y2] = project(t, pb[0], pb[1]);
    ops.push({ kind: "segment", x1, y1, x2, y2, width: 1.5, color: ROAD_GREY });
  }

  if (snapshot === null) {
    ops.push({
      kind: "text",
      x: 12,
      y: 20,
      text: "waiting for snapshots",
      color: LEGEND_INK,
      size: 14,
    });
    return ops;
  }

  for (const station of snapshot.stations) {
    const [x, y] = project(t, station.x_m, station.y_m);
    ops.push({ kind: "hex", x, y, r: stationGlyphRadius(station), color: STATION_PURPLE });
  }

  for (const order of snapshot.waiting_orders) {
    const [x, y] = project(t, order.x_m, order.y_m);
    ops.push({ kind: "square", x, y, r: 3, color: ORDER_RED });
  }

  const cls = vehicleClassFor(snapshot.scenario);
  for (const v of snapshot.vehicles) {
    const style = vehicleStyle(v, cls);
    const [x, y] = project(t, v.x_m, v.y_m);
    if (style.halo) {
      ops.push({ kind: "halo", x, y, r: style.radius + 4, color: HALO_YELLOW });
    }
    ops.push({ kind: "dot", x, y, r: style.radius, color: style.color });
  }

  const legend = `${scenarioLabel(snapshot.scenario)}  ${formatClock(snapshot.sim_clock_s)}`;
  ops.push({ kind: "text", x: 12, y: 20, text: legend, color: LEGEND_INK, size: 14 });
  if (snapshot.paused) {
    ops.push({ kind: "text", x: 12, y: 38, text: "paused", color: PAUSED_INK, size: 13 });
  }
  return ops;
}
