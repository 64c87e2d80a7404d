/**
 * Turn a layout plus the session clock into a drawable scene description.
 *
 * The scene is a flat list of 2D primitives in projected world units; the
 * canvas painter applies one affine fit per frame. Keeping this pure (no
 * DOM) is what the tests rely on; fidelity of the projection itself is a
 * style choice, not a contract.
 */

import { Layout, NoteInfo, Vec3, notePosition } from "./layout.js";

export type Primitive =
  | { type: "circle"; x: number; y: number; r: number; color: string; fill: boolean }
  | { type: "polyline"; points: [number, number][]; color: string; width: number }
  | { type: "sprite"; x: number; y: number; r: number; color: string }
  | { type: "ring"; x: number; y: number; rOuter: number; rInner: number; color: string }
  | { type: "panel"; text: string };

export interface RenderOptions {
  /** HighlightedDimple: also draw the standard plane (default true). */
  showPlane?: boolean;
  /** Recently judged note ids to flash, noteId -> hit. */
  flashes?: Map<number, boolean>;
}

/** Tilted orthographic projection: x stays lateral, depth and height mix. */
export function project(p: Vec3): [number, number] {
  return [p[0] + p[1] * 0.25, -(p[2] * 0.85 + p[1] * 0.45)];
}

const NOTE_SPRITE_R = 0.018;
const GUIDE_WIDTH = 0.006;

export class UnknownKindError extends Error {}

export const LAYOUT_KINDS = [
  "StandardPath",
  "HighlightedDimple",
  "FourSplitPath",
  "DirectCurvedPath",
  "SemicircularTwoSplitPath",
  "Video",
] as const;

function colorOf(layout: Layout, dimple: number): string {
  const info = layout.dimples.find((d) => d.index === dimple);
  return info ? info.color : "#888888";
}

function handpanPrimitives(layout: Layout): Primitive[] {
  const out: Primitive[] = [];
  if (layout.dimples.length === 0) return out;
  const rim = Math.max(...layout.dimples.map((d) => Math.hypot(d.center[0], d.center[1])));
  const body = rim + 2 * layout.dimples[0].radiusM;
  const [cx, cy] = project([0, 0, 0]);
  out.push({ type: "circle", x: cx, y: cy, r: body, color: "#2a2a33", fill: true });
  for (const d of layout.dimples) {
    const [x, y] = project(d.center);
    out.push({ type: "circle", x, y, r: d.radiusM, color: d.color, fill: false });
  }
  return out;
}

function guidePrimitives(layout: Layout): Primitive[] {
  // one guide per dimple family; note paths of a dimple share geometry
  const seen = new Set<number>();
  const out: Primitive[] = [];
  for (const note of layout.notes) {
    if (seen.has(note.dimple)) continue;
    const path = layout.paths.get(note.id);
    if (!path) continue;
    seen.add(note.dimple);
    out.push({
      type: "polyline",
      points: path.points.map(project),
      color: colorOf(layout, note.dimple),
      width: GUIDE_WIDTH,
    });
  }
  return out;
}

function spritePrimitives(layout: Layout, tSession: number): Primitive[] {
  const out: Primitive[] = [];
  for (const note of layout.notes) {
    const pos = notePosition(layout, note, tSession);
    if (!pos) continue;
    const [x, y] = project(pos);
    out.push({ type: "sprite", x, y, r: NOTE_SPRITE_R, color: colorOf(layout, note.dimple) });
  }
  return out;
}

function ringPrimitives(layout: Layout, tSession: number): Primitive[] {
  const out: Primitive[] = [];
  const byId = new Map(layout.notes.map((n) => [n.id, n]));
  for (const ring of layout.rings.values()) {
    if (tSession < ring.t0Ms || tSession > ring.t1Ms) continue;
    const note = byId.get(ring.noteId);
    if (!note) continue;
    const dimple = layout.dimples.find((d) => d.index === note.dimple);
    if (!dimple) continue;
    const span = ring.t1Ms - ring.t0Ms;
    const u = span <= 0 ? 1 : (tSession - ring.t0Ms) / span;
    const inner = ring.outerRadiusM * Math.min(1, Math.max(0, u));
    const [x, y] = project(dimple.center);
    out.push({
      type: "ring",
      x,
      y,
      rOuter: ring.outerRadiusM,
      rInner: inner,
      color: dimple.color,
    });
  }
  return out;
}

function flashPrimitives(layout: Layout, flashes: Map<number, boolean>): Primitive[] {
  const out: Primitive[] = [];
  const byId = new Map(layout.notes.map((n) => [n.id, n]));
  for (const [noteId, hit] of flashes) {
    const note = byId.get(noteId);
    if (!note) continue;
    const dimple = layout.dimples.find((d) => d.index === note.dimple);
    if (!dimple) continue;
    const [x, y] = project(dimple.center);
    out.push({
      type: "circle",
      x,
      y,
      r: dimple.radiusM * 1.4,
      color: hit ? "#ffffff" : "#663333",
      fill: true,
    });
  }
  return out;
}

/** Scene for one frame; tSession is milliseconds since START on the server clock. */
export function renderLayout(
  kind: string,
  layout: Layout,
  tSession: number,
  options: RenderOptions = {},
): Primitive[] {
  if (!(LAYOUT_KINDS as readonly string[]).includes(kind)) {
    throw new UnknownKindError(`unknown layout kind ${JSON.stringify(kind)}`);
  }
  const scene: Primitive[] = [];
  if (options.flashes) scene.push(...flashPrimitives(layout, options.flashes));
  scene.push(...handpanPrimitives(layout));
  if (kind === "Video") {
    scene.push({ type: "panel", text: layout.mediaRef ?? "video" });
    return scene; // no highway, no sprites
  }
  const showPlane = options.showPlane ?? true;
  if (kind !== "HighlightedDimple" || showPlane) {
    scene.push(...guidePrimitives(layout));
    scene.push(...spritePrimitives(layout, tSession));
  }
  if (kind === "HighlightedDimple") {
    scene.push(...ringPrimitives(layout, tSession));
  }
  return scene;
}
