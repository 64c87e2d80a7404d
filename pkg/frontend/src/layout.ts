/**
 * Layout blob parsing and note-sprite positioning.
 *
 * The server streams the blob between LAYOUT and ENDLAYOUT. Sprites use
 * the same arrival contract as the server geometry: a note travels its
 * path over travelTimeMs by arc length and sits on the endpoint exactly
 * at its onset.
 */

export type Vec3 = [number, number, number];

export interface DimpleInfo {
  index: number;
  center: Vec3;
  radiusM: number;
  color: string;
}

export interface NoteInfo {
  id: number;
  dimple: number;
  onsetMs: number;
}

export interface PathInfo {
  noteId: number;
  points: Vec3[];
  cum: number[]; // cumulative arc length per vertex
}

export interface RingInfo {
  noteId: number;
  t0Ms: number;
  t1Ms: number;
  outerRadiusM: number;
}

export interface Layout {
  kind: string;
  travelTimeMs: number;
  scrollSpeedMps: number;
  dimples: DimpleInfo[];
  notes: NoteInfo[];
  paths: Map<number, PathInfo>;
  rings: Map<number, RingInfo>;
  mediaRef: string | null;
}

export class LayoutError extends Error {}

function dist(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

export function parseLayoutBlob(kind: string, lines: string[]): Layout {
  const layout: Layout = {
    kind,
    travelTimeMs: 0,
    scrollSpeedMps: 0,
    dimples: [],
    notes: [],
    paths: new Map(),
    rings: new Map(),
    mediaRef: null,
  };
  for (const raw of lines) {
    if (!raw.trim()) continue;
    const f = raw.split(" ");
    switch (f[0]) {
      case "TRAVEL":
        layout.travelTimeMs = Number(f[1]);
        layout.scrollSpeedMps = Number(f[2]);
        break;
      case "DIMPLE":
        layout.dimples.push({
          index: Number(f[1]),
          center: [Number(f[2]), Number(f[3]), Number(f[4])],
          radiusM: Number(f[5]),
          color: f[6],
        });
        break;
      case "NOTE":
        layout.notes.push({ id: Number(f[1]), dimple: Number(f[2]), onsetMs: Number(f[3]) });
        break;
      case "PATH": {
        const noteId = Number(f[1]);
        const n = Number(f[2]);
        const coords = f.slice(3).map(Number);
        if (coords.length !== 3 * n || coords.some(Number.isNaN)) {
          throw new LayoutError(`bad PATH line for note ${noteId}`);
        }
        const points: Vec3[] = [];
        for (let i = 0; i < n; i++) {
          points.push([coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]]);
        }
        const cum = [0];
        for (let i = 1; i < n; i++) {
          cum.push(cum[i - 1] + dist(points[i - 1], points[i]));
        }
        layout.paths.set(noteId, { noteId, points, cum });
        break;
      }
      case "RING":
        layout.rings.set(Number(f[1]), {
          noteId: Number(f[1]),
          t0Ms: Number(f[2]),
          t1Ms: Number(f[3]),
          outerRadiusM: Number(f[4]),
        });
        break;
      case "MEDIA":
        layout.mediaRef = f.slice(1).join(" ");
        break;
      default:
        throw new LayoutError(`unknown layout line ${JSON.stringify(f[0])}`);
    }
  }
  return layout;
}

/** Arc-length point along a path, u in [0, 1]; u >= 1 is the endpoint exactly. */
export function pointAt(path: PathInfo, u: number): Vec3 {
  const pts = path.points;
  if (u <= 0) return pts[0];
  if (u >= 1) return pts[pts.length - 1];
  const total = path.cum[path.cum.length - 1];
  const target = u * total;
  for (let i = 1; i < pts.length; i++) {
    if (target <= path.cum[i]) {
      const seg = path.cum[i] - path.cum[i - 1];
      const w = seg === 0 ? 0 : (target - path.cum[i - 1]) / seg;
      const a = pts[i - 1];
      const b = pts[i];
      return [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])];
    }
  }
  return pts[pts.length - 1];
}

/**
 * Sprite position at session time t, or null outside the approach window
 * [onset - travel, onset].
 */
export function notePosition(layout: Layout, note: NoteInfo, tMs: number): Vec3 | null {
  const path = layout.paths.get(note.id);
  if (!path) return null;
  const start = note.onsetMs - layout.travelTimeMs;
  if (tMs < start || tMs > note.onsetMs) return null;
  if (tMs >= note.onsetMs) return path.points[path.points.length - 1];
  return pointAt(path, (tMs - start) / layout.travelTimeMs);
}
