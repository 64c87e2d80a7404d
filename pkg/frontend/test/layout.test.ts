import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { Layout, notePosition, parseLayoutBlob, pointAt } from "../src/layout.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function loadFixture(kind: string): Layout {
  const file = join(FIXTURES, `${kind.toLowerCase()}.blob`);
  return parseLayoutBlob(kind, readFileSync(file, "utf-8").split("\n"));
}

describe("layout blob parsing", () => {
  it("reads the standard path fixture", () => {
    const layout = loadFixture("StandardPath");
    expect(layout.travelTimeMs).toBe(2000);
    expect(layout.scrollSpeedMps).toBe(0.6);
    expect(layout.dimples).toHaveLength(8);
    expect(layout.notes).toHaveLength(4);
    expect(layout.paths.size).toBe(4);
    expect(layout.mediaRef).toBeNull();
    const colors = new Set(layout.dimples.map((d) => d.color));
    expect(colors.size).toBe(8);
  });

  it("reads ring schedules for the highlighted kind", () => {
    const layout = loadFixture("HighlightedDimple");
    expect(layout.rings.size).toBe(4);
    const ring = layout.rings.get(0)!;
    expect(ring.t1Ms - ring.t0Ms).toBe(layout.travelTimeMs);
  });

  it("reads the video fixture as pathless with media", () => {
    const layout = loadFixture("Video");
    expect(layout.paths.size).toBe(0);
    expect(layout.mediaRef).toMatch(/\.mp4$/);
  });

  it("rejects unknown line tags", () => {
    expect(() => parseLayoutBlob("StandardPath", ["BOGUS 1 2 3"])).toThrow();
  });

  it("rejects truncated PATH lines", () => {
    expect(() => parseLayoutBlob("StandardPath", ["PATH 0 2 1 2 3"])).toThrow();
  });
});

describe("note positioning", () => {
  it("follows the arrival contract", () => {
    const layout = loadFixture("StandardPath");
    const note = layout.notes[0];
    const path = layout.paths.get(note.id)!;
    const end = path.points[path.points.length - 1];

    expect(notePosition(layout, note, note.onsetMs)).toEqual(end);
    expect(notePosition(layout, note, note.onsetMs - layout.travelTimeMs)).toEqual(
      path.points[0],
    );
    const mid = notePosition(layout, note, note.onsetMs - layout.travelTimeMs / 2)!;
    for (let axis = 0; axis < 3; axis++) {
      expect(mid[axis]).toBeCloseTo((path.points[0][axis] + end[axis]) / 2, 12);
    }
    expect(notePosition(layout, note, note.onsetMs + 1)).toBeNull();
    expect(notePosition(layout, note, note.onsetMs - layout.travelTimeMs - 1)).toBeNull();
  });

  it("hits curved endpoints exactly at the onset", () => {
    for (const kind of ["DirectCurvedPath", "SemicircularTwoSplitPath"]) {
      const layout = loadFixture(kind);
      for (const note of layout.notes) {
        const path = layout.paths.get(note.id)!;
        expect(notePosition(layout, note, note.onsetMs)).toEqual(
          path.points[path.points.length - 1],
        );
      }
    }
  });

  it("interpolates by arc length", () => {
    const path = {
      noteId: 0,
      points: [[0, 0, 0], [1, 0, 0], [1, 1, 0]] as [number, number, number][],
      cum: [0, 1, 2],
    };
    expect(pointAt(path, 0.25)).toEqual([0.5, 0, 0]);
    expect(pointAt(path, 0.75)).toEqual([1, 0.5, 0]);
    expect(pointAt(path, 1)).toEqual([1, 1, 0]);
  });
});
