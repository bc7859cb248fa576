import { describe, expect, it } from "vitest";

import {
  canSynthesize,
  cellActive,
  fromSparse,
  markSaved,
  sameNotes,
  toSparse,
  toggleCell,
} from "../src/grid.js";
import type { SparseRoll } from "../src/types.js";

const roll = (notes: SparseRoll["notes"]): SparseRoll => ({
  frame_rate: 62.5,
  pitch_min: 0,
  pitch_max: 127,
  notes,
});

describe("fromSparse", () => {
  it("normalizes overlapping and touching spans", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 0, offset_frame: 5 },
      { pitch: 60, onset_frame: 3, offset_frame: 8 },
      { pitch: 60, onset_frame: 8, offset_frame: 10 },
      { pitch: 62, onset_frame: 2, offset_frame: 4 },
    ]));
    expect(grid.spans).toEqual([
      { pitch: 60, onset_frame: 0, offset_frame: 10 },
      { pitch: 62, onset_frame: 2, offset_frame: 4 },
    ]);
    expect(grid.dirty).toBe(false);
  });

  it("keeps a usable grid for an empty score", () => {
    const grid = fromSparse(roll([]));
    expect(grid.spans).toEqual([]);
    expect(grid.frames).toBeGreaterThan(0);
  });
});

describe("toggleCell", () => {
  it("is an involution on every cell of a mixed grid", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 2, offset_frame: 9 },
      { pitch: 64, onset_frame: 0, offset_frame: 4 },
    ]));
    for (let pitch = 58; pitch <= 66; pitch++) {
      for (let frame = 0; frame < grid.frames; frame++) {
        const once = toggleCell(grid, pitch, frame);
        const twice = toggleCell(once, pitch, frame);
        expect(sameNotes(twice, grid)).toBe(true);
        expect(cellActive(once, pitch, frame)).toBe(
          !cellActive(grid, pitch, frame),
        );
      }
    }
  });

  it("is an involution under randomized sequences", () => {
    // toggle a random cell, toggle it again, compare; then keep the
    // first toggle and recurse so the base state keeps changing
    let seed = 1234567;
    const rand = (n: number) => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed % n;
    };
    let grid = fromSparse(roll([
      { pitch: 70, onset_frame: 1, offset_frame: 20 },
    ]));
    for (let i = 0; i < 300; i++) {
      const pitch = 60 + rand(24);
      const frame = rand(grid.frames);
      const once = toggleCell(grid, pitch, frame);
      expect(sameNotes(toggleCell(once, pitch, frame), grid)).toBe(true);
      grid = once;
    }
  });

  it("splits a span when clearing an interior cell", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 0, offset_frame: 10 },
    ]));
    const split = toggleCell(grid, 60, 4);
    expect(split.spans).toEqual([
      { pitch: 60, onset_frame: 0, offset_frame: 4 },
      { pitch: 60, onset_frame: 5, offset_frame: 10 },
    ]);
    expect(split.dirty).toBe(true);
  });

  it("merges spans when filling the gap between them", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 0, offset_frame: 4 },
      { pitch: 60, onset_frame: 5, offset_frame: 10 },
    ]));
    const merged = toggleCell(grid, 60, 4);
    expect(merged.spans).toEqual([
      { pitch: 60, onset_frame: 0, offset_frame: 10 },
    ]);
  });

  it("trims span edges", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 3, offset_frame: 6 },
    ]));
    expect(toggleCell(grid, 60, 3).spans).toEqual([
      { pitch: 60, onset_frame: 4, offset_frame: 6 },
    ]);
    expect(toggleCell(grid, 60, 5).spans).toEqual([
      { pitch: 60, onset_frame: 3, offset_frame: 5 },
    ]);
  });

  it("removes a single-cell span entirely", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 3, offset_frame: 4 },
    ]));
    expect(toggleCell(grid, 60, 3).spans).toEqual([]);
  });

  it("ignores out-of-range cells", () => {
    const grid = fromSparse(roll([
      { pitch: 60, onset_frame: 0, offset_frame: 2 },
    ]));
    expect(toggleCell(grid, 200, 0)).toBe(grid);
    expect(toggleCell(grid, 60, -1)).toBe(grid);
  });
});

describe("toSparse", () => {
  it("round trips through fromSparse", () => {
    const original = roll([
      { pitch: 60, onset_frame: 0, offset_frame: 10 },
      { pitch: 72, onset_frame: 4, offset_frame: 8 },
    ]);
    const grid = fromSparse(original);
    expect(toSparse(grid).notes).toEqual(original.notes);
    expect(toSparse(grid).frame_rate).toBe(62.5);
  });
});

describe("markSaved", () => {
  it("clears the dirty flag without touching spans", () => {
    const grid = toggleCell(
      fromSparse(roll([{ pitch: 60, onset_frame: 0, offset_frame: 2 }])),
      60,
      5,
    );
    expect(grid.dirty).toBe(true);
    const saved = markSaved(grid);
    expect(saved.dirty).toBe(false);
    expect(sameNotes(saved, grid)).toBe(true);
  });
});

describe("canSynthesize", () => {
  const grid = fromSparse(roll([]));
  it("requires both a score and an instrument", () => {
    expect(canSynthesize(null, "piano")).toBe(false);
    expect(canSynthesize(grid, null)).toBe(false);
    expect(canSynthesize(grid, "")).toBe(false);
    expect(canSynthesize(grid, "piano")).toBe(true);
  });
});
