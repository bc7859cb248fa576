/**
 * Pure pianoroll grid state: sparse note spans plus edit bookkeeping.
 *
 * Spans are kept normalized (sorted, and maximal per pitch: no overlaps,
 * no touching neighbors), which makes toggleCell an involution and keeps
 * the UI representation identical to the server's sparse form.
 */

import type { NoteSpan, SparseRoll } from "./types.js";

export interface GridState {
  frameRate: number;
  pitchMin: number;
  pitchMax: number;
  /** total frames on the grid (may exceed the last span's end) */
  frames: number;
  spans: NoteSpan[];
  /** true iff local edits have not been PUT back to the server */
  dirty: boolean;
}

const MIN_FRAMES = 32;

function normalizePitchRow(frames: Set<number>, pitch: number): NoteSpan[] {
  const sorted = [...frames].sort((a, b) => a - b);
  const spans: NoteSpan[] = [];
  for (const frame of sorted) {
    const last = spans[spans.length - 1];
    if (last !== undefined && frame === last.offset_frame) {
      last.offset_frame = frame + 1;
    } else {
      spans.push({ pitch, onset_frame: frame, offset_frame: frame + 1 });
    }
  }
  return spans;
}

function sortSpans(spans: NoteSpan[]): NoteSpan[] {
  return spans.sort(
    (a, b) => a.pitch - b.pitch || a.onset_frame - b.onset_frame,
  );
}

export function fromSparse(roll: SparseRoll, minFrames = MIN_FRAMES): GridState {
  // re-normalize defensively: merge anything overlapping or adjacent
  const byPitch = new Map<number, Set<number>>();
  for (const span of roll.notes) {
    let row = byPitch.get(span.pitch);
    if (row === undefined) {
      row = new Set();
      byPitch.set(span.pitch, row);
    }
    for (let f = span.onset_frame; f < span.offset_frame; f++) row.add(f);
  }
  const spans: NoteSpan[] = [];
  for (const [pitch, row] of byPitch) {
    spans.push(...normalizePitchRow(row, pitch));
  }
  const lastFrame = Math.max(0, ...spans.map((s) => s.offset_frame));
  return {
    frameRate: roll.frame_rate,
    pitchMin: roll.pitch_min,
    pitchMax: roll.pitch_max,
    frames: Math.max(minFrames, lastFrame),
    spans: sortSpans(spans),
    dirty: false,
  };
}

export function toSparse(state: GridState): SparseRoll {
  return {
    frame_rate: state.frameRate,
    pitch_min: state.pitchMin,
    pitch_max: state.pitchMax,
    notes: state.spans.map((s) => ({ ...s })),
  };
}

export function cellActive(
  state: GridState,
  pitch: number,
  frame: number,
): boolean {
  return state.spans.some(
    (s) =>
      s.pitch === pitch && s.onset_frame <= frame && frame < s.offset_frame,
  );
}

/**
 * Flip membership of one (pitch, frame) cell, splitting or merging spans
 * as needed. Returns a new state; toggling twice restores the original.
 */
export function toggleCell(
  state: GridState,
  pitch: number,
  frame: number,
): GridState {
  if (pitch < state.pitchMin || pitch > state.pitchMax) return state;
  if (frame < 0 || frame >= state.frames) return state;

  const others = state.spans.filter((s) => s.pitch !== pitch);
  const row = new Set<number>();
  for (const span of state.spans) {
    if (span.pitch !== pitch) continue;
    for (let f = span.onset_frame; f < span.offset_frame; f++) row.add(f);
  }
  if (row.has(frame)) {
    row.delete(frame);
  } else {
    row.add(frame);
  }
  return {
    ...state,
    spans: sortSpans([...others, ...normalizePitchRow(row, pitch)]),
    dirty: true,
  };
}

export function markSaved(state: GridState): GridState {
  return { ...state, dirty: false };
}

/** Spans equal up to ordering (dirty flags and grid sizing ignored). */
export function sameNotes(a: GridState, b: GridState): boolean {
  if (a.spans.length !== b.spans.length) return false;
  const key = (s: NoteSpan) => `${s.pitch}:${s.onset_frame}:${s.offset_frame}`;
  const keysA = a.spans.map(key).sort();
  const keysB = b.spans.map(key).sort();
  return keysA.every((k, i) => k === keysB[i]);
}

/** The synthesize button is enabled only with a score and an instrument. */
export function canSynthesize(
  state: GridState | null,
  instrument: string | null,
): boolean {
  return state !== null && instrument !== null && instrument.length > 0;
}
