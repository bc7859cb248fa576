/**
 * Browser wiring: upload or pick a score, edit cells on a canvas grid,
 * choose an instrument, synthesize, and play the result.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  GridState,
  canSynthesize,
  cellActive,
  fromSparse,
  markSaved,
  toSparse,
  toggleCell,
} from "./grid.js";
import { pollJob } from "./poller.js";

const CELL_W = 12;
const CELL_H = 14;
const PITCH_PAD = 4; // extra rows above/below the used range

interface AppState {
  grid: GridState | null;
  scoreId: string | null;
  instrument: string | null;
  pitchLo: number; // bottom visible pitch
  pitchHi: number; // top visible pitch
  busy: boolean;
}

const state: AppState = {
  grid: null,
  scoreId: null,
  instrument: null,
  pitchLo: 48,
  pitchHi: 96,
  busy: false,
};

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const client = new ApiClient("");

function banner(text: string, kind: "info" | "error" = "info"): void {
  const el = $("banner");
  el.textContent = text;
  el.className = kind;
  el.style.display = text ? "block" : "none";
}

function fitPitchWindow(): void {
  const grid = state.grid;
  if (!grid || grid.spans.length === 0) return;
  const pitches = grid.spans.map((s) => s.pitch);
  state.pitchLo = Math.max(grid.pitchMin, Math.min(...pitches) - PITCH_PAD);
  state.pitchHi = Math.min(grid.pitchMax, Math.max(...pitches) + PITCH_PAD);
}

function draw(): void {
  const canvas = $<HTMLCanvasElement>("grid");
  const grid = state.grid;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  if (!grid) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    return;
  }
  const rows = state.pitchHi - state.pitchLo + 1;
  canvas.width = grid.frames * CELL_W;
  canvas.height = rows * CELL_H;

  for (let row = 0; row < rows; row++) {
    const pitch = state.pitchHi - row;
    const black = [1, 3, 6, 8, 10].includes(pitch % 12);
    for (let frame = 0; frame < grid.frames; frame++) {
      const active = cellActive(grid, pitch, frame);
      ctx.fillStyle = active ? "#2f9e44" : black ? "#e9ecef" : "#f8f9fa";
      ctx.fillRect(frame * CELL_W, row * CELL_H, CELL_W - 1, CELL_H - 1);
    }
  }
  // beat lines every half second of frames
  ctx.strokeStyle = "#ced4da";
  const framesPerBeat = Math.round(grid.frameRate / 2);
  for (let f = 0; f < grid.frames; f += framesPerBeat) {
    ctx.beginPath();
    ctx.moveTo(f * CELL_W, 0);
    ctx.lineTo(f * CELL_W, canvas.height);
    ctx.stroke();
  }
}

function refreshControls(): void {
  $<HTMLButtonElement>("save").disabled = !(state.grid?.dirty ?? false);
  $<HTMLButtonElement>("synthesize").disabled =
    state.busy || !canSynthesize(state.grid, state.instrument);
  $("dirty").textContent = state.grid?.dirty ? "unsaved edits" : "";
}

async function handleUpload(file: File): Promise<void> {
  try {
    const body = await client.uploadScore(file.name, file);
    state.scoreId = body.id;
    state.grid = fromSparse(body.pianoroll);
    fitPitchWindow();
    banner(`loaded ${file.name}: ${body.pianoroll.notes.length} note span(s)`);
  } catch (err) {
    banner(describe(err), "error");
  }
  draw();
  refreshControls();
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.errorName}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

async function loadInstruments(): Promise<void> {
  try {
    const instruments = await client.listInstruments();
    const select = $<HTMLSelectElement>("instrument");
    select.innerHTML = "";
    for (const inst of instruments) {
      const option = document.createElement("option");
      option.value = inst.label;
      option.textContent = `${inst.label} (${inst.checkpoint_id})`;
      select.appendChild(option);
    }
    state.instrument = instruments[0]?.label ?? null;
    if (instruments.length === 0) {
      banner("no instruments loaded on the server", "error");
    }
  } catch (err) {
    banner(describe(err), "error");
  }
  refreshControls();
}

async function saveEdits(): Promise<void> {
  if (!state.grid || !state.scoreId) return;
  try {
    await client.putRoll(state.scoreId, toSparse(state.grid));
    state.grid = markSaved(state.grid);
    banner("edits saved");
  } catch (err) {
    banner(describe(err), "error");
  }
  refreshControls();
}

async function synthesize(): Promise<void> {
  if (!state.grid || !state.scoreId || !state.instrument) return;
  state.busy = true;
  refreshControls();
  try {
    if (state.grid.dirty) await saveEdits();
    const { job_id } = await client.synthesize(state.scoreId, state.instrument);
    banner(`job ${job_id.slice(0, 8)}… queued`);
    const view = await pollJob(client, job_id, {
      intervalMs: 500,
      onUpdate: (v) => banner(`job ${job_id.slice(0, 8)}…: ${v.state}`),
    });
    if (view.state === "done" && view.audioUrl) {
      const audio = $<HTMLAudioElement>("player");
      audio.src = view.audioUrl;
      banner("done — press play");
      void audio.play().catch(() => banner("done — press play"));
    } else {
      banner(`synthesis failed: ${view.error ?? "unknown error"}`, "error");
    }
  } catch (err) {
    banner(describe(err), "error");
  }
  state.busy = false;
  refreshControls();
}

export function start(): void {
  $<HTMLInputElement>("file").addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void handleUpload(file);
  });
  $<HTMLCanvasElement>("grid").addEventListener("click", (ev) => {
    if (!state.grid) return;
    const rect = (ev.target as HTMLCanvasElement).getBoundingClientRect();
    const frame = Math.floor((ev.clientX - rect.left) / CELL_W);
    const pitch = state.pitchHi - Math.floor((ev.clientY - rect.top) / CELL_H);
    state.grid = toggleCell(state.grid, pitch, frame);
    draw();
    refreshControls();
  });
  $<HTMLSelectElement>("instrument").addEventListener("change", (ev) => {
    state.instrument = (ev.target as HTMLSelectElement).value || null;
    refreshControls();
  });
  $<HTMLButtonElement>("save").addEventListener("click", () => void saveEdits());
  $<HTMLButtonElement>("synthesize").addEventListener(
    "click",
    () => void synthesize(),
  );
  void loadInstruments();
  refreshControls();
}

start();
