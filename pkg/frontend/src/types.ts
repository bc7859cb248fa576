/** Wire types mirroring the service JSON API. */

export interface NoteSpan {
  pitch: number; // MIDI note number (0-127)
  onset_frame: number; // inclusive
  offset_frame: number; // exclusive
}

export interface SparseRoll {
  frame_rate: number;
  pitch_min: number;
  pitch_max: number;
  notes: NoteSpan[];
}

export interface Instrument {
  label: string;
  checkpoint_id: string;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobJson {
  id: string;
  score_id: string;
  instrument_label: string;
  state: JobState;
  error?: string;
  audio_url?: string;
}
