"""Binary pianoroll representation and conversions to and from note events.

The roll is a (pitch, time) 0/1 matrix at a fixed frame rate. The frame
rate is meant to equal the spectrogram frame rate of the paired audio
configuration (sample_rate / hop), so score and audio share the time axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DroppedNotesWarning, InvalidRange
from .midifile import MidiScore, NoteEvent


@dataclass
class Pianoroll:
    """Binary pitch-by-time matrix. data[p - pitch_min, t] is 0 or 1."""

    pitch_min: int
    pitch_max: int
    frame_rate: float
    data: np.ndarray  # uint8, shape (P, T)

    def __post_init__(self):
        if self.pitch_min > self.pitch_max:
            raise InvalidRange(
                f"pitch range [{self.pitch_min}, {self.pitch_max}] is empty"
            )
        if self.frame_rate <= 0:
            raise InvalidRange(f"frame rate {self.frame_rate} must be positive")
        self.data = np.asarray(self.data, dtype=np.uint8)
        expected_p = self.pitch_max - self.pitch_min + 1
        if self.data.ndim != 2 or self.data.shape[0] != expected_p:
            raise InvalidRange(
                f"roll shape {self.data.shape} does not match pitch range "
                f"({expected_p} rows expected)"
            )
        if self.data.shape[1] < 1:
            raise InvalidRange("roll must have at least one frame")
        if not np.isin(self.data, (0, 1)).all():
            raise InvalidRange("roll entries must be 0 or 1")

    @property
    def num_pitches(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    def to_sparse(self) -> dict:
        """Sparse note-span JSON form shared with the HTTP service."""
        notes = []
        for row, pitch, start, end in _iter_runs(self.data, self.pitch_min):
            notes.append(
                {"pitch": pitch, "onset_frame": start, "offset_frame": end}
            )
        return {
            "frame_rate": self.frame_rate,
            "pitch_min": self.pitch_min,
            "pitch_max": self.pitch_max,
            "notes": notes,
        }

    @classmethod
    def from_sparse(cls, obj: dict) -> "Pianoroll":
        """Rebuild a dense roll from the sparse form.

        The dense length is the largest offset_frame (trailing silent
        frames are not represented in the sparse form).
        """
        pitch_min = int(obj["pitch_min"])
        pitch_max = int(obj["pitch_max"])
        frame_rate = float(obj["frame_rate"])
        notes = obj.get("notes", [])
        num_frames = max((int(n["offset_frame"]) for n in notes), default=1)
        data = np.zeros((pitch_max - pitch_min + 1, num_frames), dtype=np.uint8)
        for n in notes:
            pitch = int(n["pitch"])
            start = int(n["onset_frame"])
            end = int(n["offset_frame"])
            if not pitch_min <= pitch <= pitch_max:
                raise InvalidRange(f"note pitch {pitch} outside roll range")
            if start < 0 or end <= start:
                raise InvalidRange(
                    f"note span [{start}, {end}) is empty or negative"
                )
            data[pitch - pitch_min, start:end] = 1
        return cls(pitch_min, pitch_max, frame_rate, data)


def _iter_runs(data: np.ndarray, pitch_min: int):
    """Yield (row, pitch, start_frame, end_frame) for maximal runs of ones."""
    padded = np.zeros((data.shape[0], data.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = data
    diff = np.diff(padded, axis=1)
    for row in range(data.shape[0]):
        starts = np.flatnonzero(diff[row] == 1)
        ends = np.flatnonzero(diff[row] == -1)
        for start, end in zip(starts, ends):
            yield row, row + pitch_min, int(start), int(end)


def score_to_pianoroll(
    score: MidiScore,
    frame_rate: float = 62.5,
    pitch_min: int = 0,
    pitch_max: int = 127,
) -> Pianoroll:
    """Quantize note events onto a binary frame grid.

    Cell (p, t) is set iff some note at pitch p spans frame t under the
    rule: floor(onset * fr) <= t < max(floor(onset * fr) + 1,
    floor((onset + duration) * fr)). Every note occupies at least one
    frame. Notes outside the pitch range are dropped with a warning.
    """
    if pitch_min > pitch_max:
        raise InvalidRange(f"pitch range [{pitch_min}, {pitch_max}] is empty")
    if frame_rate <= 0:
        raise InvalidRange(f"frame rate {frame_rate} must be positive")

    # 1 ns slack guards against float noise when a time in seconds came
    # from an exact frame index (the pianoroll_to_score inverse)
    eps = 1e-9
    num_frames = max(1, math.ceil(score.duration_s * frame_rate - eps))
    data = np.zeros((pitch_max - pitch_min + 1, num_frames), dtype=np.uint8)
    dropped = 0
    for note in score.notes:
        if not pitch_min <= note.pitch <= pitch_max:
            dropped += 1
            continue
        start = math.floor(note.onset_s * frame_rate + eps)
        end = max(start + 1, math.floor(note.end_s * frame_rate + eps))
        start = min(start, num_frames - 1)
        end = min(end, num_frames)
        data[note.pitch - pitch_min, start:end] = 1
    if dropped:
        warnings.warn(
            f"{dropped} note(s) outside pitch range "
            f"[{pitch_min}, {pitch_max}] were dropped",
            DroppedNotesWarning,
        )
    return Pianoroll(pitch_min, pitch_max, frame_rate, data)


def pianoroll_to_score(roll: Pianoroll, program: int | None = None) -> MidiScore:
    """Turn each maximal horizontal run of ones into one note event.

    Exact inverse of score_to_pianoroll in the sense that
    score_to_pianoroll(pianoroll_to_score(r)) == r for any valid roll.
    """
    notes = []
    for _, pitch, start, end in _iter_runs(roll.data, roll.pitch_min):
        notes.append(
            NoteEvent(
                pitch=pitch,
                onset_s=start / roll.frame_rate,
                duration_s=(end - start) / roll.frame_rate,
                program=program,
            )
        )
    notes.sort(key=lambda n: (n.onset_s, n.pitch))
    return MidiScore(
        notes=notes,
        duration_s=roll.num_frames / roll.frame_rate,
    )
