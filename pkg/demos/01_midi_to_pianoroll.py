"""Parse a MIDI file, quantize it onto the binary pianoroll grid, and go back.

The pianoroll is a 0/1 matrix (pitch x time) at 62.5 frames/s, the same
frame rate the spectrogram uses, so score and audio share one time axis.
"""

import numpy as np

from phrasesynth import (
    parse_midi,
    pianoroll_to_score,
    score_to_pianoroll,
    write_midi,
)
from phrasesynth.synthetic import melody_score

# build a little phrase and serialize it as a standard MIDI file
score = melody_score(pitches=(60, 64, 67, 72), note_duration_s=0.25)
smf_bytes = write_midi(score)
print(f"wrote {len(smf_bytes)} bytes of SMF for {len(score.notes)} notes")

# parse it back and quantize
parsed = parse_midi(smf_bytes)
roll = score_to_pianoroll(parsed, frame_rate=62.5)
print(f"pianoroll: {roll.num_pitches} pitches x {roll.num_frames} frames")
print(f"active cells: {int(roll.data.sum())}")

# a crude terminal rendering of the active pitch range
active = np.flatnonzero(roll.data.any(axis=1))
for pitch in active[::-1]:
    row = "".join("#" if v else "." for v in roll.data[pitch, ::2])
    print(f"  pitch {pitch:3d} |{row}|")

# the roll converts back to a score exactly, and that score re-quantizes
# to the identical roll
recovered = pianoroll_to_score(roll, program=0)
again = score_to_pianoroll(recovered, frame_rate=62.5)
assert np.array_equal(again.data, roll.data)
print("roll -> score -> roll round trip: exact")
