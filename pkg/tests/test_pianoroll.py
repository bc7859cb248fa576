import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phrasesynth.errors import DroppedNotesWarning, InvalidRange
from phrasesynth.midifile import MidiScore, NoteEvent
from phrasesynth.pianoroll import (
    Pianoroll,
    pianoroll_to_score,
    score_to_pianoroll,
)

rolls_16x64 = arrays(np.uint8, (16, 64), elements=st.integers(0, 1))


def score_of(*notes: tuple[int, float, float]) -> MidiScore:
    events = [NoteEvent(p, on, dur) for p, on, dur in notes]
    return MidiScore(
        notes=events,
        duration_s=max((n.end_s for n in events), default=0.0),
    )


class TestScoreToPianoroll:
    def test_single_note(self):
        roll = score_to_pianoroll(score_of((60, 0.0, 1.0)), 10.0)
        assert roll.data.shape == (128, 10)
        assert roll.data[60].tolist() == [1] * 10
        other = np.delete(roll.data, 60, axis=0)
        assert not other.any()

    def test_overlapping_same_pitch_union(self):
        roll = score_to_pianoroll(
            score_of((60, 0.0, 1.0), (60, 0.5, 1.0)), 10.0)
        assert roll.data[60].tolist() == [1] * 15

    def test_short_note_gets_one_frame(self):
        roll = score_to_pianoroll(score_of((60, 0.0, 0.01)), 10.0)
        assert roll.data[60].sum() == 1
        assert roll.data[60, 0] == 1

    def test_empty_score_is_zero_roll(self):
        roll = score_to_pianoroll(MidiScore(), 10.0)
        assert roll.num_frames == 1
        assert not roll.data.any()

    def test_out_of_range_notes_dropped_with_warning(self):
        score = score_of((10, 0.0, 1.0), (60, 0.0, 1.0))
        with pytest.warns(DroppedNotesWarning, match="1 note"):
            roll = score_to_pianoroll(score, 10.0, pitch_min=21, pitch_max=108)
        assert roll.data[60 - 21].all()

    def test_invalid_range(self):
        with pytest.raises(InvalidRange):
            score_to_pianoroll(MidiScore(), 10.0, pitch_min=60, pitch_max=59)
        with pytest.raises(InvalidRange):
            score_to_pianoroll(MidiScore(), 0.0)

    @settings(max_examples=40, deadline=None)
    @given(
        onset=st.floats(0.0, 5.0, allow_nan=False),
        dur=st.floats(0.001, 3.0, allow_nan=False),
        extra=st.floats(0.0, 2.0, allow_nan=False),
    )
    def test_quantization_monotonicity(self, onset, dur, extra):
        # lengthening a note never clears a previously set cell
        base = score_to_pianoroll(score_of((60, onset, dur)), 12.5)
        longer = score_to_pianoroll(score_of((60, onset, dur + extra)), 12.5)
        t = base.num_frames
        assert (longer.data[:, :t] >= base.data).all()


class TestPianorollToScore:
    def test_single_run(self):
        data = np.zeros((128, 16), dtype=np.uint8)
        data[60, 0:10] = 1
        score = pianoroll_to_score(Pianoroll(0, 127, 10.0, data))
        assert len(score.notes) == 1
        note = score.notes[0]
        assert (note.pitch, note.onset_s, note.duration_s) == (60, 0.0, 1.0)

    def test_all_zero_roll(self):
        roll = Pianoroll(0, 127, 10.0, np.zeros((128, 4), dtype=np.uint8))
        assert pianoroll_to_score(roll).notes == []

    def test_split_runs_become_separate_notes(self):
        data = np.zeros((12, 10), dtype=np.uint8)
        data[5, 0:3] = 1
        data[5, 6:9] = 1
        score = pianoroll_to_score(Pianoroll(50, 61, 10.0, data))
        assert len(score.notes) == 2
        assert [n.onset_s for n in score.notes] == [0.0, 0.6]

    @settings(max_examples=60, deadline=None)
    @given(data=rolls_16x64)
    def test_round_trip_identity(self, data):
        # exact identity: the score's duration preserves trailing silence
        roll = Pianoroll(40, 55, 62.5, data)
        back = score_to_pianoroll(pianoroll_to_score(roll), 62.5, 40, 55)
        assert back.num_frames == roll.num_frames
        assert np.array_equal(back.data, roll.data)

    @settings(max_examples=40, deadline=None)
    @given(data=rolls_16x64, rate=st.sampled_from([10.0, 31.25, 62.5, 100.0]))
    def test_round_trip_any_rate(self, data, rate):
        roll = Pianoroll(40, 55, rate, data)
        back = score_to_pianoroll(pianoroll_to_score(roll), rate, 40, 55)
        assert np.array_equal(back.data, roll.data)


class TestSparseForm:
    def test_sparse_round_trip(self):
        data = np.zeros((128, 20), dtype=np.uint8)
        data[60, 0:10] = 1
        data[64, 5:20] = 1
        roll = Pianoroll(0, 127, 62.5, data)
        again = Pianoroll.from_sparse(roll.to_sparse())
        assert np.array_equal(again.data, roll.data)
        assert again.frame_rate == roll.frame_rate

    def test_sparse_fields(self):
        data = np.zeros((128, 8), dtype=np.uint8)
        data[72, 2:6] = 1
        sparse = Pianoroll(0, 127, 62.5, data).to_sparse()
        assert sparse["notes"] == [
            {"pitch": 72, "onset_frame": 2, "offset_frame": 6}]
        assert sparse["pitch_min"] == 0
        assert sparse["pitch_max"] == 127
        assert sparse["frame_rate"] == 62.5

    def test_from_sparse_rejects_bad_spans(self):
        base = {"frame_rate": 62.5, "pitch_min": 0, "pitch_max": 127}
        with pytest.raises(InvalidRange):
            Pianoroll.from_sparse(
                base | {"notes": [
                    {"pitch": 60, "onset_frame": 5, "offset_frame": 5}]})
        with pytest.raises(InvalidRange):
            Pianoroll.from_sparse(
                base | {"notes": [
                    {"pitch": 200, "onset_frame": 0, "offset_frame": 2}]})


class TestInvariants:
    def test_rejects_non_binary(self):
        with pytest.raises(InvalidRange):
            Pianoroll(0, 127, 62.5, np.full((128, 4), 2, dtype=np.uint8))

    def test_rejects_wrong_row_count(self):
        with pytest.raises(InvalidRange):
            Pianoroll(0, 127, 62.5, np.zeros((64, 4), dtype=np.uint8))

    def test_rejects_empty_time_axis(self):
        with pytest.raises(InvalidRange):
            Pianoroll(0, 127, 62.5, np.zeros((128, 0), dtype=np.uint8))
