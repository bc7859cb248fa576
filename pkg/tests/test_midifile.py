import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import _vlq, one_note_smf
from phrasesynth.errors import (
    DanglingNoteOnWarning,
    MalformedHeader,
    MidiError,
    UnsupportedFormat,
)
from phrasesynth.midifile import (
    DEFAULT_TEMPO,
    MidiScore,
    NoteEvent,
    parse_midi,
    write_midi,
)


def track_chunk(events: bytes) -> bytes:
    return struct.pack(">4sI", b"MTrk", len(events)) + events


def header_chunk(fmt: int = 0, ntrks: int = 1, tpq: int = 480) -> bytes:
    return struct.pack(">4sIHHH", b"MThd", 6, fmt, ntrks, tpq)


class TestParse:
    def test_one_note(self, one_note_bytes):
        # 480 ticks at 480 tpq under 500000 us/quarter is 0.5 s
        score = parse_midi(one_note_bytes)
        assert score.ticks_per_quarter == 480
        assert score.tempo_map == [(0, DEFAULT_TEMPO)]
        assert len(score.notes) == 1
        note = score.notes[0]
        assert note.pitch == 60
        assert note.onset_s == pytest.approx(0.0)
        assert note.duration_s == pytest.approx(0.5)
        assert score.duration_s == pytest.approx(0.5)

    def test_empty_track(self):
        data = header_chunk() + track_chunk(bytes([0x00, 0xFF, 0x2F, 0x00]))
        score = parse_midi(data)
        assert score.notes == []
        assert score.duration_s == 0.0

    def test_running_status_equivalence(self):
        # same two notes, with and without repeating the status byte
        explicit = bytearray()
        explicit += bytes([0x00, 0x90, 60, 64])
        explicit += bytes([0x10, 0x90, 64, 64])
        explicit += _vlq(0x70) + bytes([0x80, 60, 0])
        explicit += bytes([0x00, 0x80, 64, 0])
        explicit += bytes([0x00, 0xFF, 0x2F, 0x00])

        running = bytearray()
        running += bytes([0x00, 0x90, 60, 64])
        running += bytes([0x10, 64, 64])            # running 0x90
        running += _vlq(0x70) + bytes([60, 0])      # velocity-0 note off
        running += bytes([0x00, 64, 0])
        running += bytes([0x00, 0xFF, 0x2F, 0x00])

        a = parse_midi(header_chunk() + track_chunk(bytes(explicit)))
        b = parse_midi(header_chunk() + track_chunk(bytes(running)))
        assert a == b
        assert len(a.notes) == 2

    def test_tempo_change_scales_seconds(self):
        # 240000 us/quarter from tick 0: 480 ticks -> 0.24 s
        events = bytes([0x00, 0xFF, 0x51, 0x03]) + (240000).to_bytes(3, "big")
        events += bytes([0x00, 0x90, 60, 64])
        events += _vlq(480) + bytes([0x80, 60, 0])
        events += bytes([0x00, 0xFF, 0x2F, 0x00])
        score = parse_midi(header_chunk() + track_chunk(events))
        assert score.notes[0].duration_s == pytest.approx(0.24)

    def test_program_change_recorded(self):
        events = bytes([0x00, 0xC0, 42])
        events += bytes([0x00, 0x90, 60, 64])
        events += _vlq(480) + bytes([0x80, 60, 0])
        events += bytes([0x00, 0xFF, 0x2F, 0x00])
        score = parse_midi(header_chunk() + track_chunk(events))
        assert score.notes[0].program == 42

    def test_format_1_merges_tempo_across_tracks(self):
        tempo_track = track_chunk(
            bytes([0x00, 0xFF, 0x51, 0x03]) + (250000).to_bytes(3, "big")
            + bytes([0x00, 0xFF, 0x2F, 0x00])
        )
        note_track = track_chunk(
            bytes([0x00, 0x90, 60, 64]) + _vlq(480) + bytes([0x80, 60, 0])
            + bytes([0x00, 0xFF, 0x2F, 0x00])
        )
        score = parse_midi(header_chunk(fmt=1, ntrks=2) + tempo_track + note_track)
        assert score.notes[0].duration_s == pytest.approx(0.25)
        assert score.notes[0].track == 1

    def test_dangling_note_on_closed_with_warning(self):
        events = bytes([0x00, 0x90, 60, 64])
        events += _vlq(960) + bytes([0xFF, 0x2F, 0x00])
        with pytest.warns(DanglingNoteOnWarning):
            score = parse_midi(header_chunk() + track_chunk(events))
        assert len(score.notes) == 1
        assert score.notes[0].duration_s == pytest.approx(1.0)

    def test_bad_magic(self):
        with pytest.raises(MalformedHeader):
            parse_midi(b"RIFF" + b"\x00" * 20)

    def test_truncated_header(self):
        with pytest.raises(MalformedHeader):
            parse_midi(b"MThd\x00\x00\x00\x06\x00")

    def test_format_2_rejected(self):
        with pytest.raises(UnsupportedFormat):
            parse_midi(header_chunk(fmt=2))

    def test_smpte_division_rejected(self):
        data = struct.pack(">4sIHHH", b"MThd", 6, 0, 1, 0xE250)
        with pytest.raises(UnsupportedFormat):
            parse_midi(data)

    def test_alien_chunks_skipped(self):
        alien = struct.pack(">4sI", b"XFIH", 4) + b"\x00" * 4
        data = header_chunk() + alien + track_chunk(
            bytes([0x00, 0x90, 60, 64]) + _vlq(480) + bytes([0x80, 60, 0])
            + bytes([0x00, 0xFF, 0x2F, 0x00])
        )
        assert len(parse_midi(data).notes) == 1

    @settings(max_examples=60, deadline=None)
    @given(st.binary(min_size=0, max_size=200))
    def test_fuzz_total(self, data):
        # every input parses or raises a typed error, never crashes
        try:
            parse_midi(data)
        except MidiError:
            pass

    @settings(max_examples=30, deadline=None)
    @given(st.binary(min_size=0, max_size=120))
    def test_fuzz_with_valid_header(self, tail):
        try:
            parse_midi(header_chunk() + tail)
        except MidiError:
            pass


class TestWrite:
    def test_empty_score(self):
        data = write_midi(MidiScore())
        assert data.startswith(b"MThd")
        score = parse_midi(data)
        assert score.notes == []

    def test_one_note_round_trip(self, one_note_bytes):
        original = parse_midi(one_note_bytes)
        recovered = parse_midi(write_midi(original))
        assert len(recovered.notes) == 1
        assert recovered.notes[0].pitch == 60
        assert recovered.notes[0].onset_s == pytest.approx(0.0, abs=1e-9)
        assert recovered.notes[0].duration_s == pytest.approx(0.5, abs=1e-9)

    def test_random_notes_round_trip_within_one_tick(self):
        # same-pitch overlaps are ambiguous in on/off pairing, so notes
        # are placed sequentially per pitch
        rng = np.random.default_rng(7)
        tpq = 480
        tick_s = DEFAULT_TEMPO / (tpq * 1e6)
        next_free_tick = {}
        notes = []
        for _ in range(100):
            pitch = int(rng.integers(0, 128))
            onset_tick = next_free_tick.get(pitch, 0) + int(rng.integers(0, 400))
            duration_ticks = int(rng.integers(1, 800))
            next_free_tick[pitch] = onset_tick + duration_ticks
            notes.append(NoteEvent(
                pitch=pitch,
                onset_s=onset_tick * tick_s,
                duration_s=duration_ticks * tick_s,
            ))
        score = MidiScore(
            ticks_per_quarter=tpq,
            notes=sorted(notes, key=lambda n: (n.onset_s, n.pitch)),
            duration_s=max(n.end_s for n in notes),
        )
        recovered = parse_midi(write_midi(score))
        assert len(recovered.notes) == len(score.notes)
        original_set = sorted(
            (n.pitch, n.onset_s, n.duration_s) for n in score.notes)
        recovered_set = sorted(
            (n.pitch, n.onset_s, n.duration_s) for n in recovered.notes)
        for (p0, on0, d0), (p1, on1, d1) in zip(original_set, recovered_set):
            assert p0 == p1
            assert abs(on0 - on1) <= tick_s + 1e-9
            assert abs(d0 - d1) <= tick_s + 1e-9

    def test_program_survives_round_trip(self):
        score = MidiScore(
            notes=[NoteEvent(60, 0.0, 0.5, program=80)], duration_s=0.5)
        recovered = parse_midi(write_midi(score))
        assert recovered.notes[0].program == 80
