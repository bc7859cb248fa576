"""Standard MIDI File parsing and writing.

Reads format 0/1 files into a flat, tempo-resolved note list and writes
format 0 files back out. Running status is honored on read; sustain pedal
and controllers other than tempo are ignored by design (the pianoroll
input is binary, so performance-level attributes are deliberately not
ingested).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

from .errors import (
    DanglingNoteOnWarning,
    MalformedHeader,
    MalformedTrack,
    UnsupportedFormat,
)

DEFAULT_TEMPO = 500_000  # microseconds per quarter note (120 bpm)
DEFAULT_TICKS_PER_QUARTER = 480

_NOTE_OFF = 0x80
_NOTE_ON = 0x90
_POLY_PRESSURE = 0xA0
_CONTROL_CHANGE = 0xB0
_PROGRAM_CHANGE = 0xC0
_CHANNEL_PRESSURE = 0xD0
_PITCH_BEND = 0xE0

# data-byte count per channel-message status nibble
_DATA_BYTES = {
    _NOTE_OFF: 2, _NOTE_ON: 2, _POLY_PRESSURE: 2, _CONTROL_CHANGE: 2,
    _PROGRAM_CHANGE: 1, _CHANNEL_PRESSURE: 1, _PITCH_BEND: 2,
}


@dataclass(frozen=True)
class NoteEvent:
    """A single note with absolute timing in seconds."""

    pitch: int
    onset_s: float
    duration_s: float
    track: int = 0
    program: int | None = None

    def __post_init__(self):
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside 0..127")
        if self.onset_s < 0:
            raise ValueError(f"negative onset {self.onset_s}")
        if self.duration_s <= 0:
            raise ValueError(f"non-positive duration {self.duration_s}")

    @property
    def end_s(self) -> float:
        return self.onset_s + self.duration_s


@dataclass
class MidiScore:
    """Tempo-resolved note events parsed from (or destined for) an SMF."""

    ticks_per_quarter: int = DEFAULT_TICKS_PER_QUARTER
    tempo_map: list[tuple[int, int]] = field(
        default_factory=lambda: [(0, DEFAULT_TEMPO)]
    )
    notes: list[NoteEvent] = field(default_factory=list)
    duration_s: float = 0.0


class _TempoMap:
    """Piecewise-constant tempo; converts between ticks and seconds."""

    def __init__(self, entries: list[tuple[int, int]], ticks_per_quarter: int):
        if not entries or entries[0][0] != 0:
            entries = [(0, DEFAULT_TEMPO)] + list(entries)
        self.entries = entries
        self.tpq = ticks_per_quarter
        # cumulative seconds at each tempo change
        self._sec_at = [0.0]
        for (t0, usec), (t1, _) in zip(entries, entries[1:]):
            self._sec_at.append(self._sec_at[-1] + (t1 - t0) * usec / (self.tpq * 1e6))

    def tick_to_seconds(self, tick: int) -> float:
        i = 0
        for j, (t, _) in enumerate(self.entries):
            if t <= tick:
                i = j
            else:
                break
        t0, usec = self.entries[i]
        return self._sec_at[i] + (tick - t0) * usec / (self.tpq * 1e6)

    def seconds_to_tick(self, seconds: float) -> int:
        i = 0
        for j, s in enumerate(self._sec_at):
            if s <= seconds + 1e-12:
                i = j
            else:
                break
        t0, usec = self.entries[i]
        return round(t0 + (seconds - self._sec_at[i]) * self.tpq * 1e6 / usec)


class _Reader:
    """Byte cursor over one chunk of SMF data."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def u8(self) -> int:
        if self.pos >= len(self.data):
            raise MalformedTrack("unexpected end of track data")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def take(self, n: int) -> bytes:
        if self.remaining() < n:
            raise MalformedTrack("unexpected end of track data")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def vlq(self) -> int:
        """Variable-length quantity, at most 4 bytes per the SMF spec."""
        value = 0
        for i in range(4):
            b = self.u8()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MalformedTrack("variable-length quantity longer than 4 bytes")


def _iter_chunks(data: bytes):
    """Yield (chunk_type, payload) pairs; tolerate alien chunk types."""
    pos = 0
    while pos + 8 <= len(data):
        ctype = data[pos:pos + 4]
        (length,) = struct.unpack(">I", data[pos + 4:pos + 8])
        payload = data[pos + 8:pos + 8 + length]
        if len(payload) < length:
            raise MalformedTrack(f"chunk {ctype!r} truncated")
        yield ctype, payload
        pos += 8 + length


def _parse_track(payload: bytes, track_index: int, tempo_events: list,
                 raw_notes: list) -> None:
    """Accumulate (tick, usec) tempo events and raw note on/off into lists."""
    r = _Reader(payload)
    tick = 0
    running_status: int | None = None
    program = [None] * 16  # per channel
    # (channel, pitch) -> list of (onset_tick, program) FIFO
    open_notes: dict[tuple[int, int], list[tuple[int, int | None]]] = {}

    while r.remaining() > 0:
        tick += r.vlq()
        status = r.u8()
        if status < 0x80:
            if running_status is None:
                raise MalformedTrack("data byte with no running status")
            status = running_status
            r.pos -= 1
        if status == 0xFF:
            running_status = None  # meta events cancel running status
            mtype = r.u8()
            length = r.vlq()
            mdata = r.take(length)
            if mtype == 0x51:
                if length != 3:
                    raise MalformedTrack("set-tempo event with bad length")
                tempo_events.append((tick, int.from_bytes(mdata, "big")))
            elif mtype == 0x2F:
                break  # end of track
        elif status in (0xF0, 0xF7):
            running_status = None
            length = r.vlq()
            r.take(length)
        elif status >= 0xF0:
            raise MalformedTrack(f"unexpected system message 0x{status:02X}")
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            d1 = r.u8()
            d2 = r.u8() if _DATA_BYTES[kind] == 2 else 0
            if d1 > 127 or d2 > 127:
                raise MalformedTrack("data byte out of range")
            if kind == _PROGRAM_CHANGE:
                program[channel] = d1
            elif kind == _NOTE_ON and d2 > 0:
                open_notes.setdefault((channel, d1), []).append(
                    (tick, program[channel])
                )
            elif kind == _NOTE_OFF or (kind == _NOTE_ON and d2 == 0):
                stack = open_notes.get((channel, d1))
                if stack:
                    onset_tick, prog = stack.pop(0)
                    raw_notes.append((d1, onset_tick, tick, track_index, prog))
                # unmatched note-off is silently ignored

    dangling = sum(len(v) for v in open_notes.values())
    if dangling:
        warnings.warn(
            f"{dangling} note-on event(s) without a matching note-off in "
            f"track {track_index}; closed at end of track",
            DanglingNoteOnWarning,
        )
        for (channel, pitch), stack in open_notes.items():
            for onset_tick, prog in stack:
                raw_notes.append((pitch, onset_tick, tick, track_index, prog))


def parse_midi(data: bytes) -> MidiScore:
    """Parse raw SMF bytes (format 0 or 1) into a MidiScore.

    Every note-on with velocity > 0 is paired FIFO with the next
    note-off (or velocity-0 note-on) of equal pitch on the same channel.
    Ticks are resolved to seconds through the merged tempo map.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedHeader("missing MThd header chunk")
    (header_len,) = struct.unpack(">I", data[4:8])
    if header_len < 6:
        raise MalformedHeader(f"header length {header_len} < 6")
    if len(data) < 8 + header_len:
        raise MalformedHeader("header chunk truncated")
    fmt, ntrks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise UnsupportedFormat(f"SMF format {fmt} is not supported")
    if division & 0x8000:
        raise UnsupportedFormat("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeader("zero ticks per quarter")

    tempo_events: list[tuple[int, int]] = []
    raw_notes: list[tuple[int, int, int, int, int | None]] = []
    track_index = 0
    for ctype, payload in _iter_chunks(data[8 + header_len:]):
        if ctype != b"MTrk":
            continue  # skip alien chunks per the SMF spec
        _parse_track(payload, track_index, tempo_events, raw_notes)
        track_index += 1

    # merge tempo events from all tracks; last event at a given tick wins
    tempo_events.sort(key=lambda e: e[0])
    tempo_map: list[tuple[int, int]] = [(0, DEFAULT_TEMPO)]
    for tick, usec in tempo_events:
        if tick == tempo_map[-1][0]:
            tempo_map[-1] = (tick, usec)
        else:
            tempo_map.append((tick, usec))

    tm = _TempoMap(tempo_map, division)
    notes = []
    for pitch, on_tick, off_tick, track, prog in raw_notes:
        onset = tm.tick_to_seconds(on_tick)
        end = tm.tick_to_seconds(max(off_tick, on_tick + 1))
        notes.append(NoteEvent(pitch, onset, end - onset, track, prog))
    notes.sort(key=lambda n: (n.onset_s, n.pitch, n.track))

    duration = max((n.end_s for n in notes), default=0.0)
    return MidiScore(
        ticks_per_quarter=division,
        tempo_map=tempo_map,
        notes=notes,
        duration_s=duration,
    )


def _vlq_bytes(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_midi(score: MidiScore) -> bytes:
    """Serialize a MidiScore as a format-0 SMF.

    Round trip through parse_midi preserves the note set with onsets and
    durations accurate to one tick.
    """
    tm = _TempoMap(list(score.tempo_map), score.ticks_per_quarter)

    # (tick, order, payload) with note-offs sorted before note-ons at a tick
    events: list[tuple[int, int, bytes]] = []
    for tick, usec in score.tempo_map:
        events.append((tick, 0, bytes([0xFF, 0x51, 0x03]) + usec.to_bytes(3, "big")))
    programs = sorted({n.program for n in score.notes if n.program is not None})
    channel_of = {prog: i % 16 for i, prog in enumerate(programs)}
    for prog in programs:
        events.append((0, 0, bytes([_PROGRAM_CHANGE | channel_of[prog], prog])))
    for n in score.notes:
        channel = channel_of.get(n.program, 0)
        on_tick = tm.seconds_to_tick(n.onset_s)
        off_tick = max(tm.seconds_to_tick(n.end_s), on_tick + 1)
        events.append((on_tick, 2, bytes([_NOTE_ON | channel, n.pitch, 64])))
        events.append((off_tick, 1, bytes([_NOTE_OFF | channel, n.pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1]))

    body = bytearray()
    prev_tick = 0
    for tick, _, payload in events:
        body += _vlq_bytes(tick - prev_tick)
        body += payload
        prev_tick = tick
    body += _vlq_bytes(0) + bytes([0xFF, 0x2F, 0x00])

    header = struct.pack(">4sIHHH", b"MThd", 6, 0, 1, score.ticks_per_quarter)
    track = struct.pack(">4sI", b"MTrk", len(body)) + bytes(body)
    return header + track
