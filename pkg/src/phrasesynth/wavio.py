"""RIFF/WAVE reading and writing.

Reads PCM 16-bit and IEEE float 32-bit mono or stereo (stereo is averaged
to mono). Writes 16-bit PCM mono little-endian with exact chunk sizes.
"""

from __future__ import annotations

import struct

import numpy as np

from .dsp import AudioBuffer
from .errors import MalformedRiff, UnsupportedCodec

_FORMAT_PCM = 0x0001
_FORMAT_IEEE_FLOAT = 0x0003


def read_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte string into a mono AudioBuffer."""
    if len(data) < 12:
        raise MalformedRiff("file shorter than a RIFF header")
    if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedRiff("not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise MalformedRiff(f"chunk {cid!r} truncated")
        if cid == b"fmt ":
            if size < 16:
                raise MalformedRiff("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise MalformedRiff("missing fmt chunk")
    if payload is None:
        raise MalformedRiff("missing data chunk")
    format_tag, channels, sample_rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedCodec(f"{channels} channels (only mono/stereo)")
    if sample_rate <= 0:
        raise MalformedRiff("non-positive sample rate")

    if format_tag == _FORMAT_PCM and bits == 16:
        raw = np.frombuffer(
            payload[: len(payload) - len(payload) % (2 * channels)], dtype="<i2"
        )
        samples = raw.astype(np.float64) / 32767.0
    elif format_tag == _FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(
            payload[: len(payload) - len(payload) % (4 * channels)], dtype="<f4"
        )
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedCodec(
            f"format tag {format_tag} with {bits} bits per sample"
        )

    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    if not np.isfinite(samples).all():
        raise UnsupportedCodec("non-finite sample values")
    return AudioBuffer(sample_rate=sample_rate, samples=samples)


def write_wav(audio: AudioBuffer) -> bytes:
    """Encode an AudioBuffer as 16-bit PCM mono little-endian WAV bytes."""
    clipped = np.clip(audio.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    payload = pcm.tobytes()

    byte_rate = audio.sample_rate * 2
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _FORMAT_PCM,
        1,
        audio.sample_rate,
        byte_rate,
        2,   # block align
        16,  # bits per sample
        b"data",
        len(payload),
    )
    return header + payload
