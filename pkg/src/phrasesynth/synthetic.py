"""Synthetic additive-synthesis corpus for tests, demos, and overfitting.

Renders audio *exactly* from the score (a few sine harmonics per note), so
pianoroll and spectrogram lengths agree by construction. The default
phrase uses high pitches (MIDI 91..95) whose first four harmonics land one
per frequency band of the four-band refiner, which makes per-band behavior
observable in a desk-scale experiment.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .contour import ContourConfig
from .dsp import AudioBuffer, AudioConfig
from .midifile import MidiScore, NoteEvent, write_midi
from .texture import TextureConfig
from .training import ManifestEntry, TrainConfig
from .wavio import write_wav

DEFAULT_MELODY = (91, 93, 95, 93, 94, 91, 95, 93)
DEFAULT_LABEL = "synthlead"

HARMONIC_AMPS = (0.30, 0.21, 0.17, 0.15)  # ~0.3 / sqrt(h)

ATTACK_S = 0.01
RELEASE_S = 0.02


def midi_to_hz(pitch: int) -> float:
    return 440.0 * 2.0 ** ((pitch - 69) / 12.0)


def melody_score(
    pitches: tuple[int, ...] = DEFAULT_MELODY,
    note_duration_s: float = 0.5,
) -> MidiScore:
    """A monophonic phrase of equal-length contiguous notes."""
    notes = [
        NoteEvent(pitch=p, onset_s=i * note_duration_s,
                  duration_s=note_duration_s, program=80)
        for i, p in enumerate(pitches)
    ]
    return MidiScore(notes=notes, duration_s=len(pitches) * note_duration_s)


def additive_render(
    score: MidiScore,
    sample_rate: int = 16_000,
    harmonic_amps: tuple[float, ...] = HARMONIC_AMPS,
) -> AudioBuffer:
    """Sum of sine harmonics per note with short attack/release ramps."""
    total = int(round(score.duration_s * sample_rate))
    out = np.zeros(total, dtype=np.float64)
    nyquist = sample_rate / 2.0
    for note in score.notes:
        start = int(round(note.onset_s * sample_rate))
        end = min(int(round(note.end_s * sample_rate)), total)
        n = end - start
        if n <= 0:
            continue
        t = np.arange(n) / sample_rate
        f0 = midi_to_hz(note.pitch)
        wave = np.zeros(n, dtype=np.float64)
        for h, amp in enumerate(harmonic_amps, start=1):
            freq = h * f0
            if freq >= 0.98 * nyquist:
                continue
            wave += amp * np.sin(2.0 * np.pi * freq * t)
        env = np.ones(n)
        attack = min(int(ATTACK_S * sample_rate), n // 2)
        release = min(int(RELEASE_S * sample_rate), n // 2)
        if attack:
            env[:attack] = np.linspace(0.0, 1.0, attack, endpoint=False)
        if release:
            env[n - release:] = np.linspace(1.0, 0.0, release)
        out[start:end] += wave * env
    return AudioBuffer(sample_rate, out)


def make_corpus(
    directory: str | Path,
    pitches: tuple[int, ...] = DEFAULT_MELODY,
    label: str = DEFAULT_LABEL,
    sample_rate: int = 16_000,
    stem: str = "melody",
) -> tuple[Path, list[ManifestEntry]]:
    """Write <stem>.mid, <stem>.wav, and manifest.tsv; return both."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    score = melody_score(pitches)
    midi_path = directory / f"{stem}.mid"
    wav_path = directory / f"{stem}.wav"
    midi_path.write_bytes(write_midi(score))
    wav_path.write_bytes(write_wav(additive_render(score, sample_rate)))
    manifest_path = directory / "manifest.tsv"
    manifest_path.write_text(f"{midi_path.name}\t{wav_path.name}\t{label}\n")
    return manifest_path, [ManifestEntry(midi_path, wav_path, label)]


def overfit_configs(
    num_labels: int = 1,
    audio: AudioConfig = AudioConfig(),
    steps: int = 2000,
    seed: int = 0,
) -> tuple[ContourConfig, TextureConfig, TrainConfig]:
    """Desk-scale configuration for the single-pair overfit experiment."""
    contour = ContourConfig(
        in_channels=128,
        out_channels=audio.num_bins,
        encoder_widths=(32, 48, 64, 64),
        condition_dim=num_labels,
    )
    texture = TextureConfig(hidden_channels=16)
    train = TrainConfig(
        steps=steps,
        batch_size=1,
        segment_frames=128,
        seed=seed,
    )
    return contour, texture, train
