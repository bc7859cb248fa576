"""End-to-end rendering: pianoroll -> coarse -> refined -> waveform."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import Checkpoint
from .dsp import AudioBuffer, GriffinLimResult, Spectrogram, griffin_lim
from .errors import ShapeMismatch
from .pianoroll import Pianoroll
from .training import predict


@dataclass
class RenderResult:
    audio: AudioBuffer
    coarse: Spectrogram
    refined: Spectrogram
    griffin_lim_errors: np.ndarray = field(repr=False)
    timings_s: dict[str, float] = field(default_factory=dict)


def label_index(ckpt: Checkpoint, label: str | None) -> int:
    """Resolve an instrument label against the checkpoint (default: first)."""
    if not ckpt.labels:
        raise ShapeMismatch("checkpoint carries no instrument labels")
    if label is None:
        return 0
    if label not in ckpt.labels:
        raise KeyError(
            f"unknown instrument {label!r}; available: {', '.join(ckpt.labels)}"
        )
    return ckpt.labels.index(label)


def render(
    ckpt: Checkpoint,
    roll: Pianoroll | np.ndarray,
    instrument: str | None = None,
    gl_iterations: int = 60,
    seed: int = 0,
) -> RenderResult:
    """Run the full synthesis pipeline for one score."""
    data = roll.data if isinstance(roll, Pianoroll) else np.asarray(roll)
    if data.ndim != 2 or data.shape[0] != ckpt.contour_config.in_channels:
        raise ShapeMismatch(
            f"roll shape {data.shape} incompatible with checkpoint "
            f"({ckpt.contour_config.in_channels} pitch rows expected)"
        )
    idx = label_index(ckpt, instrument)
    cfg = ckpt.audio_config

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    coarse_values, refined_values = predict(ckpt, data, idx)
    timings["model"] = time.perf_counter() - t0

    coarse = Spectrogram(cfg.n_fft, cfg.hop, cfg.sample_rate,
                         coarse_values.astype(np.float64))
    refined = Spectrogram(cfg.n_fft, cfg.hop, cfg.sample_rate,
                          refined_values.astype(np.float64))

    t0 = time.perf_counter()
    gl: GriffinLimResult = griffin_lim(refined, iterations=gl_iterations, seed=seed)
    timings["griffin_lim"] = time.perf_counter() - t0

    audio = gl.audio
    peak = np.max(np.abs(audio.samples)) if len(audio.samples) else 0.0
    if peak > 1.0:  # normalize only when clipping would occur
        audio = AudioBuffer(audio.sample_rate, audio.samples / peak)
    return RenderResult(
        audio=audio,
        coarse=coarse,
        refined=refined,
        griffin_lim_errors=gl.errors,
        timings_s=timings,
    )
