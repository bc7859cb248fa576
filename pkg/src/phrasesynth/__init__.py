"""Score-to-audio phrase synthesis.

Binary pianoroll in, expressive audio out: a coarse pianoroll-to-
spectrogram translator followed by a multi-band residual refiner, with
Griffin-Lim phase reconstruction for the final waveform.
"""

from .checkpoint import AdamState, Checkpoint, load_checkpoint, save_checkpoint
from .contour import ContourConfig, ContourNet
from .dsp import (
    AudioBuffer,
    AudioConfig,
    ComplexSpectrogram,
    GriffinLimResult,
    Spectrogram,
    griffin_lim,
    istft,
    magnitude,
    resample,
    stft,
)
from .midifile import MidiScore, NoteEvent, parse_midi, write_midi
from .pianoroll import Pianoroll, pianoroll_to_score, score_to_pianoroll
from .render import RenderResult, render
from .texture import TextureConfig, TextureNet, band_partition
from .training import (
    DatasetPair,
    ManifestEntry,
    TrainConfig,
    build_dataset,
    evaluate,
    loss_fn,
    read_manifest,
    train_loop,
)
from .wavio import read_wav, write_wav

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AudioBuffer",
    "AudioConfig",
    "Checkpoint",
    "ComplexSpectrogram",
    "ContourConfig",
    "ContourNet",
    "DatasetPair",
    "GriffinLimResult",
    "ManifestEntry",
    "MidiScore",
    "NoteEvent",
    "Pianoroll",
    "RenderResult",
    "Spectrogram",
    "TextureConfig",
    "TextureNet",
    "TrainConfig",
    "band_partition",
    "build_dataset",
    "evaluate",
    "griffin_lim",
    "istft",
    "load_checkpoint",
    "loss_fn",
    "magnitude",
    "parse_midi",
    "pianoroll_to_score",
    "read_manifest",
    "read_wav",
    "render",
    "resample",
    "save_checkpoint",
    "score_to_pianoroll",
    "stft",
    "train_loop",
    "write_midi",
    "write_wav",
]
