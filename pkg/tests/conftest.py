import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phrasesynth.checkpoint import Checkpoint, save_checkpoint
from phrasesynth.contour import ContourConfig, ContourNet
from phrasesynth.dsp import AudioConfig
from phrasesynth.synthetic import make_corpus
from phrasesynth.texture import TextureConfig, TextureNet
from phrasesynth.training import build_dataset


def one_note_smf(pitch: int = 60, off_tick: int = 480, tpq: int = 480) -> bytes:
    """Hand-assembled format-0 file: one note, default tempo.

    With 480 tpq and the default 500000 us/quarter, tick 480 is 0.5 s.
    """
    header = struct.pack(">4sIHHH", b"MThd", 6, 0, 1, tpq)
    events = bytearray()
    events += bytes([0x00, 0x90, pitch, 0x40])        # delta 0, note on
    events += _vlq(off_tick) + bytes([0x80, pitch, 0x00])  # note off
    events += bytes([0x00, 0xFF, 0x2F, 0x00])         # end of track
    track = struct.pack(">4sI", b"MTrk", len(events)) + bytes(events)
    return header + track


def _vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


@pytest.fixture(scope="session")
def one_note_bytes() -> bytes:
    return one_note_smf()


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Synthetic (MIDI, WAV, manifest) pair rendered exactly from a score."""
    directory = tmp_path_factory.mktemp("corpus")
    manifest_path, entries = make_corpus(directory)
    return manifest_path, entries


@pytest.fixture(scope="session")
def dataset(corpus):
    _, entries = corpus
    return build_dataset(entries)


@pytest.fixture(scope="session")
def tiny_checkpoint_path(tmp_path_factory) -> Path:
    """Seeded, untrained checkpoint with compact widths (fast to render)."""
    audio = AudioConfig()
    contour_config = ContourConfig(
        in_channels=128, out_channels=audio.num_bins,
        encoder_widths=(8, 8, 12, 12), condition_dim=1,
    )
    texture_config = TextureConfig(hidden_channels=4)
    ckpt = Checkpoint(
        contour_config=contour_config,
        texture_config=texture_config,
        audio_config=audio,
        labels=["synthlead"],
        contour_params=ContourNet(contour_config).init(11).params,
        texture_params=TextureNet(texture_config).init(12).params,
    )
    path = tmp_path_factory.mktemp("ckpt") / "untrained.ckpt"
    save_checkpoint(ckpt, path)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
