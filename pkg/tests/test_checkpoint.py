import numpy as np
import pytest

from phrasesynth.checkpoint import (
    AdamState,
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from phrasesynth.contour import ContourConfig, ContourNet
from phrasesynth.dsp import AudioConfig
from phrasesynth.errors import CorruptFile, VersionMismatch
from phrasesynth.texture import TextureConfig, TextureNet


def make_checkpoint(with_optimizer: bool = False) -> Checkpoint:
    contour_config = ContourConfig(in_channels=8, out_channels=9,
                                   encoder_widths=(4, 4), condition_dim=2)
    texture_config = TextureConfig(num_bands=2, blocks_per_band=1,
                                   hidden_channels=3)
    contour = ContourNet(contour_config).init(1)
    texture = TextureNet(texture_config).init(2)
    optimizer = None
    if with_optimizer:
        params = {f"contour/{k}": v for k, v in contour.params.items()}
        params |= {f"texture/{k}": v for k, v in texture.params.items()}
        rng = np.random.default_rng(3)
        optimizer = AdamState(
            m={k: rng.standard_normal(v.shape).astype(np.float32)
               for k, v in params.items()},
            v={k: rng.uniform(0, 1, v.shape).astype(np.float32)
               for k, v in params.items()},
            t=17,
        )
    return Checkpoint(
        contour_config=contour_config,
        texture_config=texture_config,
        audio_config=AudioConfig(),
        labels=["piano", "violin"],
        contour_params=contour.params,
        texture_params=texture.params,
        step=42,
        optimizer=optimizer,
    )


class TestRoundTrip:
    def test_bit_identical_tensors(self, tmp_path):
        ckpt = make_checkpoint()
        path = tmp_path / "c.ckpt"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.labels == ckpt.labels
        assert loaded.step == 42
        assert loaded.contour_config == ckpt.contour_config
        assert loaded.texture_config == ckpt.texture_config
        assert loaded.audio_config == ckpt.audio_config
        assert loaded.optimizer is None
        for key, val in ckpt.contour_params.items():
            assert np.array_equal(loaded.contour_params[key], val)
            assert loaded.contour_params[key].dtype == np.float32
        for key, val in ckpt.texture_params.items():
            assert np.array_equal(loaded.texture_params[key], val)

    def test_optimizer_state_round_trip(self, tmp_path):
        ckpt = make_checkpoint(with_optimizer=True)
        path = tmp_path / "c.ckpt"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.optimizer is not None
        assert loaded.optimizer.t == 17
        for key, val in ckpt.optimizer.m.items():
            assert np.array_equal(loaded.optimizer.m[key], val)
        for key, val in ckpt.optimizer.v.items():
            assert np.array_equal(loaded.optimizer.v[key], val)

    def test_file_is_byte_stable(self, tmp_path):
        ckpt = make_checkpoint()
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(ckpt, a)
        save_checkpoint(ckpt, b)
        assert a.read_bytes() == b.read_bytes()


class TestIntegrity:
    def test_flipped_payload_byte(self, tmp_path):
        path = tmp_path / "c.ckpt"
        save_checkpoint(make_checkpoint(), path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(CorruptFile):
            load_checkpoint(path)

    def test_version_bump(self, tmp_path):
        import struct
        import zlib
        path = tmp_path / "c.ckpt"
        save_checkpoint(make_checkpoint(), path)
        data = bytearray(path.read_bytes())[:-4]
        data[4:8] = struct.pack("<I", 2)
        data += struct.pack("<I", zlib.crc32(bytes(data)))
        path.write_bytes(bytes(data))
        with pytest.raises(VersionMismatch):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "c.ckpt"
        save_checkpoint(make_checkpoint(), path)
        path.write_bytes(path.read_bytes()[:40])
        with pytest.raises(CorruptFile):
            load_checkpoint(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "c.ckpt"
        path.write_bytes(b"RIFF" + b"\x00" * 64)
        with pytest.raises(CorruptFile):
            load_checkpoint(path)

    def test_magic_header(self, tmp_path):
        path = tmp_path / "c.ckpt"
        save_checkpoint(make_checkpoint(), path)
        assert path.read_bytes()[:4] == b"PNET"
