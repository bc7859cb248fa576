"""Checkpoint persistence.

Layout: magic "PNET" | u32 version | u32 metadata length | UTF-8 JSON
metadata | concatenated little-endian float32 tensors in metadata order |
trailing CRC32 of everything before it. All integers little-endian. The
format is language-neutral and byte-exact: load(save(c)) is bit-identical
for every tensor.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contour import ContourConfig
from .dsp import AudioConfig
from .errors import CorruptFile, VersionMismatch
from .texture import TextureConfig

MAGIC = b"PNET"
VERSION = 1


@dataclass
class AdamState:
    """First/second moment estimates keyed like the weight tensors."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


@dataclass
class Checkpoint:
    contour_config: ContourConfig
    texture_config: TextureConfig
    audio_config: AudioConfig
    labels: list[str]
    contour_params: dict[str, np.ndarray]
    texture_params: dict[str, np.ndarray]
    step: int = 0
    optimizer: AdamState | None = field(default=None, repr=False)


def _named_tensors(ckpt: Checkpoint) -> list[tuple[str, np.ndarray]]:
    out = [(f"contour/{k}", v) for k, v in ckpt.contour_params.items()]
    out += [(f"texture/{k}", v) for k, v in ckpt.texture_params.items()]
    if ckpt.optimizer is not None:
        for prefix, table in (("m", ckpt.optimizer.m), ("v", ckpt.optimizer.v)):
            out += [(f"optim/{prefix}/{k}", v) for k, v in table.items()]
    return out


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    tensors = _named_tensors(ckpt)
    meta = {
        "contour": {
            "in_channels": ckpt.contour_config.in_channels,
            "out_channels": ckpt.contour_config.out_channels,
            "encoder_widths": list(ckpt.contour_config.encoder_widths),
            "kernel": ckpt.contour_config.kernel,
            "condition_dim": ckpt.contour_config.condition_dim,
        },
        "texture": {
            "num_bands": ckpt.texture_config.num_bands,
            "blocks_per_band": ckpt.texture_config.blocks_per_band,
            "hidden_channels": ckpt.texture_config.hidden_channels,
        },
        "dsp": {
            "sample_rate": ckpt.audio_config.sample_rate,
            "n_fft": ckpt.audio_config.n_fft,
            "hop": ckpt.audio_config.hop,
        },
        "labels": list(ckpt.labels),
        "step": ckpt.step,
        "optimizer": (
            {"type": "adam", "step": ckpt.optimizer.t}
            if ckpt.optimizer is not None else None
        ),
        "tensors": [
            {"name": name, "shape": list(arr.shape)} for name, arr in tensors
        ],
    }
    meta_bytes = json.dumps(meta, separators=(",", ":")).encode("utf-8")

    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    for _, arr in tensors:
        blob += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)))
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise CorruptFile(f"{path}: not a checkpoint file")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise VersionMismatch(
            f"{path}: format version {version}, expected {VERSION}"
        )
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc_stored:
        raise CorruptFile(f"{path}: CRC32 mismatch")

    (meta_len,) = struct.unpack("<I", data[8:12])
    if 12 + meta_len > len(data) - 4:
        raise CorruptFile(f"{path}: metadata length out of bounds")
    try:
        meta = json.loads(data[12:12 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: bad metadata JSON") from exc

    pos = 12 + meta_len
    tables: dict[str, dict[str, np.ndarray]] = {
        "contour": {}, "texture": {}, "optim/m": {}, "optim/v": {},
    }
    for entry in meta["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = pos + 4 * count
        if end > len(data) - 4:
            raise CorruptFile(f"{path}: tensor {entry['name']} truncated")
        arr = np.frombuffer(data[pos:end], dtype="<f4").reshape(shape).copy()
        pos = end
        name = entry["name"]
        for prefix, table in tables.items():
            if name.startswith(prefix + "/"):
                table[name[len(prefix) + 1:]] = arr
                break
        else:
            raise CorruptFile(f"{path}: unknown tensor group for {name}")
    if pos != len(data) - 4:
        raise CorruptFile(f"{path}: trailing bytes after tensors")

    optimizer = None
    if meta.get("optimizer") is not None:
        optimizer = AdamState(
            m=tables["optim/m"], v=tables["optim/v"],
            t=int(meta["optimizer"]["step"]),
        )
    return Checkpoint(
        contour_config=ContourConfig(**meta["contour"]),
        texture_config=TextureConfig(**meta["texture"]),
        audio_config=AudioConfig(**meta["dsp"]),
        labels=list(meta["labels"]),
        contour_params=tables["contour"],
        texture_params=tables["texture"],
        step=int(meta["step"]),
        optimizer=optimizer,
    )
