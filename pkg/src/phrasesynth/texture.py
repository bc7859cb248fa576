"""Multi-band residual refinement of the coarse spectrogram.

The frequency axis is split into contiguous bands. Processing runs low
band to high band: each band stage applies its convolution blocks to the
full running matrix, but only that band's rows receive the residual.
Higher-frequency structure is therefore added progressively, stage by
stage, and bins of band j stay untouched until step j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convops as ops
from .errors import InvalidBandCount, InvalidConfig, ShapeMismatch


@dataclass(frozen=True)
class TextureConfig:
    num_bands: int = 4
    blocks_per_band: int = 2
    hidden_channels: int = 32

    def __post_init__(self):
        if self.num_bands < 1:
            raise InvalidConfig("num_bands must be >= 1")
        if self.blocks_per_band < 1:
            raise InvalidConfig("blocks_per_band must be >= 1")
        if self.hidden_channels < 1:
            raise InvalidConfig("hidden_channels must be >= 1")


def band_partition(num_bins: int, num_bands: int) -> list[tuple[int, int]]:
    """Split [0, num_bins) into contiguous bands, low bins first.

    Band sizes differ by at most one; the leftover bins go to the lowest
    bands, e.g. 513 bins over 4 bands -> sizes 129, 128, 128, 128.
    """
    if not 1 <= num_bands <= num_bins:
        raise InvalidBandCount(
            f"band count {num_bands} outside 1..{num_bins}"
        )
    base, extra = divmod(num_bins, num_bands)
    bands = []
    start = 0
    for i in range(num_bands):
        size = base + (1 if i < extra else 0)
        bands.append((start, start + size))
        start += size
    return bands


class TextureNet:
    """Per-band stacks of (3x3 conv -> leaky ReLU -> 3x3 conv) residual blocks."""

    def __init__(self, config: TextureConfig):
        self.config = config
        self.params: dict[str, np.ndarray] = {}

    def init(self, seed: int) -> "TextureNet":
        rng = np.random.default_rng(seed)
        h = self.config.hidden_channels
        for band in range(1, self.config.num_bands + 1):
            for block in range(1, self.config.blocks_per_band + 1):
                prefix = f"band{band}.block{block}"
                self.params[f"{prefix}.in.w"] = ops.uniform_init(rng, (h, 1, 3, 3), 9)
                self.params[f"{prefix}.in.b"] = np.zeros(h, dtype=np.float32)
                self.params[f"{prefix}.out.w"] = ops.uniform_init(
                    rng, (1, h, 3, 3), h * 9)
                self.params[f"{prefix}.out.b"] = np.zeros(1, dtype=np.float32)
        return self

    def astype(self, dtype) -> "TextureNet":
        self.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return self

    def forward(self, coarse: np.ndarray, want_cache: bool = False,
                want_stages: bool = False):
        """coarse: (F, T) or (B, F, T) -> refined, same shape, clamped >= 0.

        want_stages additionally returns the running sums S_0..S_B before
        the final clamp (used by structure tests and diagnostics).
        """
        squeeze = coarse.ndim == 2
        if squeeze:
            coarse = coarse[None]
        if coarse.ndim != 3:
            raise ShapeMismatch(f"expected (B, F, T), got {coarse.shape}")
        dtype = self.params["band1.block1.in.w"].dtype
        s = np.ascontiguousarray(coarse, dtype=dtype)
        bands = band_partition(s.shape[1], self.config.num_bands)

        caches = {}
        stages = [s]
        for bi, (lo, hi) in enumerate(bands, start=1):
            h = s[:, None, :, :]  # single-channel image
            for blk in range(1, self.config.blocks_per_band + 1):
                prefix = f"band{bi}.block{blk}"
                h, caches[f"{prefix}.in"] = ops.conv2d3_forward(
                    h, self.params[f"{prefix}.in.w"], self.params[f"{prefix}.in.b"])
                h, caches[f"{prefix}.act"] = ops.leaky_relu_forward(h)
                h, caches[f"{prefix}.out"] = ops.conv2d3_forward(
                    h, self.params[f"{prefix}.out.w"], self.params[f"{prefix}.out.b"])
            residual = h[:, 0, :, :]
            s_next = s.copy()
            s_next[:, lo:hi, :] += residual[:, lo:hi, :]
            s = s_next
            stages.append(s)

        refined = np.maximum(s, 0.0)
        out = refined[0] if squeeze else refined
        result = [out]
        if want_cache:
            result.append(_Cache(caches, bands, s, squeeze))
        if want_stages:
            result.append([st[0] if squeeze else st for st in stages])
        return result[0] if len(result) == 1 else tuple(result)

    def backward(self, dy: np.ndarray, cache: "_Cache"):
        """Gradients wrt every weight tensor and the coarse input."""
        if dy.ndim == 2:
            dy = dy[None]
        grads: dict[str, np.ndarray] = {}
        ds = dy * (cache.pre_clamp > 0)  # clamp subgradient

        for bi in range(self.config.num_bands, 0, -1):
            lo, hi = cache.bands[bi - 1]
            dres = np.zeros_like(ds)
            dres[:, lo:hi, :] = ds[:, lo:hi, :]
            dh = dres[:, None, :, :]
            for blk in range(self.config.blocks_per_band, 0, -1):
                prefix = f"band{bi}.block{blk}"
                dh, grads[f"{prefix}.out.w"], grads[f"{prefix}.out.b"] = (
                    ops.conv2d3_backward(dh, cache.caches[f"{prefix}.out"]))
                dh = ops.leaky_relu_backward(dh, cache.caches[f"{prefix}.act"])
                dh, grads[f"{prefix}.in.w"], grads[f"{prefix}.in.b"] = (
                    ops.conv2d3_backward(dh, cache.caches[f"{prefix}.in"]))
            ds = ds + dh[:, 0, :, :]

        dcoarse = ds[0] if cache.squeeze else ds
        return dcoarse, grads


@dataclass
class _Cache:
    caches: dict = field(repr=False)
    bands: list = field(repr=False)
    pre_clamp: np.ndarray = field(repr=False)
    squeeze: bool = False
