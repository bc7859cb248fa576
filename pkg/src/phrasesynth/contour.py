"""Coarse pianoroll-to-spectrogram translation network.

A U-shaped stack of 1-D convolutions along time with pitch rows as input
channels: each encoder stage convolves, downsamples by 2, and applies a
softplus; the decoder mirrors with zero-stuffed (transposed) convolutions
and skip connections from the matching encoder stages; a final 1x1
convolution with softplus yields a non-negative (bins, frames) magnitude
matrix. An optional one-hot condition vector is broadcast along time and
concatenated to the bottleneck channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convops as ops
from .errors import InvalidConfig, MissingCondition, ShapeMismatch


@dataclass(frozen=True)
class ContourConfig:
    in_channels: int = 128
    out_channels: int = 513
    encoder_widths: tuple[int, ...] = (256, 384, 512, 512)
    kernel: int = 5
    condition_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))
        if self.in_channels < 1 or self.out_channels < 1:
            raise InvalidConfig("channel counts must be positive")
        if not self.encoder_widths or any(w < 1 for w in self.encoder_widths):
            raise InvalidConfig("encoder widths must be a non-empty positive list")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise InvalidConfig(f"kernel {self.kernel} must be odd")
        if self.condition_dim < 0:
            raise InvalidConfig("condition_dim must be >= 0")

    @property
    def num_stages(self) -> int:
        return len(self.encoder_widths)

    @property
    def pad_multiple(self) -> int:
        return 2 ** self.num_stages


def _layer_dims(cfg: ContourConfig) -> list[tuple[str, int, int, int]]:
    """(name, in_ch, out_ch, kernel) for every conv layer, in init order."""
    w = cfg.encoder_widths
    n = cfg.num_stages
    layers = []
    for i in range(1, n + 1):
        in_ch = cfg.in_channels if i == 1 else w[i - 2]
        layers.append((f"enc{i}", in_ch, w[i - 1], cfg.kernel))
    for i in range(n, 0, -1):
        in_ch = w[n - 1] + cfg.condition_dim if i == n else 2 * w[i - 1]
        out_ch = w[i - 2] if i >= 2 else w[0]
        layers.append((f"dec{i}", in_ch, out_ch, cfg.kernel))
    layers.append(("head", w[0], cfg.out_channels, 1))
    return layers


class ContourNet:
    """Holds the named weight tensors and runs the differentiable map."""

    def __init__(self, config: ContourConfig):
        self.config = config
        self.params: dict[str, np.ndarray] = {}

    def init(self, seed: int) -> "ContourNet":
        """Seeded uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases."""
        rng = np.random.default_rng(seed)
        for name, in_ch, out_ch, k in _layer_dims(self.config):
            fan_in = in_ch * k
            self.params[f"{name}.w"] = ops.uniform_init(rng, (out_ch, in_ch, k), fan_in)
            self.params[f"{name}.b"] = np.zeros(out_ch, dtype=np.float32)
        return self

    def astype(self, dtype) -> "ContourNet":
        self.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return self

    def _check_condition(self, cond: np.ndarray | None, batch: int) -> np.ndarray | None:
        k = self.config.condition_dim
        if k == 0:
            if cond is not None:
                raise ShapeMismatch("condition given but condition_dim is 0")
            return None
        if cond is None:
            raise MissingCondition(f"condition_dim is {k} but no condition given")
        cond = np.asarray(cond)
        if cond.ndim == 1:
            cond = np.broadcast_to(cond, (batch, k))
        if cond.shape != (batch, k):
            raise ShapeMismatch(f"condition shape {cond.shape} != ({batch}, {k})")
        if not np.isin(cond, (0, 1)).all() or not (cond.sum(axis=1) == 1).all():
            raise ShapeMismatch("condition rows must be one-hot")
        return cond

    def forward(self, x: np.ndarray, cond: np.ndarray | None = None,
                want_cache: bool = False):
        """x: (P, T) or (B, P, T) binary roll -> (B?, F, T) coarse magnitudes."""
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        if x.ndim != 3 or x.shape[1] != self.config.in_channels:
            raise ShapeMismatch(
                f"roll shape {x.shape} incompatible with "
                f"{self.config.in_channels} pitch channels"
            )
        dtype = self.params["head.w"].dtype
        x = np.ascontiguousarray(x, dtype=dtype)
        batch, _, t_orig = x.shape
        cond = self._check_condition(cond, batch)

        multiple = self.config.pad_multiple
        t_pad = -t_orig % multiple
        if t_pad:
            x = np.pad(x, ((0, 0), (0, 0), (0, t_pad)))

        n = self.config.num_stages
        caches = {}
        skips = []
        h = x
        for i in range(1, n + 1):
            h, caches[f"enc{i}.conv"] = ops.conv1d_forward(
                h, self.params[f"enc{i}.w"], self.params[f"enc{i}.b"])
            h, caches[f"enc{i}.dec"] = ops.decimate2_forward(h)
            h, caches[f"enc{i}.act"] = ops.softplus_forward(h)
            skips.append(h)

        if cond is not None:
            tiles = np.broadcast_to(
                cond.astype(dtype)[:, :, None], (batch, cond.shape[1], h.shape[2])
            )
            h = np.concatenate([h, tiles], axis=1)

        for i in range(n, 0, -1):
            h, caches[f"dec{i}.up"] = ops.zerostuff2_forward(h)
            h, caches[f"dec{i}.conv"] = ops.conv1d_forward(
                h, self.params[f"dec{i}.w"], self.params[f"dec{i}.b"])
            h, caches[f"dec{i}.act"] = ops.softplus_forward(h)
            if i >= 2:
                h = np.concatenate([h, skips[i - 2]], axis=1)

        h, caches["head.conv"] = ops.conv1d_forward(
            h, self.params["head.w"], self.params["head.b"])
        y, caches["head.act"] = ops.softplus_forward(h)
        y = y[:, :, :t_orig]

        if want_cache:
            cache = _Cache(caches, t_orig, t_pad, batch, cond is not None)
            return (y[0] if squeeze else y), cache
        return y[0] if squeeze else y

    def backward(self, dy: np.ndarray, cache: "_Cache"):
        """Gradients of a scalar loss wrt every weight tensor and the input."""
        cfg = self.config
        n = cfg.num_stages
        caches = cache.caches
        grads: dict[str, np.ndarray] = {}

        if dy.ndim == 2:
            dy = dy[None]
        if cache.t_pad:
            dy = np.pad(dy, ((0, 0), (0, 0), (0, cache.t_pad)))
        dh = ops.softplus_backward(dy, caches["head.act"])
        dh, grads["head.w"], grads["head.b"] = ops.conv1d_backward(
            dh, caches["head.conv"])

        dskips = [None] * n
        for i in range(1, n + 1):
            if i >= 2:
                skip_ch = cfg.encoder_widths[i - 2]
                dskips[i - 2] = dh[:, -skip_ch:]
                dh = dh[:, :-skip_ch]
            dh = ops.softplus_backward(dh, caches[f"dec{i}.act"])
            dh, grads[f"dec{i}.w"], grads[f"dec{i}.b"] = ops.conv1d_backward(
                dh, caches[f"dec{i}.conv"])
            dh = ops.zerostuff2_backward(dh, caches[f"dec{i}.up"])

        if cache.conditioned:
            dh = dh[:, :cfg.encoder_widths[n - 1]]

        for i in range(n, 0, -1):
            dh = dh + dskips[i - 1] if dskips[i - 1] is not None else dh
            dh = ops.softplus_backward(dh, caches[f"enc{i}.act"])
            dh = ops.decimate2_backward(dh, caches[f"enc{i}.dec"])
            dh, grads[f"enc{i}.w"], grads[f"enc{i}.b"] = ops.conv1d_backward(
                dh, caches[f"enc{i}.conv"])

        dx = dh[:, :, :cache.t_orig]
        return dx, grads


@dataclass
class _Cache:
    caches: dict = field(repr=False)
    t_orig: int = 0
    t_pad: int = 0
    batch: int = 1
    conditioned: bool = False
