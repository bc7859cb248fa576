"""Audio buffers, STFT analysis/synthesis, and Griffin-Lim phase recovery.

Defaults (16 kHz, n_fft 1024, hop 256) give 513 frequency bins at 62.5
frames/s, matching the pianoroll frame rate so score and spectrogram share
the time axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometry

DEFAULT_SAMPLE_RATE = 16_000
DEFAULT_N_FFT = 1024
DEFAULT_HOP = 256


@dataclass(frozen=True)
class AudioConfig:
    """Analysis geometry shared by the dataset builder and the renderer."""

    sample_rate: int = DEFAULT_SAMPLE_RATE
    n_fft: int = DEFAULT_N_FFT
    hop: int = DEFAULT_HOP

    def __post_init__(self):
        _check_geometry(self.n_fft, self.hop)
        if self.sample_rate <= 0:
            raise InvalidGeometry(f"sample rate {self.sample_rate} must be positive")

    @property
    def num_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop


@dataclass
class AudioBuffer:
    """Mono audio, float64 samples nominally in [-1, 1]."""

    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidGeometry(f"sample rate {self.sample_rate} must be positive")
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class ComplexSpectrogram:
    """Complex STFT bins, shape (n_fft // 2 + 1, frames)."""

    n_fft: int
    hop: int
    sample_rate: int
    bins: np.ndarray

    @property
    def num_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop


@dataclass
class Spectrogram:
    """Non-negative magnitude matrix with the same geometry as the STFT."""

    n_fft: int
    hop: int
    sample_rate: int
    values: np.ndarray

    @property
    def num_bins(self) -> int:
        return self.values.shape[0]

    @property
    def num_frames(self) -> int:
        return self.values.shape[1]

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop


@dataclass
class GriffinLimResult:
    """Reconstructed audio plus the recorded spectral-error trajectory.

    errors[i] is the relative spectral error of the signal after i
    projection rounds; errors[0] is the random-phase starting point.
    """

    audio: AudioBuffer
    errors: np.ndarray = field(repr=False)


def _check_geometry(n_fft: int, hop: int) -> None:
    if n_fft < 2 or (n_fft & (n_fft - 1)) != 0:
        raise InvalidGeometry(f"n_fft {n_fft} is not a power of two")
    if not 0 < hop <= n_fft:
        raise InvalidGeometry(f"hop {hop} outside (0, {n_fft}]")


def hann_window(n_fft: int) -> np.ndarray:
    """Periodic Hann window (COLA-compliant at hop = n_fft / 4)."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft))


def _center_pad(x: np.ndarray, pad: int) -> np.ndarray:
    # reflect padding needs len > pad; degenerate short signals fall back
    # to zeros (their edge frames are not meaningful anyway)
    if len(x) > pad:
        return np.pad(x, pad, mode="reflect")
    return np.pad(x, pad, mode="constant")


def stft(
    audio: AudioBuffer,
    n_fft: int = DEFAULT_N_FFT,
    hop: int = DEFAULT_HOP,
) -> ComplexSpectrogram:
    """Short-time Fourier transform with centered frames.

    The signal is padded by n_fft/2 on both sides so frame t is centered
    at sample t * hop; the frame count is floor(len / hop) + 1.
    """
    _check_geometry(n_fft, hop)
    x = audio.samples
    num_frames = len(x) // hop + 1
    padded = _center_pad(x, n_fft // 2)
    window = hann_window(n_fft)

    frames = np.empty((num_frames, n_fft), dtype=np.float64)
    for t in range(num_frames):
        frames[t] = padded[t * hop: t * hop + n_fft]
    bins = np.fft.rfft(frames * window, axis=1).T
    return ComplexSpectrogram(n_fft, hop, audio.sample_rate, bins)


def istft(spec: ComplexSpectrogram) -> AudioBuffer:
    """Inverse STFT by squared-window-normalized overlap-add.

    Requires the COLA geometry hop = n_fft / 4 with the Hann window;
    reconstructs (frames - 1) * hop samples.
    """
    _check_geometry(spec.n_fft, spec.hop)
    if spec.hop * 4 != spec.n_fft:
        raise InvalidGeometry(
            f"istft requires hop = n_fft/4, got hop {spec.hop} for n_fft {spec.n_fft}"
        )
    if spec.bins.shape[0] != spec.n_fft // 2 + 1:
        raise InvalidGeometry(
            f"{spec.bins.shape[0]} bins inconsistent with n_fft {spec.n_fft}"
        )
    n_fft, hop = spec.n_fft, spec.hop
    num_frames = spec.num_frames
    window = hann_window(n_fft)

    frames = np.fft.irfft(spec.bins.T, n=n_fft, axis=1)
    total = (num_frames - 1) * hop + n_fft
    acc = np.zeros(total, dtype=np.float64)
    norm = np.zeros(total, dtype=np.float64)
    wsq = window * window
    for t in range(num_frames):
        acc[t * hop: t * hop + n_fft] += frames[t] * window
        norm[t * hop: t * hop + n_fft] += wsq
    acc /= np.maximum(norm, 1e-12)

    out_len = (num_frames - 1) * hop
    samples = acc[n_fft // 2: n_fft // 2 + out_len]
    return AudioBuffer(spec.sample_rate, samples)


def magnitude(spec: ComplexSpectrogram) -> Spectrogram:
    """Element-wise modulus of the complex bins."""
    return Spectrogram(spec.n_fft, spec.hop, spec.sample_rate, np.abs(spec.bins))


def spectral_error(candidate: ComplexSpectrogram, target: Spectrogram) -> float:
    """Relative Frobenius distance between |candidate| and the target."""
    ref = np.linalg.norm(target.values)
    if ref == 0.0:
        return 0.0
    return float(np.linalg.norm(np.abs(candidate.bins) - target.values) / ref)


def griffin_lim(
    mag: Spectrogram,
    iterations: int = 60,
    seed: int = 0,
) -> GriffinLimResult:
    """Reconstruct a waveform from a magnitude spectrogram.

    Classic alternating projection: start from seeded uniform random
    phase, then repeatedly resynthesize with the target magnitude and the
    phase of the previous round's STFT. The recorded relative spectral
    error is non-increasing.
    """
    _check_geometry(mag.n_fft, mag.hop)
    if iterations < 0:
        raise InvalidGeometry(f"iterations {iterations} must be >= 0")
    values = np.asarray(mag.values, dtype=np.float64)
    target = Spectrogram(mag.n_fft, mag.hop, mag.sample_rate, values)

    rng = np.random.default_rng(seed)
    phase = rng.uniform(-np.pi, np.pi, size=values.shape)
    spec = ComplexSpectrogram(
        mag.n_fft, mag.hop, mag.sample_rate, values * np.exp(1j * phase)
    )
    audio = istft(spec)

    errors = np.empty(iterations + 1, dtype=np.float64)
    for i in range(iterations):
        analysis = stft(audio, mag.n_fft, mag.hop)
        errors[i] = spectral_error(analysis, target)
        phase = np.angle(analysis.bins)
        spec = ComplexSpectrogram(
            mag.n_fft, mag.hop, mag.sample_rate, values * np.exp(1j * phase)
        )
        audio = istft(spec)
    errors[iterations] = spectral_error(stft(audio, mag.n_fft, mag.hop), target)
    return GriffinLimResult(audio=audio, errors=errors)


def resample(audio: AudioBuffer, to_rate: int) -> AudioBuffer:
    """Linear-interpolation resampling (identity when rates match)."""
    if to_rate <= 0:
        raise InvalidGeometry(f"target rate {to_rate} must be positive")
    if to_rate == audio.sample_rate:
        return AudioBuffer(audio.sample_rate, audio.samples.copy())
    n_in = len(audio.samples)
    n_out = round(n_in * to_rate / audio.sample_rate)
    if n_in == 0 or n_out == 0:
        return AudioBuffer(to_rate, np.zeros(n_out, dtype=np.float64))
    positions = np.arange(n_out) * (audio.sample_rate / to_rate)
    samples = np.interp(positions, np.arange(n_in), audio.samples)
    return AudioBuffer(to_rate, samples)
