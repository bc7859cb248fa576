"""Dataset assembly, the training loop, and evaluation.

Pairs are (pianoroll, magnitude spectrogram, instrument index) built from
(MIDI, WAV) files at the shared frame rate. The loss is a log-compressed
L2 with deep supervision on the coarse output, so the translator must
carry the rough mapping on its own while the refiner cleans up detail.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import AdamState, Checkpoint, save_checkpoint
from .contour import ContourConfig, ContourNet
from .dsp import AudioConfig, magnitude, resample, stft
from .errors import (
    AlignmentError,
    EmptyDataset,
    InvalidConfig,
    NonFiniteLoss,
    ShapeMismatch,
)
from .midifile import parse_midi
from .pianoroll import score_to_pianoroll
from .texture import TextureConfig, TextureNet
from .wavio import read_wav

log = logging.getLogger(__name__)

METRICS_HEADER = ("step", "loss", "loss_coarse", "loss_refined")


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 1000
    learning_rate: float = 1e-3
    batch_size: int = 4
    segment_frames: int = 256
    seed: int = 0
    lambda_coarse: float = 0.5
    lambda_refined: float = 1.0
    checkpoint_every: int = 0  # 0 = only at the end
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or self.segment_frames < 1:
            raise InvalidConfig("steps/batch_size/segment_frames must be positive")
        if self.learning_rate <= 0:
            raise InvalidConfig("learning rate must be positive")
        if self.lambda_coarse < 0 or self.lambda_refined < 0:
            raise InvalidConfig("loss weights must be non-negative")


@dataclass(frozen=True)
class ManifestEntry:
    midi_path: Path
    wav_path: Path
    label: str


@dataclass
class DatasetPair:
    roll: np.ndarray        # float32 (P, T)
    target: np.ndarray      # float32 (F, T)
    label_index: int
    label: str
    midi_path: Path | None = None
    wav_path: Path | None = None

    @property
    def num_frames(self) -> int:
        return self.roll.shape[1]


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Tab-separated lines: midi_path, wav_path, instrument_label.

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not parts[2].strip():
            raise InvalidConfig(
                f"{path}:{lineno}: expected midi<TAB>wav<TAB>label"
            )
        entries.append(ManifestEntry(
            midi_path=base / parts[0], wav_path=base / parts[1],
            label=parts[2].strip(),
        ))
    return entries


def labels_of(entries: list[ManifestEntry]) -> list[str]:
    """Distinct labels in sorted order; positions define the one-hot index."""
    return sorted({e.label for e in entries})


ALIGNMENT_TOLERANCE = 0.05


def build_dataset(
    entries: list[ManifestEntry],
    audio_config: AudioConfig = AudioConfig(),
    pitch_min: int = 0,
    pitch_max: int = 127,
) -> tuple[list[DatasetPair], list[str]]:
    """Load and align every (MIDI, WAV) pair at the shared frame rate."""
    labels = labels_of(entries)
    index = {lab: i for i, lab in enumerate(labels)}
    pairs = []
    for entry in entries:
        try:
            score = parse_midi(entry.midi_path.read_bytes())
        except Exception as exc:
            raise type(exc)(f"{entry.midi_path}: {exc}") from exc
        roll = score_to_pianoroll(
            score, audio_config.frame_rate, pitch_min, pitch_max)
        try:
            audio = read_wav(entry.wav_path.read_bytes())
        except Exception as exc:
            raise type(exc)(f"{entry.wav_path}: {exc}") from exc
        audio = resample(audio, audio_config.sample_rate)
        target = magnitude(stft(audio, audio_config.n_fft, audio_config.hop))

        t_roll, t_spec = roll.num_frames, target.num_frames
        if abs(t_roll - t_spec) > ALIGNMENT_TOLERANCE * max(t_roll, t_spec):
            raise AlignmentError(
                f"{entry.midi_path} vs {entry.wav_path}: pianoroll has "
                f"{t_roll} frames but audio has {t_spec} (> "
                f"{ALIGNMENT_TOLERANCE:.0%} apart)"
            )
        t = min(t_roll, t_spec)
        pairs.append(DatasetPair(
            roll=roll.data[:, :t].astype(np.float32),
            target=target.values[:, :t].astype(np.float32),
            label_index=index[entry.label],
            label=entry.label,
            midi_path=entry.midi_path,
            wav_path=entry.wav_path,
        ))
    return pairs, labels


# ---------------------------------------------------------------------------
# loss


def loss_fn(coarse: np.ndarray, refined: np.ndarray, target: np.ndarray,
            lambda_coarse: float = 0.5, lambda_refined: float = 1.0):
    """Log-compressed L2 with per-term breakdown.

    L = lc * mean((log1p(coarse) - log1p(target))^2)
      + lr * mean((log1p(refined) - log1p(target))^2)
    """
    if coarse.shape != target.shape or refined.shape != target.shape:
        raise ShapeMismatch(
            f"shapes differ: coarse {coarse.shape}, refined {refined.shape}, "
            f"target {target.shape}"
        )
    log_t = np.log1p(target)
    diff_c = np.log1p(coarse) - log_t
    diff_r = np.log1p(refined) - log_t
    term_c = float(np.mean(diff_c * diff_c))
    term_r = float(np.mean(diff_r * diff_r))
    total = lambda_coarse * term_c + lambda_refined * term_r
    cache = (diff_c, diff_r, coarse, refined, lambda_coarse, lambda_refined)
    return total, (term_c, term_r), cache


def loss_backward(cache):
    """Gradients of the total loss wrt the coarse and refined predictions."""
    diff_c, diff_r, coarse, refined, lc, lr = cache
    n = diff_c.size
    dcoarse = (2.0 * lc / n) * diff_c / (1.0 + coarse)
    drefined = (2.0 * lr / n) * diff_r / (1.0 + refined)
    return dcoarse.astype(coarse.dtype), drefined.astype(refined.dtype)


def log_spectral_distance(pred: np.ndarray, target: np.ndarray) -> float:
    """Frame-averaged RMS difference of log(1 + magnitude)."""
    if pred.shape != target.shape:
        raise ShapeMismatch(f"{pred.shape} vs {target.shape}")
    diff = np.log1p(pred) - np.log1p(target)
    per_frame = np.sqrt(np.mean(diff * diff, axis=0))
    return float(np.mean(per_frame))


# ---------------------------------------------------------------------------
# optimizer


def adam_init(params: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
        t=0,
    )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, cfg: TrainConfig) -> None:
    """One in-place Adam update over all tensors."""
    state.t += 1
    bias1 = 1.0 - cfg.beta1 ** state.t
    bias2 = 1.0 - cfg.beta2 ** state.t
    for key, p in params.items():
        g = grads[key].astype(p.dtype, copy=False)
        m = state.m[key]
        v = state.v[key]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)


# ---------------------------------------------------------------------------
# training


def _one_hot(indices: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((len(indices), k), dtype=np.float32)
    out[np.arange(len(indices)), indices] = 1.0
    return out


def _crop_or_pad(arr: np.ndarray, start: int, length: int) -> np.ndarray:
    seg = arr[:, start:start + length]
    if seg.shape[1] < length:
        seg = np.pad(seg, ((0, 0), (0, length - seg.shape[1])))
    return seg


def _step_rng(seed: int, step: int) -> np.random.Generator:
    # keyed per absolute step so save/resume replays the same batches
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, step)))


def _batch(pairs: list[DatasetPair], cfg: TrainConfig, k: int, step: int):
    rng = _step_rng(cfg.seed, step)
    idx = rng.integers(0, len(pairs), size=cfg.batch_size)
    rolls, targets, labels = [], [], []
    for i in idx:
        pair = pairs[i]
        max_start = max(1, pair.num_frames - cfg.segment_frames + 1)
        start = int(rng.integers(0, max_start))
        rolls.append(_crop_or_pad(pair.roll, start, cfg.segment_frames))
        targets.append(_crop_or_pad(pair.target, start, cfg.segment_frames))
        labels.append(pair.label_index)
    cond = _one_hot(np.asarray(labels), k) if k > 0 else None
    return np.stack(rolls), np.stack(targets), cond


@dataclass
class MetricsRow:
    step: int
    loss: float
    loss_coarse: float
    loss_refined: float


def write_metrics(rows: list[MetricsRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in rows:
            writer.writerow([r.step, repr(r.loss), repr(r.loss_coarse),
                             repr(r.loss_refined)])


def train_loop(
    pairs: list[DatasetPair],
    labels: list[str],
    contour_config: ContourConfig,
    texture_config: TextureConfig,
    train_config: TrainConfig,
    audio_config: AudioConfig = AudioConfig(),
    resume: Checkpoint | None = None,
    checkpoint_path: str | Path | None = None,
) -> tuple[Checkpoint, list[MetricsRow]]:
    """Joint gradient-descent training of both subnets.

    Deterministic for a fixed seed: batches are derived from the absolute
    step index, so resuming from a checkpoint at step n reproduces the
    exact metrics of an uninterrupted run.
    """
    if not pairs:
        raise EmptyDataset("training requires at least one aligned pair")
    if contour_config.condition_dim != len(labels):
        raise InvalidConfig(
            f"condition_dim {contour_config.condition_dim} != "
            f"{len(labels)} instrument labels"
        )
    if train_config.segment_frames % contour_config.pad_multiple:
        raise InvalidConfig(
            f"segment_frames {train_config.segment_frames} not a multiple "
            f"of {contour_config.pad_multiple}"
        )

    contour = ContourNet(contour_config)
    texture = TextureNet(texture_config)
    if resume is not None:
        contour.params = {k: v.copy() for k, v in resume.contour_params.items()}
        texture.params = {k: v.copy() for k, v in resume.texture_params.items()}
        start_step = resume.step
    else:
        contour.init(train_config.seed)
        texture.init(train_config.seed + 1)
        start_step = 0

    params = {f"contour/{k}": v for k, v in contour.params.items()}
    params |= {f"texture/{k}": v for k, v in texture.params.items()}
    if resume is not None and resume.optimizer is not None:
        state = AdamState(
            m={k: v.copy() for k, v in resume.optimizer.m.items()},
            v={k: v.copy() for k, v in resume.optimizer.v.items()},
            t=resume.optimizer.t,
        )
    else:
        state = adam_init(params)

    def snapshot(step: int) -> Checkpoint:
        return Checkpoint(
            contour_config=contour_config,
            texture_config=texture_config,
            audio_config=audio_config,
            labels=labels,
            contour_params=contour.params,
            texture_params=texture.params,
            step=step,
            optimizer=state,
        )

    metrics: list[MetricsRow] = []
    k = len(labels)
    for step in range(start_step + 1, train_config.steps + 1):
        rolls, targets, cond = _batch(pairs, train_config, k, step)
        coarse, ccache = contour.forward(rolls, cond, want_cache=True)
        refined, tcache = texture.forward(coarse, want_cache=True)
        total, (term_c, term_r), lcache = loss_fn(
            coarse, refined, targets,
            train_config.lambda_coarse, train_config.lambda_refined)
        if not np.isfinite(total):
            raise NonFiniteLoss(step, total)

        dcoarse_direct, drefined = loss_backward(lcache)
        dcoarse_tex, tgrads = texture.backward(drefined, tcache)
        _, cgrads = contour.backward(dcoarse_direct + dcoarse_tex, ccache)
        grads = {f"contour/{k2}": v for k2, v in cgrads.items()}
        grads |= {f"texture/{k2}": v for k2, v in tgrads.items()}
        adam_step(params, grads, state, train_config)

        metrics.append(MetricsRow(step, total, term_c, term_r))
        if (checkpoint_path is not None and train_config.checkpoint_every
                and step % train_config.checkpoint_every == 0):
            save_checkpoint(snapshot(step), checkpoint_path)
        if step % 100 == 0 or step == train_config.steps:
            log.info("step %d: loss %.6f (coarse %.6f, refined %.6f)",
                     step, total, term_c, term_r)

    final = snapshot(max(train_config.steps, start_step))
    if checkpoint_path is not None:
        save_checkpoint(final, checkpoint_path)
    return final, metrics


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalRow:
    midi_path: Path | None
    wav_path: Path | None
    label: str
    num_frames: int
    lsd: float


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)

    @property
    def mean_lsd(self) -> float:
        return float(np.mean([r.lsd for r in self.rows])) if self.rows else 0.0


def predict(ckpt: Checkpoint, roll: np.ndarray, label_index: int = 0):
    """Full-pair forward pass: (coarse, refined) magnitude matrices."""
    contour = ContourNet(ckpt.contour_config)
    contour.params = ckpt.contour_params
    texture = TextureNet(ckpt.texture_config)
    texture.params = ckpt.texture_params
    k = ckpt.contour_config.condition_dim
    cond = _one_hot(np.asarray([label_index]), k)[0] if k > 0 else None
    coarse = contour.forward(roll.astype(np.float32), cond)
    refined = texture.forward(coarse)
    return coarse, refined


def evaluate(ckpt: Checkpoint, pairs: list[DatasetPair]) -> EvalReport:
    """Per-pair log-spectral distance of the refined output."""
    report = EvalReport()
    for pair in pairs:
        _, refined = predict(ckpt, pair.roll, pair.label_index)
        report.rows.append(EvalRow(
            midi_path=pair.midi_path,
            wav_path=pair.wav_path,
            label=pair.label,
            num_frames=pair.num_frames,
            lsd=log_spectral_distance(refined, pair.target),
        ))
    return report
