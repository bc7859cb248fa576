"""Command-line entry point: ingest, train, synth, eval, serve, selftest.

Exit codes: 0 success, 1 user error (bad input, missing file, unknown
label), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .contour import ContourConfig
from .dsp import AudioConfig
from .errors import PhraseSynthError
from .midifile import parse_midi
from .pianoroll import score_to_pianoroll
from .render import render
from .texture import TextureConfig
from .training import (
    TrainConfig,
    build_dataset,
    evaluate,
    read_manifest,
    train_loop,
    write_metrics,
)
from .wavio import write_wav


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (user error) instead of 2 on bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="phrasesynth",
                     description="score-to-audio phrase synthesis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="parse MIDI to a pianoroll")
    p.add_argument("--midi", required=True, type=Path)
    p.add_argument("--frame-rate", type=float, default=AudioConfig().frame_rate)
    p.add_argument("--print-roll", action="store_true",
                   help="print the sparse pianoroll JSON")
    p.add_argument("--json", action="store_true",
                   help="print summary and roll as one JSON object")

    p = sub.add_parser("train", help="train on a (MIDI, WAV) manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="checkpoint path")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--segment-frames", type=int, default=256)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--metrics", type=Path, default=None,
                   help="metrics CSV path (default: <out>.metrics.csv)")
    p.add_argument("--widths", default="256,384,512,512",
                   help="comma-separated encoder widths")
    p.add_argument("--texture-hidden", type=int, default=32)
    p.add_argument("--resume", type=Path, default=None)

    p = sub.add_parser("synth", help="render a MIDI file to WAV")
    p.add_argument("--midi", required=True, type=Path)
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--instrument", default=None)
    p.add_argument("--gl-iters", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, type=Path)

    p = sub.add_parser("eval", help="log-spectral distance over a manifest")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--checkpoint", type=Path, action="append", default=[])
    p.add_argument("--persist-dir", type=Path, default=None)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--config", type=Path, default=None,
                   help="key=value config file (flags win)")

    sub.add_parser("selftest", help="run built-in correctness checks")
    return parser


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _cmd_ingest(args) -> int:
    data = _require_file(args.midi).read_bytes()
    score = parse_midi(data)
    roll = score_to_pianoroll(score, frame_rate=args.frame_rate)
    sparse = roll.to_sparse()
    if args.json:
        print(json.dumps({
            "notes": len(score.notes),
            "duration_s": score.duration_s,
            "pianoroll": sparse,
        }))
    elif args.print_roll:
        print(json.dumps(sparse))
    else:
        print(f"{args.midi}: {len(score.notes)} notes, "
              f"{score.duration_s:.3f} s, roll {roll.num_pitches} x "
              f"{roll.num_frames} frames @ {roll.frame_rate} fps")
    return 0


def _cmd_train(args) -> int:
    entries = read_manifest(_require_file(args.manifest))
    audio_config = AudioConfig()
    pairs, labels = build_dataset(entries, audio_config)
    widths = tuple(int(w) for w in str(args.widths).split(",") if w)
    contour_config = ContourConfig(
        out_channels=audio_config.num_bins,
        encoder_widths=widths,
        condition_dim=len(labels),
    )
    texture_config = TextureConfig(hidden_channels=args.texture_hidden)
    train_config = TrainConfig(
        steps=args.steps,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        segment_frames=args.segment_frames,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
    )
    resume = load_checkpoint(args.resume) if args.resume else None
    if resume is not None:
        contour_config = resume.contour_config
        texture_config = resume.texture_config

    t0 = time.perf_counter()
    ckpt, metrics = train_loop(
        pairs, labels, contour_config, texture_config, train_config,
        audio_config, resume=resume, checkpoint_path=args.out,
    )
    elapsed = time.perf_counter() - t0
    metrics_path = args.metrics or args.out.with_suffix(args.out.suffix + ".metrics.csv")
    write_metrics(metrics, metrics_path)
    final = metrics[-1].loss if metrics else float("nan")
    print(f"trained {len(metrics)} step(s) in {elapsed:.1f} s; "
          f"final loss {final:.6f}")
    print(f"checkpoint: {args.out}")
    print(f"metrics: {metrics_path}")
    return 0


def _cmd_synth(args) -> int:
    ckpt = load_checkpoint(_require_file(args.checkpoint))
    data = _require_file(args.midi).read_bytes()

    t0 = time.perf_counter()
    score = parse_midi(data)
    roll = score_to_pianoroll(
        score,
        frame_rate=ckpt.audio_config.frame_rate,
        pitch_min=0,
        pitch_max=ckpt.contour_config.in_channels - 1,
    )
    t_parse = time.perf_counter() - t0

    result = render(ckpt, roll, instrument=args.instrument,
                    gl_iterations=args.gl_iters, seed=args.seed)

    t0 = time.perf_counter()
    args.out.write_bytes(write_wav(result.audio))
    t_write = time.perf_counter() - t0

    print(f"score: {len(score.notes)} notes, {score.duration_s:.3f} s; "
          f"roll frames: {roll.num_frames}")
    print(f"audio: {result.audio.duration_s:.3f} s "
          f"({len(result.audio.samples)} samples @ {result.audio.sample_rate} Hz)"
          f" -> {args.out}")
    timings = {"parse": t_parse, **result.timings_s, "write": t_write}
    print("stage timings: " +
          " | ".join(f"{k} {v:.3f} s" for k, v in timings.items()))
    return 0


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(_require_file(args.checkpoint))
    entries = read_manifest(_require_file(args.manifest))
    pairs, labels = build_dataset(entries, ckpt.audio_config)
    if labels != ckpt.labels:
        unknown = set(labels) - set(ckpt.labels)
        if unknown:
            raise PhraseSynthError(
                f"manifest labels {sorted(unknown)} not in checkpoint "
                f"labels {ckpt.labels}"
            )
        for pair in pairs:  # re-index against the checkpoint's label order
            pair.label_index = ckpt.labels.index(pair.label)
    report = evaluate(ckpt, pairs)
    if args.json:
        print(json.dumps({
            "mean_lsd": report.mean_lsd,
            "pairs": [
                {"midi": str(r.midi_path), "wav": str(r.wav_path),
                 "label": r.label, "frames": r.num_frames, "lsd": r.lsd}
                for r in report.rows
            ],
        }))
    else:
        for r in report.rows:
            print(f"{r.midi_path}\t{r.label}\t{r.num_frames} frames\t"
                  f"LSD {r.lsd:.6f}")
        print(f"mean LSD over {len(report.rows)} pair(s): {report.mean_lsd:.6f}")
    return 0


def _read_config_file(path: Path) -> dict:
    values: dict[str, list[str]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PhraseSynthError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values.setdefault(key.strip().lower(), []).append(value.strip())
    return values


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    checkpoints = list(args.checkpoint)
    port, host, workers = args.port, args.host, args.workers
    persist = args.persist_dir
    if args.config is not None:
        file_values = _read_config_file(_require_file(args.config))
        defaults = _build_parser().parse_args(["serve"])
        if "port" in file_values and port == defaults.port:
            port = int(file_values["port"][-1])
        if "host" in file_values and host == defaults.host:
            host = file_values["host"][-1]
        if "workers" in file_values and workers == defaults.workers:
            workers = int(file_values["workers"][-1])
        if "persist_dir" in file_values and persist is None:
            persist = Path(file_values["persist_dir"][-1])
        if not checkpoints:
            checkpoints = [Path(p) for p in file_values.get("checkpoint", [])]

    for path in checkpoints:
        _require_file(path)
    app = create_app(ServiceConfig(
        checkpoint_paths=checkpoints,
        persist_dir=persist,
        workers=workers,
    ))
    print(f"serving on http://{host}:{port} with {len(checkpoints)} "
          f"checkpoint(s)")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks():
    from . import convops as ops
    from .contour import ContourNet
    from .dsp import AudioBuffer, Spectrogram, griffin_lim, istft, stft
    from .pianoroll import Pianoroll, pianoroll_to_score
    from .texture import TextureNet, band_partition

    rng = np.random.default_rng(20240601)

    def check_stft_oracle():
        n_fft, hop = 256, 64
        x = rng.uniform(-1, 1, 512)
        spec = stft(AudioBuffer(16000, x), n_fft, hop)
        pad = n_fft // 2
        padded = np.pad(x, pad, mode="reflect")
        window = 0.5 * (1 - np.cos(2 * np.pi * np.arange(n_fft) / n_fft))
        k = np.arange(n_fft // 2 + 1)
        dft = np.exp(-2j * np.pi * np.outer(k, np.arange(n_fft)) / n_fft)
        for t in range(spec.num_frames):
            frame = padded[t * hop: t * hop + n_fft] * window
            ref = dft @ frame
            err = np.max(np.abs(spec.bins[:, t] - ref))
            assert err < 1e-6, f"frame {t}: {err}"

    def check_round_trip():
        x = rng.uniform(-1, 1, 4096)
        audio = AudioBuffer(16000, x)
        rec = istft(stft(audio, 1024, 256))
        n = len(rec.samples)
        err = np.max(np.abs(rec.samples - x[:n]))
        assert err < 1e-6, err

    def check_griffin_lim():
        t = np.arange(8000) / 16000
        x = 0.5 * np.sin(2 * np.pi * 440 * t) + 0.3 * np.sin(2 * np.pi * 880 * t)
        mag = np.abs(stft(AudioBuffer(16000, x), 1024, 256).bins)
        spec = Spectrogram(1024, 256, 16000, mag)
        res = griffin_lim(spec, iterations=30, seed=7)
        assert np.all(np.diff(res.errors) <= 1e-7), "error sequence increased"
        res2 = griffin_lim(spec, iterations=30, seed=7)
        assert np.array_equal(res.audio.samples, res2.audio.samples)

    def check_gradients():
        x = rng.standard_normal((2, 3, 8))
        w = rng.standard_normal((4, 3, 5)) * 0.5
        b = rng.standard_normal(4) * 0.1
        dy = rng.standard_normal((2, 4, 8))
        _, cache = ops.conv1d_forward(x, w, b)
        _, dw, _ = ops.conv1d_backward(dy, cache)
        eps = 1e-6
        idx = (1, 2, 3)
        w[idx] += eps
        up, _ = ops.conv1d_forward(x, w, b)
        w[idx] -= 2 * eps
        down, _ = ops.conv1d_forward(x, w, b)
        w[idx] += eps
        num = np.sum((up - down) * dy) / (2 * eps)
        assert abs(dw[idx] - num) / max(abs(num), 1e-12) < 1e-4

        net = ContourNet(ContourConfig(
            in_channels=6, out_channels=9, encoder_widths=(4, 4),
            condition_dim=0)).init(3).astype(np.float64)
        xin = (rng.uniform(0, 1, (1, 6, 8)) > 0.5).astype(np.float64)
        target = rng.uniform(0, 1, (1, 9, 8))

        def loss_of():
            y = net.forward(xin)
            return 0.5 * np.sum((y - target) ** 2)

        y, cache = net.forward(xin, want_cache=True)
        _, grads = net.backward(y - target, cache)
        key = "enc1.w"
        flat_index = (1, 2, 3)
        net.params[key][flat_index] += eps
        up_l = loss_of()
        net.params[key][flat_index] -= 2 * eps
        down_l = loss_of()
        net.params[key][flat_index] += eps
        num = (up_l - down_l) / (2 * eps)
        rel = abs(grads[key][flat_index] - num) / max(abs(num), 1e-12)
        assert rel < 1e-4, rel

    def check_texture_structure():
        assert [hi - lo for lo, hi in band_partition(513, 4)] == [129, 128, 128, 128]
        net = TextureNet(TextureConfig(num_bands=3, blocks_per_band=2,
                                       hidden_channels=4))
        net.init(0)
        for key in net.params:
            net.params[key][:] = 0
        coarse = rng.uniform(0, 2, (9, 8)).astype(np.float32)
        refined = net.forward(coarse)
        assert np.array_equal(refined, coarse), "zero-weight residual identity"

    def check_roll_round_trip():
        for _ in range(20):
            data = (rng.uniform(0, 1, (16, 64)) > 0.8).astype(np.uint8)
            roll = Pianoroll(40, 55, 62.5, data)
            back = score_to_pianoroll(pianoroll_to_score(roll), 62.5, 40, 55)
            assert np.array_equal(back.data, roll.data)

    return [
        ("stft-dft-oracle", check_stft_oracle),
        ("stft-istft-round-trip", check_round_trip),
        ("griffin-lim", check_griffin_lim),
        ("gradient-checks", check_gradients),
        ("texture-structure", check_texture_structure),
        ("pianoroll-round-trip", check_roll_round_trip),
    ]


def _cmd_selftest(_args) -> int:
    failures = 0
    for name, fn in _selftest_checks():
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (PhraseSynthError, FileNotFoundError, KeyError, ValueError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001 - internal error boundary
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
