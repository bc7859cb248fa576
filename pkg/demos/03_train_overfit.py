"""Overfit the two-stage model on one synthetic pair, end to end.

The harness renders audio exactly from the score (four sine harmonics per
note, pitched so harmonic h lands in refiner band h), trains translator
and refiner jointly, and reports the loss trajectory plus the per-band
effect of the refinement. A few hundred steps already show the shape of
the result; bump STEPS to 2000 for the full experiment.
"""

import tempfile
import time
from pathlib import Path

import numpy as np

from phrasesynth import band_partition, build_dataset, loss_fn
from phrasesynth.synthetic import make_corpus, overfit_configs
from phrasesynth.training import predict, train_loop

STEPS = 300

with tempfile.TemporaryDirectory() as workdir:
    manifest, entries = make_corpus(Path(workdir))
    pairs, labels = build_dataset(entries)
    pair = pairs[0]
    print(f"dataset: roll {pair.roll.shape}, target {pair.target.shape}, "
          f"labels {labels}")

    contour_cfg, texture_cfg, train_cfg = overfit_configs(
        len(labels), steps=STEPS)

    def describe(ckpt, tag):
        coarse, refined = predict(ckpt, pair.roll, pair.label_index)
        total, (lc, lr), _ = loss_fn(coarse, refined, pair.target,
                                     train_cfg.lambda_coarse,
                                     train_cfg.lambda_refined)
        print(f"{tag}: loss {total:.4f} (coarse {lc:.4f}, refined {lr:.4f})")
        bands = band_partition(coarse.shape[0], texture_cfg.num_bands)
        for i, (lo, hi) in enumerate(bands, start=1):
            log_t = np.log1p(pair.target[lo:hi])
            e_c = np.mean((np.log1p(coarse[lo:hi]) - log_t) ** 2)
            e_r = np.mean((np.log1p(refined[lo:hi]) - log_t) ** 2)
            print(f"  band {i} (bins {lo}..{hi - 1}): "
                  f"coarse {e_c:.5f} refined {e_r:.5f}")
        return total

    from dataclasses import replace
    init_ckpt, _ = train_loop(pairs, labels, contour_cfg, texture_cfg,
                              replace(train_cfg, steps=0))
    initial = describe(init_ckpt, "before training")

    t0 = time.time()
    ckpt, metrics = train_loop(pairs, labels, contour_cfg, texture_cfg,
                               train_cfg)
    print(f"\ntrained {STEPS} steps in {time.time() - t0:.0f} s")
    final = describe(ckpt, "after training")
    print(f"\nloss ratio: {final / initial:.1%}")
