#!/usr/bin/env python3
"""Generation under the shipped sampling presets.

Trains a codec and an n-gram token model on a manifest, then samples a batch
of sequences at each acoustic preset triple (k, p, temperature) and reports
stop behavior, measured bitrate, and the centroid quality proxy. Optionally
re-runs the random-search tuner to compare its pick against the presets.
"""

import argparse
import os

import numpy as np

from duss.cli import PRESETS
from duss.codec import CodecConfig, encode, train_codebooks
from duss.corpus import load_manifest
from duss.dsp import AnalysisConfig, analyze, read_wav
from duss.metrics import measured_bitrate
from duss.sampler import SamplingParams, generate
from duss.toylm import train_ngram
from duss.tuner import CentroidScorer, SearchSpace, param_importance, tune

ACOUSTIC_PRESETS = ("acoustic-1024", "acoustic-512", "acoustic-256")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("manifest")
    parser.add_argument("--codebook-size", type=int, default=64,
                        help="codec vocabulary; desk-scale stand-in for the "
                             "preset-native sizes")
    parser.add_argument("--kmeans-iters", type=int, default=25)
    parser.add_argument("--order", type=int, default=3)
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--count", type=int, default=10,
                        help="sequences per preset")
    parser.add_argument("--max-len", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tune-trials", type=int, default=0,
                        help="if > 0, also run the tuner with this many trials")
    args = parser.parse_args(argv)

    manifest = load_manifest(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))
    analysis = AnalysisConfig()
    mels = [analyze(read_wav(os.path.join(base, e.audio_path)), analysis)
            for e in manifest.entries if e.split == "train"]
    if not mels:
        parser.error("manifest has no train-split utterances")

    cfg = CodecConfig(codebook_size=args.codebook_size, num_quantizers=1,
                      feature_dim=analysis.n_mels,
                      kmeans_iters=args.kmeans_iters, seed=args.seed)
    codec = train_codebooks(mels, cfg)
    streams = [encode(codec, mel) for mel in mels]
    model = train_ngram(streams, n=args.order, alpha=args.alpha)
    print(f"codec V={args.codebook_size}, model vocab {model.vocab_size} "
          f"over {len(streams)} utterances")

    print(f"{'preset':>14}  {'k':>4}  {'p':>6}  {'temp':>6}  "
          f"{'natural':>8}  {'mean len':>9}  {'bps':>8}")
    for preset_index, name in enumerate(ACOUSTIC_PRESETS):
        preset = PRESETS[name]
        params = SamplingParams(k=preset["k"], p=preset["p"],
                                temperature=preset["temperature"])
        sequences, natural = [], 0
        for i in range(args.count):
            rng = np.random.default_rng([args.seed, preset_index, i])
            result = generate(model, params, args.max_len, rng,
                              frame_rate=cfg.frame_rate)
            sequences.append(result.sequence)
            natural += int(result.natural)
        lengths = [s.num_frames for s in sequences]
        nonempty = [s for s in sequences if s.num_frames]
        rate = float(cfg.frame_rate)
        if nonempty:
            bps = measured_bitrate(nonempty,
                                   [s.num_frames / rate for s in nonempty])
        else:
            bps = float("nan")
        print(f"{name:>14}  {params.k:>4}  {params.p:>6.3f}  "
              f"{params.temperature:>6.3f}  {natural:>5}/{args.count:<2}  "
              f"{np.mean(lengths):>9.1f}  {bps:>8.2f}")

    if args.tune_trials > 0:
        history = tune(SearchSpace(), CentroidScorer(codec), model,
                       dev_contexts=list(range(4)), n_trials=args.tune_trials,
                       seed=args.seed, max_len=args.max_len)
        best = history.best_trial
        print(f"tuned best: k={best.params.k} p={best.params.p:.3f} "
              f"temperature={best.params.temperature:.3f} "
              f"score={best.score:.6g}")
        importance = param_importance(history)
        if importance:
            print("importance: " + "  ".join(
                f"{name}={importance[name]:.3f}" for name in ("k", "p", "temperature")))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
