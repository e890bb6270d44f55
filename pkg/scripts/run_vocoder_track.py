#!/usr/bin/env python3
"""Reconstruction quality versus codebook size.

Trains one RVQ codec per requested codebook size on the training split of a
manifest, round-trips every utterance through encode/decode, and reports mean
mel-cepstral distortion next to the nominal and measured bitrates. Larger
codebooks should show lower distortion at higher bitrate.
"""

import argparse
import json
import os

import numpy as np

from duss.codec import CodecConfig, decode, encode, train_codebooks
from duss.corpus import load_manifest
from duss.dsp import AnalysisConfig, analyze, mel_cepstrum, read_wav
from duss.metrics import mcd, measured_bitrate, nominal_bitrate


def parse_sizes(text: str):
    sizes = [int(part) for part in text.split(",") if part.strip()]
    if not sizes or any(v < 2 for v in sizes):
        raise argparse.ArgumentTypeError(f"bad codebook size list: {text!r}")
    return sizes


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("manifest")
    parser.add_argument("--codebook-sizes", type=parse_sizes, default=[8, 64, 256])
    parser.add_argument("--num-quantizers", type=int, default=2)
    parser.add_argument("--kmeans-iters", type=int, default=25)
    parser.add_argument("--n-coeffs", type=int, default=13)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="optional JSON report path")
    args = parser.parse_args(argv)

    manifest = load_manifest(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))
    analysis = AnalysisConfig()
    train_mels, all_mels, durations = [], [], []
    for entry in manifest.entries:
        wave = read_wav(os.path.join(base, entry.audio_path))
        mel = analyze(wave, analysis)
        all_mels.append(mel)
        durations.append(len(wave) / wave.sample_rate)
        if entry.split == "train":
            train_mels.append(mel)
    if not train_mels:
        parser.error("manifest has no train-split utterances")

    rows = []
    for vocab_size in args.codebook_sizes:
        cfg = CodecConfig(codebook_size=vocab_size,
                          num_quantizers=args.num_quantizers,
                          feature_dim=analysis.n_mels,
                          kmeans_iters=args.kmeans_iters, seed=args.seed)
        codec = train_codebooks(train_mels, cfg)
        token_files, distortions = [], []
        for mel in all_mels:
            tokens = encode(codec, mel)
            token_files.append(tokens)
            decoded = decode(codec, tokens)
            distortions.append(mcd(mel_cepstrum(mel, args.n_coeffs),
                                   mel_cepstrum(decoded, args.n_coeffs)))
        rows.append({
            "codebook_size": vocab_size,
            "mean_mcd_db": float(np.mean(distortions)),
            "nominal_bitrate_bps": nominal_bitrate(
                vocab_size, args.num_quantizers, cfg.frame_rate),
            "measured_bitrate_bps": measured_bitrate(token_files, durations),
        })

    header = f"{'V':>6}  {'MCD (dB)':>9}  {'nominal bps':>12}  {'measured bps':>13}"
    print(header)
    for row in rows:
        print(f"{row['codebook_size']:>6}  {row['mean_mcd_db']:>9.4f}  "
              f"{row['nominal_bitrate_bps']:>12.2f}  "
              f"{row['measured_bitrate_bps']:>13.2f}")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"rows": rows, "seed": args.seed,
                       "num_quantizers": args.num_quantizers}, fh, indent=2)
            fh.write("\n")
        print(f"report: {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
