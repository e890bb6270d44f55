#!/usr/bin/env python3
"""Write a small synthetic corpus for exercising the pipeline.

Utterances are harmonic sine mixtures with per-style variation: `read` is
plain voiced harmonics, `whisper` swaps most of the harmonic energy for
noise, and `laughing` amplitude-modulates the harmonics into bursts. The
output directory gets an audio/ tree plus a corpus.jsonl manifest.
"""

import argparse
import os

import numpy as np

from duss.corpus import CorpusManifest, UtteranceEntry, save_manifest
from duss.dsp import Waveform, write_wav

STYLE_CYCLE = ("read", "read", "whisper", "laughing")


def synth_utterance(rng: np.random.Generator, style: str, duration: float,
                    sample_rate: int) -> np.ndarray:
    t = np.arange(int(duration * sample_rate)) / sample_rate
    f0 = rng.uniform(120.0, 350.0)
    voiced = np.zeros_like(t)
    for harmonic in (1, 2, 3):
        voiced += (rng.uniform(0.1, 0.5)
                   * np.sin(2 * np.pi * f0 * harmonic * t
                            + rng.uniform(0.0, 2.0 * np.pi)))
    noise = rng.normal(size=t.size)
    if style == "whisper":
        x = 0.15 * voiced + 0.4 * noise
    elif style == "laughing":
        burst_rate = rng.uniform(3.0, 6.0)
        envelope = 0.5 * (1.0 + np.sin(2.0 * np.pi * burst_rate * t)) ** 2
        x = envelope * voiced + 0.02 * noise
    else:
        x = voiced + 0.02 * noise
    return 0.5 * x / np.max(np.abs(x))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--utterances", type=int, default=8)
    parser.add_argument("--duration", type=float, default=0.9,
                        help="seconds per utterance")
    parser.add_argument("--sample-rate", type=int, default=16000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if args.utterances < 1:
        parser.error("--utterances must be >= 1")

    rng = np.random.default_rng(args.seed)
    audio_dir = os.path.join(args.out, "audio")
    os.makedirs(audio_dir, exist_ok=True)

    entries = []
    for i in range(args.utterances):
        style = STYLE_CYCLE[i % len(STYLE_CYCLE)]
        # reserve the two tail utterances for dev/test once the corpus is big
        # enough that training still has material left
        split = "train"
        if args.utterances >= 4:
            split = {args.utterances - 2: "dev",
                     args.utterances - 1: "test"}.get(i, "train")
        utt_id = f"utt_{i:03d}"
        samples = synth_utterance(rng, style, args.duration, args.sample_rate)
        rel = os.path.join("audio", f"{utt_id}.wav")
        write_wav(os.path.join(args.out, rel),
                  Waveform(samples, args.sample_rate))
        entries.append(UtteranceEntry(id=utt_id, audio_path=rel, style_tag=style,
                                      duration=args.duration, split=split))

    manifest_path = os.path.join(args.out, "corpus.jsonl")
    save_manifest(CorpusManifest(entries=tuple(entries)), manifest_path)
    print(f"wrote {len(entries)} utterances under {args.out}")
    print(f"manifest: {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
