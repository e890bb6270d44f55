"""Command-line entry point.

Subcommands cover the two tracks: train-codec / encode / decode for the
vocoder path, train-lm / generate / tune / evaluate for the acoustic path,
plus corpus-filter for data selection. Exit codes: 0 success, 1 usage or
validation error, 2 data error. Diagnostics go to stderr as JSON lines.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from . import containers, corpus, dsp, metrics, sampler, toylm, tuner
from .codec import (CodecConfig, RvqCodec, TokenSequence, decode_partial,
                    quantization_report, train_codebooks)
from .codec import decode as codec_decode
from .codec import encode as codec_encode
from .errors import DataError, ValidationError

# Configuration keys accepted in key=value files and as CLI flags;
# precedence is flags > file > preset > defaults.
_CONFIG_SCHEMA = {
    "codebook_size": int,
    "num_quantizers": int,
    "hop": int,
    "sample_rate": int,
    "frame_len": int,
    "n_mels": int,
    "window": str,
    "kmeans_iters": int,
    "commitment_weight": float,
    "codebook_weight": float,
    "mel_loss_weight": float,
    "k": int,
    "p": float,
    "temperature": float,
    "order": int,
    "alpha": float,
    "n_trials": int,
    "max_len": int,
    "gl_iterations": int,
    "n_coeffs": int,
}

_DEFAULTS = {
    "codebook_size": 1024,
    "num_quantizers": 2,
    "hop": dsp.DEFAULT_HOP,
    "sample_rate": dsp.DEFAULT_SAMPLE_RATE,
    "frame_len": dsp.DEFAULT_FRAME_LEN,
    "n_mels": dsp.DEFAULT_N_MELS,
    "window": "hann",
    "kmeans_iters": 50,
    "commitment_weight": 2.0,
    "codebook_weight": 8.0,
    "mel_loss_weight": 15.0,
    "k": 50,
    "p": 0.95,
    "temperature": 1.0,
    "order": 3,
    "alpha": 0.1,
    "n_trials": 300,
    "max_len": 500,
    "gl_iterations": 60,
    "n_coeffs": 13,
}

# One-flag reproductions of the submitted configurations: the two-stage
# 16 kHz vocoder and the three single-stage acoustic systems with their
# best tuned sampling triples.
PRESETS = {
    "vocoder-16k": {"codebook_size": 1024, "num_quantizers": 2, "sample_rate": 16000},
    "acoustic-1024": {"codebook_size": 1024, "num_quantizers": 1,
                      "k": 11, "p": 0.186, "temperature": 0.507},
    "acoustic-512": {"codebook_size": 512, "num_quantizers": 1,
                     "k": 176, "p": 0.521, "temperature": 0.375},
    "acoustic-256": {"codebook_size": 256, "num_quantizers": 1,
                     "k": 181, "p": 0.779, "temperature": 0.351},
}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings shared by every subcommand.

    The constructor cross-checks the fields the modules must agree on:
    hop, sample rate, and the feature dimensionality.
    """

    codec: CodecConfig
    sampling: sampler.SamplingParams
    analysis: dsp.AnalysisConfig
    order: int = 3
    alpha: float = 0.1
    n_trials: int = 300
    max_len: int = 500
    gl_iterations: int = 60
    n_coeffs: int = 13

    def __post_init__(self):
        if self.codec.hop != self.analysis.hop:
            raise ValidationError(
                f"codec hop {self.codec.hop} != analysis hop {self.analysis.hop}")
        if self.codec.sample_rate != self.analysis.sample_rate:
            raise ValidationError(
                f"codec rate {self.codec.sample_rate} != analysis rate "
                f"{self.analysis.sample_rate}")
        if self.codec.feature_dim != self.analysis.n_mels:
            raise ValidationError(
                f"codec feature_dim {self.codec.feature_dim} != n_mels "
                f"{self.analysis.n_mels}")
        if self.order < 1 or self.alpha <= 0:
            raise ValidationError("order must be >= 1 and alpha > 0")
        if self.n_trials < 1 or self.max_len < 1:
            raise ValidationError("n_trials and max_len must be >= 1")
        if not (1 <= self.n_coeffs <= self.analysis.n_mels):
            raise ValidationError(
                f"n_coeffs must be in [1, {self.analysis.n_mels}], got {self.n_coeffs}")


def _diag(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}), file=sys.stderr)


def parse_config_file(path) -> Dict:
    """Plain-text key=value settings; '#' starts a comment."""
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_SCHEMA:
                raise ValidationError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_SCHEMA[key](value)
            except ValueError:
                raise ValidationError(
                    f"{path}:{line_no}: bad value {value!r} for {key} "
                    f"({_CONFIG_SCHEMA[key].__name__})")
    return values


def resolve_settings(args) -> Dict:
    """Merge defaults, preset, config file, and explicit flags, in that order."""
    values = dict(_DEFAULTS)
    preset = getattr(args, "preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(
                f"unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    config_path = getattr(args, "config", None)
    if config_path is not None:
        values.update(parse_config_file(config_path))
    for key in _CONFIG_SCHEMA:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


def build_pipeline_config(args, seed: int) -> PipelineConfig:
    v = resolve_settings(args)
    codec_cfg = CodecConfig(
        codebook_size=v["codebook_size"], num_quantizers=v["num_quantizers"],
        hop=v["hop"], sample_rate=v["sample_rate"], feature_dim=v["n_mels"],
        commitment_weight=v["commitment_weight"], codebook_weight=v["codebook_weight"],
        mel_loss_weight=v["mel_loss_weight"], kmeans_iters=v["kmeans_iters"],
        seed=seed)
    analysis_cfg = dsp.AnalysisConfig(
        sample_rate=v["sample_rate"], frame_len=v["frame_len"], hop=v["hop"],
        window=v["window"], n_mels=v["n_mels"])
    params = sampler.SamplingParams(k=v["k"], p=v["p"], temperature=v["temperature"])
    return PipelineConfig(codec=codec_cfg, sampling=params, analysis=analysis_cfg,
                          order=v["order"], alpha=v["alpha"], n_trials=v["n_trials"],
                          max_len=v["max_len"], gl_iterations=v["gl_iterations"],
                          n_coeffs=v["n_coeffs"])


def resolve_seed(args) -> int:
    """--seed flag, else the DUSS_SEED environment variable, else 0."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("DUSS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"DUSS_SEED must be an integer, got {env!r}")
    return 0


def _audio_path(base_dir: str, entry: corpus.UtteranceEntry) -> str:
    if os.path.isabs(entry.audio_path):
        return entry.audio_path
    return os.path.join(base_dir, entry.audio_path)


def _load_manifest_diag(path) -> corpus.CorpusManifest:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        manifest = corpus.load_manifest(path)
    for w in caught:
        _diag("warning", message=str(w.message))
    return manifest


def _analysis_for_codec(codec: RvqCodec, cfg: PipelineConfig) -> dsp.AnalysisConfig:
    """Analysis settings matching a loaded codec (hop, rate, bands from the
    codec; frame length and window from the resolved config)."""
    return dsp.AnalysisConfig(
        sample_rate=codec.config.sample_rate, frame_len=cfg.analysis.frame_len,
        hop=codec.config.hop, window=cfg.analysis.window,
        n_mels=codec.config.feature_dim)


def _features_for_entry(path: str, analysis: dsp.AnalysisConfig) -> dsp.FeatureMatrix:
    wave = dsp.read_wav(path)
    wave = dsp.resample(wave, analysis.sample_rate)
    return dsp.analyze(wave, analysis)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_train_codec(args) -> int:
    seed = resolve_seed(args)
    cfg = build_pipeline_config(args, seed)
    manifest = _load_manifest_diag(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))

    train = [e for e in manifest.entries if e.split == "train"]
    excluded = set(args.exclude_styles.split(",")) - {""} if args.exclude_styles else set()
    filtered, removed = corpus.filter_styles(
        corpus.CorpusManifest(entries=tuple(train), source_name=manifest.source_name),
        excluded)
    for tag, count in removed.items():
        _diag("excluded_style", style_tag=tag, removed=count)
    if len(filtered) == 0:
        raise ValidationError("no training utterances left after filtering")

    features = [_features_for_entry(_audio_path(base, e), cfg.analysis)
                for e in filtered.entries]
    codec = train_codebooks(features, cfg.codec)
    containers.save_codec(args.out, codec)

    for stage, mse in enumerate(codec.stage_train_mse):
        print(f"stage {stage} train mse: {mse:.6g}")
    stacked = dsp.FeatureMatrix(
        data=np.concatenate([f.data for f in features], axis=0),
        frame_rate=features[0].frame_rate, kind=features[0].kind)
    print(quantization_report(codec, stacked))
    _diag("codec_written", path=args.out, utterances=len(filtered),
          frames=int(stacked.num_frames))
    return 0


def cmd_encode(args) -> int:
    cfg = build_pipeline_config(args, resolve_seed(args))
    codec = containers.load_codec(args.codec)
    analysis = _analysis_for_codec(codec, cfg)
    feats = _features_for_entry(args.audio, analysis)
    seq = codec_encode(codec, feats)
    containers.save_tokens(args.out, seq)
    print(f"encoded {seq.num_frames} frames x {seq.num_stages} stages "
          f"(V={seq.vocab_size})")
    _diag("tokens_written", path=args.out, frames=seq.num_frames,
          stages=seq.num_stages)
    return 0


def cmd_decode(args) -> int:
    cfg = build_pipeline_config(args, resolve_seed(args))
    codec = containers.load_codec(args.codec)
    seq = containers.load_tokens(args.tokens)
    analysis = _analysis_for_codec(codec, cfg)

    decoded = codec_decode(codec, seq)
    if args.features_out:
        containers.save_features(args.features_out, decoded)
    if decoded.num_frames == 0:
        wave = dsp.Waveform(np.zeros(0), analysis.sample_rate)
    else:
        wave = dsp.griffin_lim(decoded, analysis, iterations=cfg.gl_iterations)
    dsp.write_wav(args.out, wave)
    print(f"decoded {decoded.num_frames} frames -> {len(wave)} samples")

    if args.reference:
        ref_feats = _features_for_entry(args.reference, analysis)
        ref_cep = dsp.mel_cepstrum(ref_feats, cfg.n_coeffs)
        syn_cep = dsp.mel_cepstrum(decoded, cfg.n_coeffs)
        value = metrics.mcd(ref_cep, syn_cep)
        print(f"mcd_db: {value:.4f}")
    _diag("wav_written", path=args.out, samples=len(wave))
    return 0


def cmd_train_lm(args) -> int:
    cfg = build_pipeline_config(args, resolve_seed(args))
    corpora = [containers.load_tokens(path) for path in args.tokens]
    model = toylm.train_ngram(corpora, n=cfg.order, alpha=cfg.alpha)
    containers.save_ngram(args.out, model)
    print(f"trained order-{model.order} model, vocab {model.vocab_size} "
          f"(stop id {model.stop_id}), {len(model.counts)} contexts")
    _diag("lm_written", path=args.out, contexts=len(model.counts))
    return 0


def _check_lm_codec(model: toylm.NgramModel, codec: RvqCodec) -> None:
    if model.vocab_size != codec.config.codebook_size + 1:
        raise ValidationError(
            f"model vocabulary {model.vocab_size} does not match codebook size "
            f"{codec.config.codebook_size} + stop")


def cmd_generate(args) -> int:
    seed = resolve_seed(args)
    cfg = build_pipeline_config(args, seed)
    model = containers.load_ngram(args.lm)
    codec = containers.load_codec(args.codec)
    _check_lm_codec(model, codec)
    analysis = _analysis_for_codec(codec, cfg)
    frame_rate = codec.config.frame_rate

    os.makedirs(args.out_dir, exist_ok=True)
    sequences: List[TokenSequence] = []
    for i in range(args.count):
        rng = np.random.default_rng([seed, i])
        result = sampler.generate(model, cfg.sampling, cfg.max_len, rng,
                                  frame_rate=frame_rate)
        seq = result.sequence
        sequences.append(seq)
        stem = os.path.join(args.out_dir, f"gen_{i:03d}")
        containers.save_tokens(stem + ".dust", seq)
        decoded = decode_partial(codec, seq)
        if decoded.num_frames == 0:
            wave = dsp.Waveform(np.zeros(0), analysis.sample_rate)
        else:
            wave = dsp.griffin_lim(decoded, analysis, iterations=cfg.gl_iterations)
        dsp.write_wav(stem + ".wav", wave)
        print(f"gen_{i:03d}: frames={seq.num_frames} natural={result.natural}")

    nonempty = [s for s in sequences if s.num_frames > 0]
    if nonempty:
        durations = [s.num_frames / float(s.frame_rate) for s in nonempty]
        rate = metrics.measured_bitrate(nonempty, durations)
    else:
        rate = 0.0
    print(f"measured_bitrate_bps: {rate:.2f}")
    _diag("generated", count=args.count, out_dir=args.out_dir,
          measured_bitrate_bps=rate)
    return 0


def cmd_tune(args) -> int:
    seed = resolve_seed(args)
    cfg = build_pipeline_config(args, seed)
    model = containers.load_ngram(args.lm)
    codec = containers.load_codec(args.codec)
    _check_lm_codec(model, codec)

    space = tuner.SearchSpace(k_range=(args.k_min, args.k_max),
                              p_range=(args.p_min, args.p_max),
                              temp_range=(args.temp_min, args.temp_max))
    scorer = tuner.CentroidScorer(codec)
    dev_contexts = list(range(args.dev_count))
    history = tuner.tune(space, scorer, model, dev_contexts,
                         n_trials=cfg.n_trials, seed=seed, max_len=cfg.max_len)
    tuner.save_history_jsonl(history, args.out)

    best = history.best_trial
    print(f"best: V={codec.config.codebook_size} k={best.params.k} "
          f"p={best.params.p:.3f} temperature={best.params.temperature:.3f} "
          f"score={best.score:.6g}")
    min_trials = 2 * args.importance_bins
    finite = sum(1 for t in history.trials if not t.flagged)
    if finite >= min_trials:
        imp = tuner.param_importance(history, bins=args.importance_bins)
        print(f"importance: k={imp['k']:.3f} p={imp['p']:.3f} "
              f"temperature={imp['temperature']:.3f}")
    else:
        print(f"importance: unavailable (needs >= {min_trials} finite trials, "
              f"have {finite})")
    _diag("history_written", path=args.out, trials=len(history.trials),
          best_index=history.best)
    return 0


def cmd_evaluate(args) -> int:
    cfg = build_pipeline_config(args, resolve_seed(args))
    ref = _load_manifest_diag(args.reference)
    syn = _load_manifest_diag(args.synthesized)
    ref_base = os.path.dirname(os.path.abspath(args.reference))
    syn_base = os.path.dirname(os.path.abspath(args.synthesized))

    syn_by_id = {e.id: e for e in syn.entries}
    pairs = [(e, syn_by_id[e.id]) for e in ref.entries if e.id in syn_by_id]
    if not pairs:
        raise ValidationError("no shared utterance ids between the manifests")

    rows = []
    for ref_entry, syn_entry in pairs:
        ref_feats = _features_for_entry(_audio_path(ref_base, ref_entry), cfg.analysis)
        syn_feats = _features_for_entry(_audio_path(syn_base, syn_entry), cfg.analysis)
        ref_cep = dsp.mel_cepstrum(ref_feats, cfg.n_coeffs)
        syn_cep = dsp.mel_cepstrum(syn_feats, cfg.n_coeffs)
        mcd_db = metrics.mcd(ref_cep, syn_cep)

        ref_wave = dsp.resample(dsp.read_wav(_audio_path(ref_base, ref_entry)),
                                cfg.analysis.sample_rate)
        syn_wave = dsp.resample(dsp.read_wav(_audio_path(syn_base, syn_entry)),
                                cfg.analysis.sample_rate)
        ref_f0 = dsp.estimate_f0(ref_wave, hop=cfg.analysis.hop)
        syn_f0 = dsp.estimate_f0(syn_wave, hop=cfg.analysis.hop)
        f0_result = metrics.log_f0_rmse(ref_f0, syn_f0)
        if f0_result.no_overlap:
            _diag("warning", message=f"{ref_entry.id}: no shared voiced frames")
        rows.append(metrics.UtteranceMetrics(
            utterance_id=ref_entry.id, mcd_db=mcd_db,
            log_f0_rmse=f0_result.rmse, f0_no_overlap=f0_result.no_overlap))

    if args.tokens:
        seqs = [containers.load_tokens(p) for p in args.tokens]
        durations = [max(s.num_frames, 1) / float(s.frame_rate) for s in seqs]
        bitrate = metrics.measured_bitrate(seqs, durations)
    elif args.codec:
        codec = containers.load_codec(args.codec)
        bitrate = metrics.nominal_bitrate(codec.config.codebook_size,
                                          codec.config.num_quantizers,
                                          codec.config.frame_rate)
    else:
        bitrate = 0.0

    report = metrics.summarize(bitrate, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json() + "\n")
    print(report.to_table())
    _diag("evaluated", utterances=report.num_utterances,
          mcd_db=report.mcd_db, log_f0_rmse=report.log_f0_rmse)
    return 0


def cmd_corpus_filter(args) -> int:
    manifest = _load_manifest_diag(args.manifest)
    excluded = set(args.exclude_styles.split(",")) - {""} if args.exclude_styles else set()
    filtered, removed = corpus.filter_styles(manifest, excluded)
    for tag, count in removed.items():
        print(f"excluded style {tag!r}: removed {count}")

    if args.min_score is not None:
        if not args.scores:
            raise ValidationError("--min-score requires --scores CSV")
        table = _read_score_csv(args.scores)

        def lookup(entry: corpus.UtteranceEntry) -> float:
            if entry.id not in table:
                raise DataError(f"no score for utterance {entry.id}")
            return table[entry.id]

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            filtered, scored = corpus.filter_by_score(filtered, lookup, args.min_score)
        for w in caught:
            _diag("warning", message=str(w.message))
        if args.style_scores_out:
            corpus.write_style_scores(scored, args.style_scores_out)

    corpus.save_manifest(filtered, args.out)
    print(f"kept {len(filtered)} of {len(manifest)} utterances")
    _diag("manifest_written", path=args.out, kept=len(filtered),
          total=len(manifest))
    return 0


def _read_score_csv(path) -> Dict[str, float]:
    """Two-column CSV id,score with an optional header row."""
    table = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"cannot read scores file {path}: {exc}")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no}: expected id,score")
            if line_no == 1 and parts[1].strip() == "score":
                continue
            try:
                table[parts[0].strip()] = float(parts[1])
            except ValueError:
                raise DataError(f"{path}:{line_no}: bad score {parts[1]!r}")
    return table


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems through the validation path
    (exit code 1) instead of its default exit(2)."""

    def error(self, message):
        raise ValidationError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="global seed (falls back to DUSS_SEED, then 0)")
    parser.add_argument("--config", default=None,
                        help="key=value settings file")
    parser.add_argument("--preset", default=None,
                        help=f"named configuration: {', '.join(sorted(PRESETS))}")


def _add_overrides(parser: argparse.ArgumentParser, keys) -> None:
    for key in keys:
        kind = _CONFIG_SCHEMA[key]
        parser.add_argument("--" + key.replace("_", "-"), dest=key, type=kind,
                            default=None, help=f"override {key}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="duss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-codec", parents=[], help="fit the quantizer on a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output codec file")
    p.add_argument("--exclude-styles", default=None,
                   help="comma-separated style tags to drop")
    _add_common(p)
    _add_overrides(p, ["codebook_size", "num_quantizers", "hop", "sample_rate",
                       "frame_len", "n_mels", "window", "kmeans_iters",
                       "commitment_weight", "codebook_weight", "mel_loss_weight"])
    p.set_defaults(func=cmd_train_codec)

    p = sub.add_parser("encode", help="audio to token file")
    p.add_argument("codec")
    p.add_argument("audio")
    p.add_argument("--out", required=True)
    _add_common(p)
    _add_overrides(p, ["frame_len", "window"])
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="token file to WAV")
    p.add_argument("codec")
    p.add_argument("tokens")
    p.add_argument("--out", required=True)
    p.add_argument("--reference", default=None,
                   help="reference WAV; prints round-trip MCD when given")
    p.add_argument("--features-out", default=None,
                   help="also write the decoded feature matrix")
    _add_common(p)
    _add_overrides(p, ["frame_len", "window", "gl_iterations", "n_coeffs"])
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("train-lm", help="fit the token model on token files")
    p.add_argument("tokens", nargs="+")
    p.add_argument("--out", required=True)
    _add_common(p)
    _add_overrides(p, ["order", "alpha"])
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("generate", help="sample token sequences and decode them")
    p.add_argument("lm")
    p.add_argument("codec")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=1)
    _add_common(p)
    _add_overrides(p, ["k", "p", "temperature", "max_len", "frame_len", "window",
                       "gl_iterations"])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tune", help="random-search the sampling parameters")
    p.add_argument("lm")
    p.add_argument("codec")
    p.add_argument("--out", required=True, help="JSON-lines trial history")
    p.add_argument("--k-min", type=int, default=5)
    p.add_argument("--k-max", type=int, default=300)
    p.add_argument("--p-min", type=float, default=0.1)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--temp-min", type=float, default=0.1)
    p.add_argument("--temp-max", type=float, default=1.0)
    p.add_argument("--dev-count", type=int, default=4,
                   help="generations scored per trial")
    p.add_argument("--importance-bins", type=int, default=10)
    _add_common(p)
    _add_overrides(p, ["n_trials", "max_len"])
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="metric report for reference vs synthesized")
    p.add_argument("reference", help="reference manifest")
    p.add_argument("synthesized", help="synthesized manifest")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--codec", default=None,
                   help="codec file; reports its nominal bitrate")
    p.add_argument("--tokens", nargs="*", default=None,
                   help="token files; reports their measured bitrate")
    _add_common(p)
    _add_overrides(p, ["frame_len", "window", "n_coeffs", "n_mels"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("corpus-filter", help="style and score based selection")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--exclude-styles", default=None)
    p.add_argument("--min-score", type=float, default=None)
    p.add_argument("--scores", default=None, help="CSV of id,score")
    p.add_argument("--style-scores-out", default=None,
                   help="write kept (style_tag, score) rows as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_corpus_filter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        _diag("error", kind="validation", message=str(exc))
        return 1
    except DataError as exc:
        _diag("error", kind="data", message=str(exc))
        return 2
    except OSError as exc:
        _diag("error", kind="data", message=str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
