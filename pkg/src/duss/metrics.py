"""Objective evaluation: bitrate (nominal and corpus-measured), mel-cepstral
distortion with DTW alignment, and log-F0 RMSE over voiced frames."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .codec import TokenSequence
from .dsp import F0Track, FeatureMatrix
from .errors import ValidationError

# 10/ln(10) * sqrt(2), the usual mel-cepstral distortion scale factor.
MCD_CONST = (10.0 / math.log(10.0)) * math.sqrt(2.0)

# Alignment cost for a voiced/unvoiced mismatch when warping F0 tracks.
VOICING_MISMATCH_COST = 1.0


def nominal_bitrate(vocab_size: int, num_quantizers: int, frame_rate) -> float:
    """Q * log2(V) * frame_rate in bits per second."""
    if vocab_size < 2:
        raise ValidationError(f"vocab_size must be >= 2, got {vocab_size}")
    if num_quantizers < 1:
        raise ValidationError(f"num_quantizers must be >= 1, got {num_quantizers}")
    rate = float(frame_rate)
    if rate <= 0:
        raise ValidationError(f"frame_rate must be > 0, got {frame_rate}")
    return num_quantizers * math.log2(vocab_size) * rate


def measured_bitrate(sequences: Sequence[TokenSequence], durations: Sequence[float],
                     per_utterance_codes: bool = False,
                     include_stop: bool = False) -> float:
    """Corpus-measured bitrate from the codes actually used.

    Total bits are sum over utterances of T * Q * log2(V_used) where V_used
    counts distinct token values (floored at 2 so a one-code corpus is not
    free); the total is divided by the summed durations. By default V_used
    is counted over the whole corpus and stop tokens are ignored; the flags
    select per-utterance counting and stop-inclusive accounting instead.
    """
    if len(sequences) == 0:
        raise ValidationError("measured_bitrate requires a non-empty corpus")
    if len(sequences) != len(durations):
        raise ValidationError(
            f"got {len(sequences)} sequences but {len(durations)} durations")
    durations = [float(d) for d in durations]
    if any(d <= 0 for d in durations):
        raise ValidationError("durations must be > 0")

    def distinct(seqs: Sequence[TokenSequence]) -> int:
        values = set()
        for s in seqs:
            values.update(np.unique(s.tokens).tolist())
            if include_stop and s.stop_token_id is not None:
                values.add(s.stop_token_id)
        return max(len(values), 2)

    total_bits = 0.0
    corpus_v = None if per_utterance_codes else distinct(sequences)
    for seq in sequences:
        v_used = distinct([seq]) if per_utterance_codes else corpus_v
        frames = seq.num_frames + (1 if include_stop else 0)
        total_bits += frames * seq.num_stages * math.log2(v_used)
    return total_bits / sum(durations)


# ---------------------------------------------------------------------------
# DTW alignment


@dataclass(frozen=True)
class AlignmentPath:
    """Monotone warping path as an (L, 2) array of (x, y) index pairs."""

    pairs: np.ndarray
    cost: float

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        object.__setattr__(self, "pairs", pairs)
        if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
            raise ValidationError(f"path must be a non-empty (L, 2) array, got {pairs.shape}")

    def __len__(self) -> int:
        return len(self.pairs)


def euclidean_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise euclidean distances between the rows of two matrices."""
    return cdist(np.atleast_2d(x), np.atleast_2d(y))


def _as_frames(x) -> np.ndarray:
    data = x.data if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    if data.ndim != 2:
        raise ValidationError(f"expected a 2-D frame matrix, got shape {data.shape}")
    return data


def dtw_align(x, y, distance: Callable[[np.ndarray, np.ndarray], np.ndarray]
              = euclidean_distance) -> AlignmentPath:
    """Minimal-cost monotone alignment with steps (1,0), (0,1), (1,1).

    `distance` maps two frame matrices to their pairwise cost matrix. The
    path runs from (0, 0) to (T_x-1, T_y-1); when step costs tie, the
    diagonal is preferred, then advancing x, then advancing y.
    """
    xa, ya = _as_frames(x), _as_frames(y)
    if len(xa) == 0 or len(ya) == 0:
        raise ValidationError("dtw_align requires non-empty inputs")
    if xa.shape[1] != ya.shape[1]:
        raise ValidationError(f"dimension mismatch: {xa.shape[1]} vs {ya.shape[1]}")
    local = np.asarray(distance(xa, ya), dtype=np.float64)
    if local.shape != (len(xa), len(ya)):
        raise ValidationError(
            f"distance returned shape {local.shape}, expected {(len(xa), len(ya))}")
    return _dtw_from_cost(local)


def _dtw_from_cost(local: np.ndarray) -> AlignmentPath:
    tx, ty = local.shape
    cum = np.empty_like(local)
    cum[0, 0] = local[0, 0]
    cum[0, 1:] = local[0, 1:].cumsum() + local[0, 0]
    cum[1:, 0] = local[1:, 0].cumsum() + local[0, 0]
    for i in range(1, tx):
        row = cum[i]
        prev = cum[i - 1]
        for j in range(1, ty):
            best = prev[j - 1]  # diagonal preferred on ties
            if prev[j] < best:
                best = prev[j]
            if row[j - 1] < best:
                best = row[j - 1]
            row[j] = local[i, j] + best

    pairs = [(tx - 1, ty - 1)]
    i, j = tx - 1, ty - 1
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = cum[i - 1, j - 1], cum[i - 1, j], cum[i, j - 1]
            if diag <= up and diag <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return AlignmentPath(pairs=np.array(pairs, dtype=np.int64), cost=float(cum[-1, -1]))


# ---------------------------------------------------------------------------
# Mel-cepstral distortion and F0 error


def mcd(ref, syn) -> float:
    """Mean mel-cepstral distortion in dB along the DTW path.

    The energy coefficient (index 0) is excluded both from alignment and
    from the reported distortion; per-pair distortion is
    MCD_CONST * sqrt(sum of squared coefficient differences).
    """
    ra, sa = _as_frames(ref), _as_frames(syn)
    if len(ra) == 0 or len(sa) == 0:
        raise ValidationError("mcd requires non-empty inputs")
    if ra.shape[1] != sa.shape[1]:
        raise ValidationError(f"dimension mismatch: {ra.shape[1]} vs {sa.shape[1]}")
    if ra.shape[1] < 2:
        raise ValidationError("mcd needs at least 2 cepstral coefficients")
    dist = MCD_CONST * cdist(ra[:, 1:], sa[:, 1:])
    path = _dtw_from_cost(dist)
    return float(np.mean(dist[path.pairs[:, 0], path.pairs[:, 1]]))


@dataclass(frozen=True)
class LogF0Result:
    """RMSE of natural-log F0 over aligned voiced-voiced frame pairs."""

    rmse: float
    no_overlap: bool
    num_pairs: int


def log_f0_rmse(ref: F0Track, syn: F0Track) -> LogF0Result:
    """Align two F0 tracks and report log-F0 RMSE over voiced-voiced pairs.

    Alignment cost is |ln f_ref - ln f_syn| when both frames are voiced,
    zero when both are unvoiced, and VOICING_MISMATCH_COST otherwise.
    With no aligned voiced-voiced pair, the RMSE is 0 and no_overlap is set.
    """
    if ref.frame_rate != syn.frame_rate:
        raise ValidationError(
            f"frame rate mismatch: {ref.frame_rate} vs {syn.frame_rate}")
    rv, sv = ref.voiced_mask, syn.voiced_mask
    log_r = np.where(rv, np.log(np.where(rv, ref.values, 1.0)), 0.0)
    log_s = np.where(sv, np.log(np.where(sv, syn.values, 1.0)), 0.0)
    both = np.outer(rv, sv)
    neither = np.outer(~rv, ~sv)
    cost = np.where(both, np.abs(log_r[:, None] - log_s[None, :]),
                    np.where(neither, 0.0, VOICING_MISMATCH_COST))
    path = _dtw_from_cost(cost)
    xi, yi = path.pairs[:, 0], path.pairs[:, 1]
    keep = rv[xi] & sv[yi]
    if not np.any(keep):
        return LogF0Result(rmse=0.0, no_overlap=True, num_pairs=0)
    diffs = log_r[xi[keep]] - log_s[yi[keep]]
    return LogF0Result(rmse=float(np.sqrt(np.mean(diffs * diffs))),
                       no_overlap=False, num_pairs=int(keep.sum()))


# ---------------------------------------------------------------------------
# Aggregated reporting


@dataclass(frozen=True)
class UtteranceMetrics:
    utterance_id: str
    mcd_db: float
    log_f0_rmse: float
    f0_no_overlap: bool = False


@dataclass(frozen=True)
class MetricReport:
    """Corpus-level metric summary plus the per-utterance breakdown."""

    bitrate_bps: float
    mcd_db: float
    log_f0_rmse: float
    per_utterance: Tuple[UtteranceMetrics, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "per_utterance", tuple(self.per_utterance))
        for name in ("bitrate_bps", "mcd_db", "log_f0_rmse"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")

    @property
    def num_utterances(self) -> int:
        return len(self.per_utterance)

    def to_json(self) -> str:
        payload = {
            "bitrate_bps": self.bitrate_bps,
            "mcd_db": self.mcd_db,
            "log_f0_rmse": self.log_f0_rmse,
            "num_utterances": self.num_utterances,
            "per_utterance": [
                {"id": u.utterance_id, "mcd_db": u.mcd_db,
                 "log_f0_rmse": u.log_f0_rmse, "f0_no_overlap": u.f0_no_overlap}
                for u in self.per_utterance
            ],
        }
        return json.dumps(payload, indent=2)

    def to_table(self) -> str:
        header = f"{'Bitrate (bps)':>14}  {'MCD (dB)':>10}  {'Log F0 RMSE':>12}"
        row = (f"{self.bitrate_bps:>14.2f}  {self.mcd_db:>10.4f}  "
               f"{self.log_f0_rmse:>12.4f}")
        return header + "\n" + row


def summarize(bitrate_bps: float, rows: Sequence[UtteranceMetrics]) -> MetricReport:
    """Mean the per-utterance metrics into a corpus-level report."""
    if not rows:
        raise ValidationError("summarize requires at least one utterance")
    return MetricReport(
        bitrate_bps=bitrate_bps,
        mcd_db=float(np.mean([r.mcd_db for r in rows])),
        log_f0_rmse=float(np.mean([r.log_f0_rmse for r in rows])),
        per_utterance=tuple(rows),
    )
