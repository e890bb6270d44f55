"""Signal-processing frontend: resampling, STFT, mel features, F0, and phase reconstruction.

All operations are pure functions over immutable inputs and are deterministic
for identical inputs and configuration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import signal as sps
from scipy.fft import dct as _scipy_dct
from scipy.io import wavfile

from .errors import DataError, ValidationError

# Floor applied before log compression of mel energies.
LOG_EPS = 1e-10

# Default analysis settings: 2048-sample Hann frames, hop 480 at 16 kHz
# (frame rate 100/3 Hz; the same hop at 24 kHz gives 50 Hz), 80 mel bands.
DEFAULT_SAMPLE_RATE = 16000
DEFAULT_FRAME_LEN = 2048
DEFAULT_HOP = 480
DEFAULT_N_MELS = 80

_WINDOW_NAMES = ("hann", "hamming", "rectangular")


class FeatureKind(enum.IntEnum):
    """What a FeatureMatrix holds; values double as container kind codes."""

    MEL_SPECTROGRAM = 1
    MEL_CEPSTRUM = 2
    DECODED = 3


@dataclass(frozen=True)
class Waveform:
    """Mono time-domain signal with an explicit sample rate.

    Samples are float64, nominally in [-1, 1]; finiteness is enforced.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 1:
            raise ValidationError(f"waveform must be mono 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FeatureMatrix:
    """T x D real feature frames at a rational frame rate."""

    data: np.ndarray
    frame_rate: Fraction
    kind: FeatureKind

    def __post_init__(self):
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if data.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("feature matrix contains non-finite entries")
        rate = Fraction(self.frame_rate)
        if rate <= 0:
            raise ValidationError(f"frame_rate must be positive, got {rate}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "frame_rate", rate)
        object.__setattr__(self, "kind", FeatureKind(self.kind))

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class F0Track:
    """Per-frame fundamental frequency in Hz; 0 marks unvoiced frames."""

    values: np.ndarray
    frame_rate: Fraction

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 1:
            raise ValidationError(f"F0 track must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("F0 values must be finite and non-negative")
        rate = Fraction(self.frame_rate)
        if rate <= 0:
            raise ValidationError(f"frame_rate must be positive, got {rate}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_rate", rate)

    @property
    def voiced_mask(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True)
class Stft:
    """Complex T x F short-time spectrum plus the parameters that made it."""

    data: np.ndarray
    sample_rate: int
    frame_len: int
    hop: int
    window: str

    @property
    def frame_rate(self) -> Fraction:
        return Fraction(self.sample_rate, self.hop)


@dataclass(frozen=True)
class AnalysisConfig:
    """Shared analysis settings for the mel frontend and its inversion."""

    sample_rate: int = DEFAULT_SAMPLE_RATE
    frame_len: int = DEFAULT_FRAME_LEN
    hop: int = DEFAULT_HOP
    window: str = "hann"
    n_mels: int = DEFAULT_N_MELS
    fmin: float = 0.0
    fmax: Optional[float] = None  # None means Nyquist

    def resolved_fmax(self) -> float:
        return self.sample_rate / 2 if self.fmax is None else self.fmax

    @property
    def frame_rate(self) -> Fraction:
        return Fraction(self.sample_rate, self.hop)


def _get_window(name: str, frame_len: int) -> np.ndarray:
    if name == "rectangular":
        return np.ones(frame_len)
    if name not in _WINDOW_NAMES:
        raise ValidationError(f"unknown window {name!r}, expected one of {_WINDOW_NAMES}")
    return sps.get_window(name, frame_len, fftbins=True)


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited polyphase resampling to target_rate.

    Duration is preserved to within one sample period; resampling to the
    current rate returns the samples unchanged.
    """
    if target_rate <= 0:
        raise ValidationError(f"target_rate must be positive, got {target_rate}")
    if not np.all(np.isfinite(w.samples)):
        raise ValidationError("cannot resample non-finite samples")
    if target_rate == w.sample_rate:
        return Waveform(w.samples, w.sample_rate)
    ratio = Fraction(int(target_rate), w.sample_rate)
    out = sps.resample_poly(w.samples, ratio.numerator, ratio.denominator)
    return Waveform(out, int(target_rate))


def _reflect_pad(x: np.ndarray, left: int, right: int) -> np.ndarray:
    if len(x) == 0:
        return np.zeros(left + right)
    return np.pad(x, (left, right), mode="reflect")


def _frame_count(num_samples: int, hop: int) -> int:
    return -(-num_samples // hop)  # ceil division


def _stft_array(x: np.ndarray, frame_len: int, hop: int, window: str) -> np.ndarray:
    """Centered STFT with reflect padding; T = ceil(len(x) / hop) frames."""
    win = _get_window(window, frame_len)
    num_frames = _frame_count(len(x), hop)
    if num_frames == 0:
        return np.zeros((0, frame_len // 2 + 1), dtype=np.complex128)
    left = frame_len // 2
    need = (num_frames - 1) * hop + frame_len
    right = max(0, need - left - len(x))
    padded = _reflect_pad(x, left, right)
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_len)[::hop][:num_frames]
    return np.fft.rfft(frames * win, axis=1)


def stft(w: Waveform, frame_len: int = DEFAULT_FRAME_LEN, hop: int = DEFAULT_HOP,
         window: str = "hann") -> Stft:
    """Short-time Fourier transform of a waveform.

    Frames are centered with reflect padding, so the output has
    T = ceil(len(samples) / hop) frames of F = frame_len // 2 + 1 bins.
    """
    if hop <= 0:
        raise ValidationError(f"hop must be positive, got {hop}")
    if frame_len <= 0 or hop > frame_len:
        raise ValidationError(f"need 0 < hop <= frame_len, got hop={hop}, frame_len={frame_len}")
    data = _stft_array(w.samples, frame_len, hop, window)
    return Stft(data=data, sample_rate=w.sample_rate, frame_len=frame_len, hop=hop, window=window)


def _istft_array(frames_spec: np.ndarray, frame_len: int, hop: int, window: str) -> np.ndarray:
    """Least-squares overlap-add inverse of `_stft_array` framing (padded domain)."""
    win = _get_window(window, frame_len)
    num_frames = frames_spec.shape[0]
    if num_frames == 0:
        return np.zeros(0)
    frames = np.fft.irfft(frames_spec, n=frame_len, axis=1)
    total = (num_frames - 1) * hop + frame_len
    out = np.zeros(total)
    norm = np.zeros(total)
    win_sq = win * win
    for t in range(num_frames):
        start = t * hop
        out[start:start + frame_len] += frames[t] * win
        norm[start:start + frame_len] += win_sq
    return out / np.maximum(norm, 1e-12)


def istft(data: np.ndarray, frame_len: int, hop: int, window: str = "hann",
          length: Optional[int] = None) -> np.ndarray:
    """Invert an STFT matrix back to samples.

    Undoes the center padding of `stft`; the default output length is
    T * hop, matching the analysis frame count.
    """
    if hop <= 0 or hop > frame_len:
        raise ValidationError(f"need 0 < hop <= frame_len, got hop={hop}, frame_len={frame_len}")
    num_frames = data.shape[0]
    if length is None:
        length = num_frames * hop
    if num_frames == 0:
        return np.zeros(length)
    full = _istft_array(data, frame_len, hop, window)
    left = frame_len // 2
    out = full[left:left + length]
    if len(out) < length:
        out = np.concatenate([out, np.zeros(length - len(out))])
    return out


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_breakpoints(n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    """The n_mels + 2 mel-spaced edge/center frequencies in Hz."""
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    return mel_to_hz(mel_pts)


def mel_center_frequencies(n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    """Center frequency of each triangular filter, in Hz."""
    return mel_breakpoints(n_mels, fmin, fmax)[1:-1]


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int, fmin: float,
                   fmax: float) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft // 2 + 1), peak 1.0.

    Adjacent filters overlap at 50%: each triangle spans from the previous
    center to the next center.
    """
    if n_mels < 1:
        raise ValidationError(f"n_mels must be >= 1, got {n_mels}")
    if not (0 <= fmin < fmax):
        raise ValidationError(f"need 0 <= fmin < fmax, got fmin={fmin}, fmax={fmax}")
    if fmax > sample_rate / 2:
        raise ValidationError(f"fmax {fmax} exceeds Nyquist {sample_rate / 2}")
    n_freqs = n_fft // 2 + 1
    freqs = np.linspace(0.0, sample_rate / 2, n_freqs)
    pts = mel_breakpoints(n_mels, fmin, fmax)
    fb = np.zeros((n_mels, n_freqs))
    for m in range(n_mels):
        lo, center, hi = pts[m], pts[m + 1], pts[m + 2]
        up = (freqs - lo) / max(center - lo, 1e-12)
        down = (hi - freqs) / max(hi - center, 1e-12)
        fb[m] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def mel_spectrogram(spec: Stft, n_mels: int = DEFAULT_N_MELS, fmin: float = 0.0,
                    fmax: Optional[float] = None) -> FeatureMatrix:
    """Log-compressed mel energies of an STFT, log(max(power, LOG_EPS))."""
    if fmax is None:
        fmax = spec.sample_rate / 2
    fb = mel_filterbank(spec.sample_rate, spec.frame_len, n_mels, fmin, fmax)
    power = np.abs(spec.data) ** 2
    mel_power = power @ fb.T
    data = np.log(np.maximum(mel_power, LOG_EPS))
    return FeatureMatrix(data=data, frame_rate=spec.frame_rate, kind=FeatureKind.MEL_SPECTROGRAM)


def analyze(w: Waveform, cfg: AnalysisConfig) -> FeatureMatrix:
    """Waveform to log-mel features with the given analysis settings."""
    if w.sample_rate != cfg.sample_rate:
        raise ValidationError(
            f"waveform rate {w.sample_rate} != analysis rate {cfg.sample_rate}; resample first")
    spec = stft(w, cfg.frame_len, cfg.hop, cfg.window)
    return mel_spectrogram(spec, cfg.n_mels, cfg.fmin, cfg.resolved_fmax())


def mel_cepstrum(mel: FeatureMatrix, n_coeffs: int) -> FeatureMatrix:
    """Orthonormal DCT-II of each log-mel frame, truncated to n_coeffs.

    Coefficient 0 carries the overall energy; the untruncated transform is
    exactly invertible.
    """
    if mel.kind not in (FeatureKind.MEL_SPECTROGRAM, FeatureKind.DECODED):
        raise ValidationError(f"mel_cepstrum expects log-mel input, got kind {mel.kind.name}")
    n_mels = mel.dim
    if not (1 <= n_coeffs <= n_mels):
        raise ValidationError(f"need 1 <= n_coeffs <= {n_mels}, got {n_coeffs}")
    coeffs = _scipy_dct(mel.data, type=2, norm="ortho", axis=1)[:, :n_coeffs]
    return FeatureMatrix(data=coeffs, frame_rate=mel.frame_rate, kind=FeatureKind.MEL_CEPSTRUM)


def estimate_f0(w: Waveform, f0_floor: float = 60.0, f0_ceil: float = 400.0,
                hop: int = DEFAULT_HOP, threshold: float = 0.1) -> F0Track:
    """YIN pitch tracking over centered frames.

    Uses the cumulative-mean-normalized difference function with an absolute
    threshold and parabolic interpolation of the selected lag. Frames where
    the normalized difference never drops below the threshold are unvoiced
    (value 0). Frame count matches ceil(len / hop).
    """
    sr = w.sample_rate
    if not (0 < f0_floor < f0_ceil < sr / 2):
        raise ValidationError(
            f"need 0 < f0_floor < f0_ceil < Nyquist, got floor={f0_floor}, ceil={f0_ceil}")
    if hop <= 0:
        raise ValidationError(f"hop must be positive, got {hop}")
    tau_max = int(np.ceil(sr / f0_floor))
    tau_min = max(2, int(np.floor(sr / f0_ceil)))
    num_frames = _frame_count(len(w.samples), hop)
    values = np.zeros(num_frames)
    if num_frames == 0:
        return F0Track(values=values, frame_rate=Fraction(sr, hop))

    window = tau_max  # integration window; frames span 2 * tau_max samples
    seg_len = 2 * tau_max
    need = (num_frames - 1) * hop + seg_len
    padded = _reflect_pad(w.samples, tau_max, max(0, need - tau_max - len(w.samples)))

    taus = np.arange(1, tau_max + 1)
    for t in range(num_frames):
        seg = padded[t * hop: t * hop + seg_len]
        head = seg[:window]
        energy = np.cumsum(seg * seg)
        e_head = energy[window - 1]
        e_lag = energy[taus + window - 1] - energy[taus - 1]
        corr = np.correlate(seg, head, mode="valid")[1:]
        diff = np.maximum(e_head + e_lag - 2.0 * corr, 0.0)
        denom = np.cumsum(diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            cmndf = np.where(denom > 0, diff * taus / denom, 1.0)
        values[t] = _pick_f0(cmndf, tau_min, tau_max, threshold, sr, f0_floor, f0_ceil)
    return F0Track(values=values, frame_rate=Fraction(sr, hop))


def _pick_f0(cmndf: np.ndarray, tau_min: int, tau_max: int, threshold: float,
             sr: int, f0_floor: float, f0_ceil: float) -> float:
    """Absolute-threshold lag pick plus parabolic refinement; 0 if unvoiced."""
    below = np.nonzero(cmndf[tau_min - 1: tau_max] < threshold)[0]
    if len(below) == 0:
        return 0.0
    tau = tau_min + below[0]
    while tau < tau_max and cmndf[tau] < cmndf[tau - 1]:
        tau += 1
    # cmndf index i corresponds to lag i + 1
    idx = tau - 1
    refined = float(tau)
    if 0 < idx < len(cmndf) - 1:
        a, b, c = cmndf[idx - 1], cmndf[idx], cmndf[idx + 1]
        denom = a - 2.0 * b + c
        if denom > 0:
            shift = 0.5 * (a - c) / denom
            refined = tau + float(np.clip(shift, -1.0, 1.0))
    f0 = sr / refined
    if not (f0_floor <= f0 <= f0_ceil):
        return 0.0
    return f0


def mel_to_linear(mel_power: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Least-squares inversion of the mel filterbank, clipped at zero.

    mel_power is (T, n_mels); returns (T, F) linear power estimates.
    """
    pinv = np.linalg.pinv(fb)
    return np.clip(mel_power @ pinv.T, 0.0, None)


def spectral_convergence(est_mag: np.ndarray, target_mag: np.ndarray) -> float:
    """Relative Frobenius distance between magnitude spectrograms."""
    denom = np.linalg.norm(target_mag)
    if denom == 0:
        return float(np.linalg.norm(est_mag))
    return float(np.linalg.norm(est_mag - target_mag) / denom)


def griffin_lim(mel: FeatureMatrix, cfg: AnalysisConfig, iterations: int = 60,
                return_errors: bool = False):
    """Reconstruct a waveform from log-mel features by iterative phase estimation.

    The mel filterbank is pseudo-inverted to linear magnitudes, then the
    classic alternating projection runs with zero initial phase. The
    analysis/synthesis pair used inside the loop is adjoint-consistent, so
    the spectral-convergence error is non-increasing across iterations.
    Output length is T * hop.

    With return_errors=True, returns (waveform, errors) where errors[i] is
    the spectral convergence after iteration i.
    """
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    if mel.kind not in (FeatureKind.MEL_SPECTROGRAM, FeatureKind.DECODED):
        raise ValidationError(f"griffin_lim expects log-mel input, got kind {mel.kind.name}")
    n_mels = mel.dim
    fb = mel_filterbank(cfg.sample_rate, cfg.frame_len, n_mels, cfg.fmin, cfg.resolved_fmax())
    target_mag = np.sqrt(mel_to_linear(np.exp(mel.data), fb))

    num_frames = mel.num_frames
    length = num_frames * cfg.hop
    errors = []
    if num_frames == 0:
        wav = Waveform(np.zeros(0), cfg.sample_rate)
        return (wav, np.array(errors)) if return_errors else wav

    win = _get_window(cfg.window, cfg.frame_len)
    spec = target_mag.astype(np.complex128)  # zero initial phase
    for _ in range(iterations):
        y = _istft_array(spec, cfg.frame_len, cfg.hop, cfg.window)
        frames = np.lib.stride_tricks.sliding_window_view(y, cfg.frame_len)[::cfg.hop]
        frames = frames[:num_frames]
        reanalyzed = np.fft.rfft(frames * win, axis=1)
        errors.append(spectral_convergence(np.abs(reanalyzed), target_mag))
        phase = np.exp(1j * np.angle(reanalyzed))
        spec = target_mag * phase
    y = _istft_array(spec, cfg.frame_len, cfg.hop, cfg.window)
    left = cfg.frame_len // 2
    out = y[left:left + length]
    if len(out) < length:
        out = np.concatenate([out, np.zeros(length - len(out))])
    wav = Waveform(out, cfg.sample_rate)
    return (wav, np.array(errors)) if return_errors else wav


def read_wav(path) -> Waveform:
    """Read a mono PCM16 or IEEE float32 WAV file."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise DataError(f"audio file not found: {path}")
    except ValueError as exc:
        raise DataError(f"unreadable WAV file {path}: {exc}")
    if data.ndim != 1:
        raise DataError(f"{path}: only mono audio is supported, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise DataError(f"{path}: unsupported WAV sample format {data.dtype}")
    return Waveform(samples, int(rate))


def write_wav(path, w: Waveform, encoding: str = "float32") -> None:
    """Write a mono WAV file as IEEE float32 (default) or PCM16."""
    if encoding == "float32":
        wavfile.write(path, w.sample_rate, w.samples.astype(np.float32))
    elif encoding == "pcm16":
        clipped = np.clip(w.samples, -1.0, 1.0)
        wavfile.write(path, w.sample_rate, np.round(clipped * 32767.0).astype(np.int16))
    else:
        raise ValidationError(f"unknown encoding {encoding!r}, expected 'float32' or 'pcm16'")
