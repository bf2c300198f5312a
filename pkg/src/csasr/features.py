"""Acoustic front-end: speed perturbation, 80 log-mel + 3 pitch = 83-dim
frames, CMVN and SpecAugment.

Framing defaults to 25 ms windows every 10 ms with a Hamming window and a
512-point FFT at 16 kHz; the mel filterbank spans 20 Hz to Nyquist.
"""

from __future__ import annotations

import json
import struct
import wave
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage, signal

LOG_FLOOR = 1e-10
N_MELS = 80
PITCH_DIMS = 3
FEATURE_DIMS = N_MELS + PITCH_DIMS

FEATS_MAGIC = b"CSF1"
_FEATS_HEADER = struct.Struct("<4sIIff")


class FeatureError(ValueError):
    pass


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise FeatureError("audio must be mono (1-d samples)")
        if int(self.sample_rate) <= 0:
            raise FeatureError("sample rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise FeatureError("audio contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class FeatureMatrix:
    frames: np.ndarray
    frame_shift_ms: float = 10.0
    frame_length_ms: float = 25.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise FeatureError("feature matrix must be 2-d (frames x dims)")
        if not np.all(np.isfinite(self.frames)):
            raise FeatureError("feature matrix contains non-finite values")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dims(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames) -> "FeatureMatrix":
        return FeatureMatrix(frames, self.frame_shift_ms, self.frame_length_ms)


# ---------------------------------------------------------------- audio I/O

def read_wav(path) -> AudioBuffer:
    try:
        with wave.open(str(path), "rb") as w:
            channels, width = w.getnchannels(), w.getsampwidth()
            rate = w.getframerate()
            data = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as e:
        raise FeatureError(f"{path}: not a readable WAV file ({e})") from None
    if channels != 1:
        raise FeatureError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise FeatureError(f"{path}: expected 16-bit PCM")
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    pcm = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(audio.sample_rate))
        w.writeframes(pcm.tobytes())


# ------------------------------------------------------------- augmentation

def speed_perturb(audio: AudioBuffer, factor: float) -> AudioBuffer:
    """Play audio ``factor`` times faster by band-limited resampling.

    The sample rate is kept, so duration scales by ``1/factor`` and pitch
    shifts along with tempo.
    """
    if not factor > 0:
        raise FeatureError(f"speed factor must be positive, got {factor}")
    x = audio.samples
    if factor == 1.0:
        return AudioBuffer(x.copy(), audio.sample_rate)
    target = int(round(len(x) / factor))
    ratio = Fraction(factor).limit_denominator(1000)
    y = signal.resample_poly(x, ratio.denominator, ratio.numerator)
    if len(y) > target:
        y = y[:target]
    elif len(y) < target:
        y = np.pad(y, (0, target - len(y)))
    return AudioBuffer(np.clip(y, -1.0, 1.0), audio.sample_rate)


# ------------------------------------------------------------------ framing

def _frame_geometry(audio: AudioBuffer, frame_length_ms: float, frame_shift_ms: float):
    win = int(round(audio.sample_rate * frame_length_ms / 1000.0))
    hop = int(round(audio.sample_rate * frame_shift_ms / 1000.0))
    if win <= 0 or hop <= 0:
        raise FeatureError("frame length and shift must be positive")
    if len(audio) < win:
        raise FeatureError(
            f"audio has {len(audio)} samples, shorter than one {frame_length_ms} ms frame ({win})"
        )
    return win, hop, 1 + (len(audio) - win) // hop


def num_frames(n_samples: int, sample_rate: int = 16000,
               frame_length_ms: float = 25.0, frame_shift_ms: float = 10.0) -> int:
    win = int(round(sample_rate * frame_length_ms / 1000.0))
    hop = int(round(sample_rate * frame_shift_ms / 1000.0))
    return 0 if n_samples < win else 1 + (n_samples - win) // hop


def hz_to_mel(f):
    return 1127.0 * np.log1p(np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * np.expm1(np.asarray(m, dtype=np.float64) / 1127.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int,
                   low_hz: float = 20.0, high_hz: Optional[float] = None) -> np.ndarray:
    """Triangular filters, evenly spaced and linear on the mel scale.

    Returns an ``(n_mels, n_fft // 2 + 1)`` weight matrix.
    """
    high_hz = sample_rate / 2.0 if high_hz is None else high_hz
    edges = np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), n_mels + 2)
    bin_mel = hz_to_mel(np.arange(n_fft // 2 + 1) * sample_rate / n_fft)
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (bin_mel - left) / (center - left)
    down = (right - bin_mel) / (right - center)
    return np.maximum(0.0, np.minimum(up, down))


def mel_centers_hz(n_mels: int = N_MELS, sample_rate: int = 16000, low_hz: float = 20.0):
    edges = np.linspace(hz_to_mel(low_hz), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    return mel_to_hz(edges[1:-1])


def log_mel(audio: AudioBuffer, n_mels: int = N_MELS, frame_length_ms: float = 25.0,
            frame_shift_ms: float = 10.0, n_fft: int = 512) -> FeatureMatrix:
    win, hop, n = _frame_geometry(audio, frame_length_ms, frame_shift_ms)
    if n_fft < win:
        n_fft = 1 << (win - 1).bit_length()
    frames = sliding_window_view(audio.samples, win)[::hop][:n] * np.hamming(win)
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    fbank = mel_filterbank(n_mels, n_fft, audio.sample_rate)
    return FeatureMatrix(np.log(power @ fbank.T + LOG_FLOOR), frame_shift_ms, frame_length_ms)


# -------------------------------------------------------------------- pitch

def nccf(audio: AudioBuffer, min_f0: float = 50.0, max_f0: float = 400.0,
         frame_length_ms: float = 25.0, frame_shift_ms: float = 10.0):
    """Normalized cross-correlation per frame over candidate pitch lags.

    Returns ``(lags, values)`` with ``values`` shaped ``(frames, len(lags))``.
    The lagged window may run past the end of the signal, which is
    zero-padded.
    """
    win, hop, n = _frame_geometry(audio, frame_length_ms, frame_shift_ms)
    fs = audio.sample_rate
    min_lag = max(1, int(np.ceil(fs / max_f0)))
    max_lag = int(np.floor(fs / min_f0))
    lags = np.arange(min_lag, max_lag + 1)

    x = np.pad(audio.samples, (0, max_lag + win))
    span = sliding_window_view(x, win + max_lag)[::hop][:n]
    ref = span[:, :win]
    cand = sliding_window_view(span, win, axis=1)[:, min_lag : max_lag + 1]
    num = np.einsum("tlw,tw->tl", cand, ref)

    csum = np.concatenate([[0.0], np.cumsum(x * x)])
    starts = np.arange(n) * hop
    e_ref = csum[starts + win] - csum[starts]
    lo = starts[:, None] + lags[None, :]
    e_cand = csum[lo + win] - csum[lo]
    values = num / np.sqrt(e_ref[:, None] * e_cand + 1e-12)
    return lags, values


def _pick_lag(row: np.ndarray, rel_threshold: float = 0.9) -> tuple[float, float]:
    # smallest-lag local maximum close to the global peak; avoids octave errors
    peak = row.max()
    best = int(np.argmax(row))
    if peak > 0:
        for i in range(1, len(row) - 1):
            if row[i] >= rel_threshold * peak and row[i] >= row[i - 1] and row[i] >= row[i + 1]:
                best = i
                break
    offset = 0.0
    if 0 < best < len(row) - 1:
        a, b, c = row[best - 1], row[best], row[best + 1]
        denom = a - 2 * b + c
        if denom < 0:
            offset = float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
    return best + offset, float(peak)


def pitch_features(audio: AudioBuffer, frame_length_ms: float = 25.0,
                   frame_shift_ms: float = 10.0, min_f0: float = 50.0,
                   max_f0: float = 400.0, voicing_threshold: float = 0.5,
                   median_width: int = 5) -> FeatureMatrix:
    """Per-frame (POV proxy, log pitch, delta log pitch)."""
    lags, values = nccf(audio, min_f0, max_f0, frame_length_ms, frame_shift_ms)
    n = values.shape[0]
    f0 = np.empty(n)
    pov = np.empty(n)
    for t in range(n):
        idx, peak = _pick_lag(values[t])
        f0[t] = audio.sample_rate / (lags[0] + idx)
        pov[t] = peak
    pov = np.clip(pov, 0.0, 1.0)
    log_f0 = np.log(np.clip(f0, min_f0, max_f0))

    voiced = pov >= voicing_threshold
    if voiced.any() and not voiced.all():
        t = np.arange(n)
        log_f0 = np.interp(t, t[voiced], log_f0[voiced])
    if median_width > 1 and n > 1:
        log_f0 = ndimage.median_filter(log_f0, size=median_width, mode="nearest")
    delta = np.gradient(log_f0) if n > 1 else np.zeros(n)
    return FeatureMatrix(np.column_stack([pov, log_f0, delta]), frame_shift_ms, frame_length_ms)


def pitch_hz(pitch: FeatureMatrix) -> np.ndarray:
    return np.exp(pitch.frames[:, 1])


def stack_features(mel: FeatureMatrix, pitch: FeatureMatrix) -> FeatureMatrix:
    if mel.num_frames != pitch.num_frames:
        raise FeatureError(
            f"frame count mismatch: {mel.num_frames} mel frames vs {pitch.num_frames} pitch frames"
        )
    return mel.with_frames(np.hstack([mel.frames, pitch.frames]))


def compute_features(audio: AudioBuffer, n_mels: int = N_MELS) -> FeatureMatrix:
    return stack_features(log_mel(audio, n_mels), pitch_features(audio))


# --------------------------------------------------------------------- CMVN

@dataclass
class CmvnStats:
    mean: np.ndarray
    var: np.ndarray
    count: int = 0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise FeatureError("mean and variance must be 1-d vectors of equal length")
        if np.any(self.var < 0):
            raise FeatureError("variance must be non-negative")

    def to_json(self) -> dict:
        return {"count": self.count, "mean": self.mean.tolist(), "var": self.var.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "CmvnStats":
        try:
            return cls(obj["mean"], obj["var"], int(obj.get("count", 0)))
        except (KeyError, TypeError) as e:
            raise FeatureError(f"malformed CMVN stats: {e}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CmvnStats":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def compute_cmvn_stats(features: FeatureMatrix | Iterable[FeatureMatrix]) -> CmvnStats:
    """Per-dimension mean and (population) variance, over one matrix or a corpus."""
    mats = [features] if isinstance(features, FeatureMatrix) else list(features)
    if not mats:
        raise FeatureError("no feature matrices to accumulate")
    dims = {m.dims for m in mats}
    if len(dims) != 1:
        raise FeatureError(f"inconsistent feature dimensions {sorted(dims)}")
    count = sum(m.num_frames for m in mats)
    if count == 0:
        raise FeatureError("no frames to accumulate")
    mean = sum(m.frames.sum(axis=0) for m in mats) / count
    var = sum(((m.frames - mean) ** 2).sum(axis=0) for m in mats) / count
    return CmvnStats(mean, var, count)


def apply_cmvn(features: FeatureMatrix, stats: Optional[CmvnStats] = None,
               min_var: float = 1e-10) -> FeatureMatrix:
    if stats is None:
        if features.num_frames < 2:
            raise FeatureError("per-utterance CMVN needs at least 2 frames")
        stats = compute_cmvn_stats(features)
    if stats.mean.shape[0] != features.dims:
        raise FeatureError(f"CMVN stats have {stats.mean.shape[0]} dims, features {features.dims}")
    scale = np.where(stats.var < min_var, 1.0, 1.0 / np.sqrt(np.maximum(stats.var, min_var)))
    return features.with_frames((features.frames - stats.mean) * scale)


# -------------------------------------------------------------- SpecAugment

@dataclass(frozen=True)
class SpecAugmentConfig:
    num_freq_masks: int = 2
    max_freq_width: int = 27
    num_time_masks: int = 2
    max_time_width: int = 40
    seed: int = 0
    # False: every mask is exactly max_*_width wide
    random_width: bool = True

    def __post_init__(self):
        for name in ("num_freq_masks", "max_freq_width", "num_time_masks", "max_time_width"):
            if getattr(self, name) < 0:
                raise FeatureError(f"{name} must be non-negative")


@dataclass(frozen=True)
class MaskGeometry:
    freq: tuple[tuple[int, int], ...]  # (first column, width)
    time: tuple[tuple[int, int], ...]  # (first frame, width)

    def cell_mask(self, shape) -> np.ndarray:
        mask = np.zeros(shape, dtype=bool)
        for f0, w in self.freq:
            mask[:, f0 : f0 + w] = True
        for t0, w in self.time:
            mask[t0 : t0 + w, :] = True
        return mask


def sample_masks(shape, config: SpecAugmentConfig) -> MaskGeometry:
    n_frames, n_dims = shape
    if config.max_freq_width > n_dims:
        raise FeatureError(f"frequency mask width {config.max_freq_width} exceeds {n_dims} dims")
    if config.max_time_width > n_frames:
        raise FeatureError(f"time mask width {config.max_time_width} exceeds {n_frames} frames")
    rng = np.random.default_rng(config.seed)

    def draw(count, max_width, axis_len):
        out = []
        for _ in range(count):
            w = int(rng.integers(0, max_width + 1)) if config.random_width else max_width
            start = int(rng.integers(0, axis_len - w + 1))
            out.append((start, w))
        return tuple(out)

    freq = draw(config.num_freq_masks, config.max_freq_width, n_dims)
    time = draw(config.num_time_masks, config.max_time_width, n_frames)
    return MaskGeometry(freq, time)


def spec_augment(features: FeatureMatrix, config: SpecAugmentConfig) -> FeatureMatrix:
    """Mask frequency bands and time spans with the per-dimension input mean.

    No time warping. Unmasked cells are copied unchanged.
    """
    geometry = sample_masks(features.frames.shape, config)
    mask = geometry.cell_mask(features.frames.shape)
    out = features.frames.copy()
    if mask.any():
        fill = np.broadcast_to(features.frames.mean(axis=0), out.shape)
        out[mask] = fill[mask]
    return features.with_frames(out)


# ------------------------------------------------------------ feature files

def write_features(path, features: FeatureMatrix) -> None:
    """Header (magic, T, D, shift ms, length ms) then little-endian float32 rows."""
    t, d = features.frames.shape
    header = _FEATS_HEADER.pack(FEATS_MAGIC, t, d, features.frame_shift_ms, features.frame_length_ms)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(features.frames, dtype="<f4").tobytes())


def read_features(path) -> FeatureMatrix:
    data = Path(path).read_bytes()
    if len(data) < _FEATS_HEADER.size:
        raise FeatureError(f"{path}: truncated feature header")
    magic, t, d, shift, length = _FEATS_HEADER.unpack_from(data)
    if magic != FEATS_MAGIC:
        raise FeatureError(f"{path}: bad magic {magic!r}")
    body = data[_FEATS_HEADER.size :]
    if len(body) != t * d * 4:
        raise FeatureError(f"{path}: expected {t * d * 4} bytes of data, found {len(body)}")
    frames = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(t, d)
    return FeatureMatrix(frames, float(shift), float(length))
