"""Friction-sound pre-processing: filtering, enhancement, segmentation, augmentation.

Every function here is pure: it takes an :class:`AudioClip` (or a
:class:`FrictionSegment`) and returns a new object without touching its input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import signal

from .errors import ParameterError

ACCEPTED_RATES = (8000, 16000, 24000, 32000, 44100, 48000)


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ParameterError("AudioClip expects mono samples")
        if samples.size == 0:
            raise ParameterError("AudioClip must not be empty")
        if int(self.sample_rate_hz) not in ACCEPTED_RATES:
            raise ParameterError(
                f"unsupported sample rate {self.sample_rate_hz} Hz; accepted: {ACCEPTED_RATES}"
            )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class Spectrogram:
    frames: np.ndarray  # (n_frames, N/2 + 1), linear power
    window_len_samples: int
    hop_samples: int
    freq_bin_hz: float

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class SegmenterConfig:
    t_dif: float = 6.0
    t_var: float = 9.0
    t_dur_s: float = 0.15
    band_low_hz: float = 0.0
    band_high_hz: float = 22050.0
    window_len: int = 1024
    hop: int = 512
    n_subbands: int = 8
    silence_db: float = -60.0

    def validate(self, sample_rate_hz: int) -> None:
        if self.t_dur_s <= 0:
            raise ParameterError("t_dur_s must be positive")
        if not (0 <= self.band_low_hz < self.band_high_hz <= sample_rate_hz / 2):
            raise ParameterError(
                f"analysis band [{self.band_low_hz}, {self.band_high_hz}] Hz invalid "
                f"for {sample_rate_hz} Hz audio"
            )
        if self.hop <= 0 or self.hop > self.window_len:
            raise ParameterError("hop must lie in (0, window_len]")
        if self.n_subbands < 2:
            raise ParameterError("need at least two sub-bands for the variance gate")


@dataclass(frozen=True)
class FrictionSegment:
    start_sample: int
    end_sample: int
    waveform: AudioClip
    source: str = ""

    @property
    def duration_s(self) -> float:
        return self.waveform.duration_s

    @classmethod
    def from_clip(cls, clip: AudioClip, source: str = "") -> "FrictionSegment":
        return cls(0, len(clip), clip, source)


def _clip_like(clip: AudioClip, samples: np.ndarray) -> AudioClip:
    return AudioClip(samples, clip.sample_rate_hz)


# ---------------------------------------------------------------------------
# filtering


def design_highpass(cutoff_hz: float, sample_rate_hz: int, taps: int = 255) -> np.ndarray:
    """Windowed-sinc (Hamming) high-pass whose passband edge sits at ``cutoff_hz``.

    The -6 dB point of the sinc is placed half a Hamming transition band below
    the requested edge so that everything above ``cutoff_hz`` passes nearly flat.
    """
    nyq = sample_rate_hz / 2.0
    if not (0 < cutoff_hz < nyq):
        raise ParameterError(f"cutoff {cutoff_hz} Hz outside (0, {nyq}) Hz")
    if taps <= 0 or taps % 2 == 0:
        raise ParameterError("taps must be a positive odd integer")
    half_transition = 0.5 * 3.3 * sample_rate_hz / taps
    design_cut = max(cutoff_hz - half_transition, 0.75 * cutoff_hz)
    return signal.firwin(taps, design_cut, window="hamming", pass_zero=False, fs=sample_rate_hz)


def highpass_filter(clip: AudioClip, cutoff_hz: float = 4000.0, taps: int = 255) -> AudioClip:
    h = design_highpass(cutoff_hz, clip.sample_rate_hz, taps)
    # 'same' on an odd symmetric kernel removes the (taps-1)/2 group delay
    return _clip_like(clip, np.convolve(clip.samples, h, mode="same"))


# ---------------------------------------------------------------------------
# short-time analysis


def _analysis_window(frame_len: int) -> np.ndarray:
    # strictly positive so weighted overlap-add never divides by zero, even at hop == frame_len
    return signal.windows.hann(frame_len + 2, sym=True)[1:-1]


def _stft_frames(x: np.ndarray, frame_len: int, hop: int, window: np.ndarray) -> np.ndarray:
    n_frames = 1 + (x.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return np.fft.rfft(x[idx] * window, axis=1)


def _overlap_add(spec: np.ndarray, frame_len: int, hop: int, window: np.ndarray, length: int):
    frames = np.fft.irfft(spec, n=frame_len, axis=1)
    out = np.zeros(length)
    norm = np.zeros(length)
    for i, frame in enumerate(frames):
        s = i * hop
        out[s:s + frame_len] += frame * window
        norm[s:s + frame_len] += window ** 2
    nz = norm > 1e-12
    out[nz] /= norm[nz]
    return out


def decision_directed_gain(power: np.ndarray, noise_psd: np.ndarray,
                           alpha: float = 0.98, xi_min: float = 10 ** (-25 / 10)) -> np.ndarray:
    """Frame-recursive gain sqrt(xi / (1 + xi)) with a decision-directed a-priori SNR."""
    lam = np.maximum(noise_psd, 1e-20)
    gains = np.empty_like(power)
    prev_clean = np.zeros(power.shape[1])
    for t, p in enumerate(power):
        gamma = p / lam
        xi = alpha * prev_clean / lam + (1 - alpha) * np.maximum(gamma - 1.0, 0.0)
        xi = np.maximum(xi, xi_min)
        g = np.sqrt(xi / (1.0 + xi))
        gains[t] = g
        prev_clean = (g ** 2) * p
    return gains


def compensate_noise(clip: AudioClip, frame_len: int = 1024, hop: int = 256,
                     gain: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
                     noise_quantile: float = 0.2) -> AudioClip:
    """Short-time amplitude-spectrum noise compensation keeping the noisy phase.

    The noise PSD is the mean power of the quietest ``noise_quantile`` share of
    frames (the silent regions). ``gain(power, noise_psd)`` may replace the
    default decision-directed rule; it must return an array shaped like ``power``.
    """
    if hop <= 0 or frame_len < hop:
        raise ParameterError("need frame_len >= hop > 0")
    x = clip.samples
    if frame_len > x.size:
        raise ParameterError(f"frame of {frame_len} samples longer than clip ({x.size})")
    window = _analysis_window(frame_len)
    pad = frame_len
    n_total = x.size + 2 * pad
    n_total += (-(n_total - frame_len)) % hop
    padded = np.zeros(n_total)
    padded[pad:pad + x.size] = x
    spec = _stft_frames(padded, frame_len, hop, window)
    power = np.abs(spec) ** 2
    if not np.any(power > 0):
        return _clip_like(clip, np.zeros_like(x))

    # frames that carry any clip samples
    starts = hop * np.arange(spec.shape[0])
    inside = (starts + frame_len > pad) & (starts < pad + x.size)
    energy = power.sum(axis=1)
    candidates = np.flatnonzero(inside)
    n_noise = max(1, int(round(noise_quantile * candidates.size)))
    quiet = candidates[np.argsort(energy[candidates], kind="stable")[:n_noise]]
    noise_psd = power[quiet].mean(axis=0)

    g = decision_directed_gain(power, noise_psd) if gain is None else np.asarray(gain(power, noise_psd))
    enhanced = np.abs(spec) * g * np.exp(1j * np.angle(spec))
    y = _overlap_add(enhanced, frame_len, hop, window, n_total)
    return _clip_like(clip, y[pad:pad + x.size])


def spectrogram(clip: AudioClip, window_len: int = 1024, hop: int = 512) -> Spectrogram:
    n = int(window_len)
    if n < 64 or n & (n - 1):
        raise ParameterError("window length must be a power of two >= 64")
    if hop <= 0 or hop > n:
        raise ParameterError("hop must lie in (0, window_len]")
    if len(clip) < n:
        raise ParameterError(f"clip shorter ({len(clip)}) than the analysis window ({n})")
    w = signal.windows.hann(n, sym=False)
    frames = np.abs(_stft_frames(clip.samples, n, hop, w)) ** 2
    return Spectrogram(frames, n, hop, clip.sample_rate_hz / n)


# ---------------------------------------------------------------------------
# segmentation


def subband_edges(low_hz: float, high_hz: float, n_bands: int) -> np.ndarray:
    """Octave-spaced edges counted down from ``high_hz``; the lowest band starts at ``low_hz``."""
    edges = high_hz / 2.0 ** np.arange(n_bands, -1, -1)
    edges[0] = low_hz
    if np.any(np.diff(edges) <= 0):
        raise ParameterError("analysis band too narrow for the requested sub-bands")
    return edges


@dataclass
class SegmentationTrace:
    """Per-window quantities used by the three detection steps (for plots and debugging)."""

    level_db: np.ndarray
    flux_db: np.ndarray
    variance_db2: np.ndarray
    silent: np.ndarray
    broadband: np.ndarray
    hop: int
    window_len: int
    events: List[tuple] = field(default_factory=list)


def _band_levels(spec: Spectrogram, clip: AudioClip, cfg: SegmenterConfig):
    freqs = np.arange(spec.frames.shape[1]) * spec.freq_bin_hz
    edges = subband_edges(cfg.band_low_hz, cfg.band_high_hz, cfg.n_subbands)
    w = signal.windows.hann(spec.window_len_samples, sym=False)
    scale = np.sum(w ** 2)
    power = spec.frames / scale  # per-bin PSD in units of mean-square amplitude
    bands = np.empty((spec.n_frames, cfg.n_subbands))
    for b in range(cfg.n_subbands):
        lo, hi = edges[b], edges[b + 1]
        sel = (freqs >= lo) & ((freqs < hi) if b < cfg.n_subbands - 1 else (freqs <= hi))
        if not np.any(sel):
            sel = np.zeros_like(sel)
            sel[np.argmin(np.abs(freqs - 0.5 * (lo + hi)))] = True
        bands[:, b] = power[:, sel].mean(axis=1)
    in_band = (freqs >= cfg.band_low_hz) & (freqs <= cfg.band_high_hz)
    level = power[:, in_band].mean(axis=1)
    return bands, level


def _smooth3(a: np.ndarray) -> np.ndarray:
    padded = np.concatenate([a[:1], a, a[-1:]], axis=0)
    return (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0


def analyse_activity(clip: AudioClip, cfg: SegmenterConfig = SegmenterConfig()) -> SegmentationTrace:
    cfg.validate(clip.sample_rate_hz)
    spec = spectrogram(clip, cfg.window_len, cfg.hop)
    bands, level = _band_levels(spec, clip, cfg)
    floor = 1e-10
    band_db = 10 * np.log10(bands + floor)
    level_db = 10 * np.log10(level + floor)
    flux = np.zeros(spec.n_frames)
    flux[1:] = np.mean(np.abs(np.diff(band_db, axis=0)), axis=1)
    smooth_db = 10 * np.log10(_smooth3(bands) + floor)
    variance = np.var(smooth_db, axis=1)
    silent = level_db < cfg.silence_db
    broadband = (~silent) & (variance < cfg.t_var)
    # bridge single-window dropouts inside an otherwise broadband run
    gap = np.zeros_like(broadband)
    gap[1:-1] = broadband[:-2] & broadband[2:] & ~silent[1:-1]
    broadband |= gap
    return SegmentationTrace(level_db, flux, variance, silent, broadband, cfg.hop, cfg.window_len)


def segment_friction(clip: AudioClip, cfg: SegmenterConfig = SegmenterConfig(),
                     source: str = "", trace: Optional[SegmentationTrace] = None) -> List[FrictionSegment]:
    """Locate friction events with the silence / full-band / duration checks.

    A run of non-silent windows whose sub-band levels have variance below
    ``t_var`` is a candidate; it is kept when the spectral jump into and out of
    it exceeds ``t_dif`` (clip edges count as boundaries) and it outlasts
    ``t_dur_s``. Each window owns the ``hop`` samples centred on it.
    """
    cfg.validate(clip.sample_rate_hz)
    if clip.duration_s < cfg.t_dur_s:
        raise ParameterError("clip shorter than the minimum event duration")
    if len(clip) < cfg.window_len:
        return []
    tr = analyse_activity(clip, cfg) if trace is None else trace
    n = tr.level_db.size
    segments: List[FrictionSegment] = []
    half = cfg.window_len // 2
    slack = -(-cfg.window_len // cfg.hop)
    i = 0
    while i < n:
        if not tr.broadband[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and tr.broadband[j + 1]:
            j += 1
        # a transition smears over the windows that straddle it
        onset_ok = i == 0 or tr.flux_db[max(1, i - slack):i + 1].max() > cfg.t_dif
        offset_ok = j == n - 1 or tr.flux_db[j + 1:j + 2 + slack].max() > cfg.t_dif
        start = max(0, i * cfg.hop + half - cfg.hop // 2)
        end = min(len(clip), j * cfg.hop + half + (cfg.hop - cfg.hop // 2))
        if onset_ok and offset_ok and (end - start) / clip.sample_rate_hz > cfg.t_dur_s:
            segments.append(FrictionSegment(start, end, _clip_like(clip, clip.samples[start:end]), source))
            tr.events.append((i, j))
        i = j + 1
    return segments


# ---------------------------------------------------------------------------
# augmentation


def wsola(x: np.ndarray, rate: float, frame_len: int, tolerance: int) -> np.ndarray:
    """Waveform-similarity overlap-add; output has ``round(len(x) / rate)`` samples."""
    hop_s = frame_len // 2
    hop_a = hop_s * rate
    n_out = int(round(x.size / rate))
    window = signal.windows.hann(frame_len, sym=False)
    pad = frame_len + tolerance
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad + frame_len + int(np.ceil(hop_a)) + tolerance)])
    n_frames = int(np.ceil(n_out / hop_s)) + 2
    y = np.zeros(n_frames * hop_s + frame_len)
    norm = np.zeros_like(y)
    # the output is aligned so that output sample 0 corresponds to input sample 0
    delta = 0
    for k in range(n_frames):
        a = pad - frame_len // 2 + int(round(k * hop_a)) + delta
        frame = xp[a:a + frame_len]
        s = k * hop_s
        y[s:s + frame_len] += frame * window
        norm[s:s + frame_len] += window
        natural = xp[a + hop_s:a + hop_s + frame_len]
        nominal = pad - frame_len // 2 + int(round((k + 1) * hop_a))
        lo = max(nominal - tolerance, 0)
        region = xp[lo:nominal + tolerance + frame_len]
        if np.any(natural) and region.size >= frame_len:
            corr = np.correlate(region, natural, mode="valid")
            delta = lo + int(np.argmax(corr)) - nominal
        else:
            delta = 0
    nz = norm > 1e-8
    y[nz] /= norm[nz]
    off = frame_len // 2
    return y[off:off + n_out]


def _segment_like(seg: FrictionSegment, samples: np.ndarray) -> FrictionSegment:
    clip = _clip_like(seg.waveform, samples)
    return FrictionSegment(seg.start_sample, seg.start_sample + samples.size, clip, seg.source)


def time_stretch(seg: FrictionSegment, rate: float, frame_ms: float = 30.0,
                 tolerance_ms: float = 10.0) -> FrictionSegment:
    if not (0.5 <= rate <= 2.0):
        raise ParameterError(f"stretch rate {rate} outside [0.5, 2.0]")
    sr = seg.waveform.sample_rate_hz
    frame_len = int(round(frame_ms * 1e-3 * sr))
    frame_len += frame_len % 2
    tol = int(round(tolerance_ms * 1e-3 * sr))
    return _segment_like(seg, wsola(seg.waveform.samples, rate, frame_len, tol))


def pitch_shift(seg: FrictionSegment, semitones: int) -> FrictionSegment:
    if int(semitones) != semitones or abs(semitones) > 12:
        raise ParameterError("semitones must be an integer in [-12, 12]")
    if semitones == 0:
        return _segment_like(seg, seg.waveform.samples.copy())
    factor = 2.0 ** (semitones / 12.0)
    n = len(seg.waveform)
    # stretch rate 1/factor lengthens by factor; resampling back scales pitch by factor
    stretched = wsola(seg.waveform.samples, 1.0 / factor, *_wsola_params(seg.waveform.sample_rate_hz))
    shifted = signal.resample(stretched, n)
    return _segment_like(seg, shifted)


def _wsola_params(sr: int):
    frame_len = int(round(0.030 * sr))
    frame_len += frame_len % 2
    return frame_len, int(round(0.010 * sr))


AUGMENTATIONS = (("original", None), ("stretch", 0.8), ("stretch", 1.2), ("shift", 2), ("shift", -2))


def augment_corpus(segments: Sequence[FrictionSegment]) -> List[FrictionSegment]:
    """Expand each segment to {original, x0.8, x1.2, +2 st, -2 st}, in that order."""
    out: List[FrictionSegment] = []
    for seg in segments:
        for kind, arg in AUGMENTATIONS:
            if kind == "original":
                out.append(seg)
            elif kind == "stretch":
                out.append(time_stretch(seg, arg))
            else:
                out.append(pitch_shift(seg, arg))
    return out
