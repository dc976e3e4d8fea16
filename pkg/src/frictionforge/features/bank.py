"""The 99-dimension interpretable feature bank.

Layout (1-based names f1..f99):

    f1-f12   line spectral frequencies of an order-12 LPC fit (radians)
    f13-f24  chroma (C .. B), per-frame max-normalised
    f25      spectral kurtosis (excess, 0 for stationary Gaussian noise)
    f26      spectral skewness of the magnitude-weighted frequency distribution
    f27-f33  spectral contrast in 7 octave bands (dB)
    f34      spectral centroid (Hz)
    f35-f73  MFCC: 13 statics, 13 deltas, 13 delta-deltas
    f74-f86  LPCC c1..c13 from an order-13 LPC fit
    f87-f99  RASTA-PLP cepstra c1..c13 (order-12 all-pole model)

Frame-level values are averaged over 25 ms Hann frames with a 10 ms hop.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import signal

from ..audio_prep import FrictionSegment
from ..errors import ParameterError
from ..labels import PatternLabel
from . import dsp

N_FEATURES = 99
BLOCKS = {
    "lsf": slice(0, 12),
    "chroma": slice(12, 24),
    "kurtosis": slice(24, 25),
    "skewness": slice(25, 26),
    "contrast": slice(26, 33),
    "centroid": slice(33, 34),
    "mfcc": slice(34, 73),
    "lpcc": slice(73, 86),
    "rasta_plp": slice(86, 99),
}
FEATURE_NAMES = tuple(f"f{i}" for i in range(1, N_FEATURES + 1))

FRAME_S = 0.025
HOP_S = 0.010
MIN_DURATION_S = 0.1
N_MELS = 40
EPS = 1e-10


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: Optional[PatternLabel] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size != N_FEATURES:
            raise ParameterError(f"feature vector must have {N_FEATURES} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("feature vector contains non-finite values")
        object.__setattr__(self, "values", v)
        if self.label is not None:
            object.__setattr__(self, "label", PatternLabel.parse(self.label))

    def block(self, name: str) -> np.ndarray:
        return self.values[BLOCKS[name]]


@lru_cache(maxsize=16)
def _frame_setup(sr: int):
    frame_len = int(round(FRAME_S * sr))
    hop = int(round(HOP_S * sr))
    n_fft = 1 << int(np.ceil(np.log2(frame_len)))
    window = signal.windows.hann(frame_len, sym=False)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    return frame_len, hop, n_fft, window, freqs


@lru_cache(maxsize=16)
def _chroma_weights(n_fft: int, sr: int) -> np.ndarray:
    """(n_bins, 12) weights: each bin's share of every pitch class, measured in log frequency.

    Bin k covers [f - df/2, f + df/2]; its weight for class c is (1/df) times the
    integral of 1/f over the part of that interval falling in class c. A flat
    spectrum therefore maps to equal chroma energy.
    """
    df = sr / n_fft
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    c1 = 440.0 * 2.0 ** (-57 / 12)  # C1, ~32.7 Hz
    n_oct = int(np.floor(np.log2((sr / 2) / c1)))
    semis = c1 * 2.0 ** (np.arange(12 * n_oct + 1) / 12.0)
    w = np.zeros((freqs.size, 12))
    for k, f in enumerate(freqs):
        lo, hi = max(f - df / 2, semis[0]), min(f + df / 2, semis[-1])
        if hi <= lo:
            continue
        for s in range(12 * n_oct):
            a, b = max(lo, semis[s]), min(hi, semis[s + 1])
            if b > a:
                w[k, s % 12] += np.log(b / a) / df
    return w


@lru_cache(maxsize=16)
def _mel_fb(n_fft: int, sr: int) -> np.ndarray:
    return dsp.mel_filterbank(N_MELS, n_fft, sr)


@lru_cache(maxsize=16)
def _plp_setup(n_fft: int, sr: int):
    n_bands = int(np.ceil(dsp.hz_to_bark(sr / 2.0))) + 1
    fb, centers = dsp.bark_filterbank(n_bands, n_fft, sr)
    eql = dsp.equal_loudness(600.0 * np.sinh(centers / 6.0))
    return fb, eql


def _contrast(power: np.ndarray, freqs: np.ndarray, nyq: float, quantile: float = 0.02) -> np.ndarray:
    edges = np.concatenate([[0.0], nyq / 2.0 ** np.arange(6, -1, -1)])
    out = np.zeros((power.shape[0], 7))
    for b in range(7):
        sel = (freqs >= edges[b]) & (freqs <= edges[b + 1] if b == 6 else freqs < edges[b + 1])
        band = np.sort(power[:, sel], axis=1)
        nq = max(1, int(round(quantile * band.shape[1])))
        valley = band[:, :nq].mean(axis=1)
        peak = band[:, -nq:].mean(axis=1)
        out[:, b] = 10 * np.log10(peak + EPS) - 10 * np.log10(valley + EPS)
    return out


def _spectral_kurtosis(power: np.ndarray) -> float:
    """Excess kurtosis of the complex STFT per bin (over time), averaged over bins."""
    inner = power[:, 1:-1]
    m2 = inner.mean(axis=0)
    m4 = (inner ** 2).mean(axis=0)
    ok = m2 > EPS
    if not np.any(ok):
        return 0.0
    return float(np.mean(m4[ok] / m2[ok] ** 2 - 2.0))


def _shape_moments(mag: np.ndarray, freqs: np.ndarray):
    total = mag.sum(axis=1)
    live = total > EPS
    centroid = np.zeros(mag.shape[0])
    skew = np.zeros(mag.shape[0])
    if np.any(live):
        p = mag[live] / total[live, None]
        mu = p @ freqs
        d = freqs[None, :] - mu[:, None]
        var = np.sum(p * d ** 2, axis=1)
        sd = np.sqrt(np.maximum(var, EPS))
        centroid[live] = mu
        skew[live] = np.sum(p * d ** 3, axis=1) / sd ** 3
    return centroid, skew, live


def _plp_cepstra(power: np.ndarray, n_fft: int, sr: int, order: int = 12, n_ceps: int = 13) -> np.ndarray:
    fb, eql = _plp_setup(n_fft, sr)
    bands = power @ fb.T
    log_bands = np.log(bands + EPS)
    aud = np.exp(dsp.rasta_filter(log_bands))
    aud = (aud * eql[None, :]) ** 0.33
    aud[:, 0] = aud[:, 1]
    aud[:, -1] = aud[:, -2]
    out = np.zeros((power.shape[0], n_ceps))
    for t, a_spec in enumerate(aud):
        r = np.fft.irfft(a_spec)[: order + 1]
        a, _ = dsp.lpc(r, order)
        out[t] = dsp.lpc_to_cepstrum(a, n_ceps)
    return out


def extract_features(seg: FrictionSegment, label: Optional[PatternLabel] = None) -> FeatureVector:
    clip = seg.waveform
    if clip.duration_s < MIN_DURATION_S:
        raise ParameterError(f"segment of {clip.duration_s:.3f} s shorter than {MIN_DURATION_S} s")
    sr = clip.sample_rate_hz
    frame_len, hop, n_fft, window, freqs = _frame_setup(sr)
    frames = dsp.frame_signal(clip.samples, frame_len, hop)
    windowed = frames * window
    spec = np.fft.rfft(windowed, n=n_fft, axis=1)
    power = np.abs(spec) ** 2
    mag = np.sqrt(power)

    lsfs = np.zeros((frames.shape[0], 12))
    lpccs = np.zeros((frames.shape[0], 13))
    for t, fr in enumerate(windowed):
        r = dsp.autocorr(fr, 13)
        a12, _ = dsp.lpc(r, 12)
        lsfs[t] = dsp.lsf(a12)
        a13, _ = dsp.lpc(r, 13)
        lpccs[t] = dsp.lpc_to_cepstrum(a13, 13)

    chroma = power @ _chroma_weights(n_fft, sr)
    cmax = chroma.max(axis=1, keepdims=True)
    chroma = np.divide(chroma, cmax, out=np.zeros_like(chroma), where=cmax > EPS)

    centroid, skew, live = _shape_moments(mag, freqs)
    contrast = _contrast(power, freqs, sr / 2.0)

    log_mel = np.log(EPS + power @ _mel_fb(n_fft, sr).T)
    mfcc = dsp.dct_ortho(log_mel, 13)
    d1 = dsp.deltas(mfcc)
    d2 = dsp.deltas(d1)

    plp = _plp_cepstra(power, n_fft, sr)

    def live_mean(a):
        return a[live].mean(axis=0) if np.any(live) else np.zeros(a.shape[1:])

    values = np.concatenate([
        lsfs.mean(axis=0),
        chroma.mean(axis=0),
        [_spectral_kurtosis(power)],
        [live_mean(skew)],
        contrast.mean(axis=0),
        [live_mean(centroid)],
        mfcc.mean(axis=0), d1.mean(axis=0), d2.mean(axis=0),
        lpccs.mean(axis=0),
        plp.mean(axis=0),
    ])
    return FeatureVector(values, label)
