"""Small spectral building blocks shared by the feature bank and the Mel patch."""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft
from scipy import linalg, signal


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sr: int, fmin: float = 0.0, fmax: float = None) -> np.ndarray:
    """Triangular HTK-style filters, shape (n_mels, n_fft // 2 + 1), unit peak."""
    fmax = sr / 2.0 if fmax is None else fmax
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    pts = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, freqs.size))
    for m in range(n_mels):
        lo, mid, hi = pts[m], pts[m + 1], pts[m + 2]
        up = (freqs - lo) / max(mid - lo, 1e-9)
        down = (hi - freqs) / max(hi - mid, 1e-9)
        fb[m] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    if x.size < frame_len:
        x = np.concatenate([x, np.zeros(frame_len - x.size)])
    n = 1 + (x.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def power_spectra(frames: np.ndarray, n_fft: int, window: np.ndarray) -> np.ndarray:
    return np.abs(np.fft.rfft(frames * window, n=n_fft, axis=1)) ** 2


def lpc(r: np.ndarray, order: int):
    """Predictor a[0..order] (a[0] = 1) and residual energy from autocorrelation ``r``.

    ``A(z) = 1 + a1 z^-1 + ...``. A zero or numerically singular autocorrelation
    yields the trivial predictor.
    """
    a = np.zeros(order + 1)
    a[0] = 1.0
    if r[0] <= 1e-18:
        return a, 0.0
    rr = r[: order + 1].copy()
    rr[0] *= 1.0 + 1e-9  # white-noise correction keeps the Toeplitz system well posed
    try:
        coef = linalg.solve_toeplitz(rr[:order], -rr[1:order + 1])
    except linalg.LinAlgError:
        return a, float(r[0])
    a[1:] = coef
    err = float(rr[0] + np.dot(coef, rr[1:order + 1]))
    return a, max(err, 0.0)


def autocorr(frame: np.ndarray, order: int) -> np.ndarray:
    n = frame.size
    spec = np.fft.rfft(frame, n=2 * n)
    r = np.fft.irfft(np.abs(spec) ** 2)[: order + 1]
    return r


def lsf(a: np.ndarray) -> np.ndarray:
    """Line spectral frequencies (radians in (0, pi), ascending) of predictor ``a``."""
    order = a.size - 1
    p = np.concatenate([a, [0.0]]) + np.concatenate([[0.0], a[::-1]])
    q = np.concatenate([a, [0.0]]) - np.concatenate([[0.0], a[::-1]])
    ang = np.concatenate([np.angle(np.roots(p)), np.angle(np.roots(q))])
    ang = np.sort(ang[(ang > 1e-7) & (ang < np.pi - 1e-7)])
    if ang.size != order:
        # degenerate predictor: fall back to the evenly spaced frequencies of a flat spectrum
        return np.pi * np.arange(1, order + 1) / (order + 1)
    return ang


def lpc_to_cepstrum(a: np.ndarray, n_ceps: int) -> np.ndarray:
    """Cepstra c1..c_n of the all-pole model 1 / A(z)."""
    order = a.size - 1
    c = np.zeros(n_ceps + 1)
    for n in range(1, n_ceps + 1):
        acc = -a[n] if n <= order else 0.0
        for k in range(1, n):
            if n - k <= order:
                acc -= (k / n) * c[k] * a[n - k]
        c[n] = acc
    return c[1:]


def dct_ortho(x: np.ndarray, n: int) -> np.ndarray:
    return sfft.dct(x, type=2, norm="ortho", axis=-1)[..., :n]


def deltas(feat: np.ndarray, width: int = 2) -> np.ndarray:
    """Regression deltas along axis 0 with edge replication."""
    if feat.shape[0] == 1:
        return np.zeros_like(feat)
    padded = np.pad(feat, ((width, width), (0, 0)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, width + 1))
    out = np.zeros_like(feat)
    n = feat.shape[0]
    for k in range(1, width + 1):
        out += k * (padded[width + k:width + k + n] - padded[width - k:width - k + n])
    return out / denom


def hz_to_bark(f):
    f = np.asarray(f, dtype=float)
    return 6.0 * np.arcsinh(f / 600.0)


def bark_filterbank(n_bands: int, n_fft: int, sr: int) -> np.ndarray:
    """Critical-band weights in the Hermansky PLP shape, shape (n_bands, n_fft//2 + 1)."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    z = hz_to_bark(freqs)
    centers = np.linspace(0.0, hz_to_bark(sr / 2.0), n_bands)
    fb = np.zeros((n_bands, freqs.size))
    for i, zc in enumerate(centers):
        dz = z - zc
        w = np.zeros_like(dz)
        lo = (dz >= -1.3) & (dz < -0.5)
        mid = (dz >= -0.5) & (dz <= 0.5)
        hi = (dz > 0.5) & (dz <= 2.5)
        w[lo] = 10.0 ** (2.5 * (dz[lo] + 0.5))
        w[mid] = 1.0
        w[hi] = 10.0 ** (-1.0 * (dz[hi] - 0.5))
        fb[i] = w
    return fb, centers


def equal_loudness(freq_hz: np.ndarray) -> np.ndarray:
    w2 = (2 * np.pi * np.asarray(freq_hz, dtype=float)) ** 2
    return ((w2 + 56.8e6) * w2 ** 2) / ((w2 + 6.3e6) ** 2 * (w2 + 0.38e9))


def rasta_filter(x: np.ndarray) -> np.ndarray:
    """RASTA band-pass along time (axis 0) of log critical-band trajectories.

    The FIR part sums to zero, so any constant (gain) offset is removed.
    """
    numer = np.array([0.2, 0.1, 0.0, -0.1, -0.2])
    denom = np.array([1.0, -0.94])
    return signal.lfilter(numer, denom, x - x[:1], axis=0)
