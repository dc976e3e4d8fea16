from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from ..audio_prep import FrictionSegment
from ..errors import ParameterError
from . import dsp

PATCH_FRAMES = 96
PATCH_BANDS = 64
WINDOW_S = 0.020
HOP_S = 0.010
LOG_EPS = 1e-10


@dataclass(frozen=True)
class MelPatch:
    grid: np.ndarray  # (96, 64) log-Mel energies

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        if g.shape != (PATCH_FRAMES, PATCH_BANDS):
            raise ParameterError(f"Mel patch must be {PATCH_FRAMES}x{PATCH_BANDS}, got {g.shape}")
        object.__setattr__(self, "grid", g)


@lru_cache(maxsize=16)
def _setup(sr: int):
    win = int(round(WINDOW_S * sr))
    hop = int(round(HOP_S * sr))
    n_fft = 1 << int(np.ceil(np.log2(win)))
    window = signal.windows.hann(win, sym=False)
    fb = dsp.mel_filterbank(PATCH_BANDS, n_fft, sr)
    return win, hop, n_fft, window, fb


def log_mel_frames(seg: FrictionSegment) -> np.ndarray:
    """Un-cropped log-Mel frames (n_frames, 64); n_frames = 1 + (n - win) // hop."""
    sr = seg.waveform.sample_rate_hz
    win, hop, n_fft, window, fb = _setup(sr)
    frames = dsp.frame_signal(seg.waveform.samples, win, hop)
    power = dsp.power_spectra(frames, n_fft, window)
    return np.log(LOG_EPS + power @ fb.T)


def fit_frames(raw: np.ndarray, n: int = PATCH_FRAMES) -> np.ndarray:
    """Centre-crop to ``n`` frames, or tile cyclically when shorter."""
    f = raw.shape[0]
    if f >= n:
        start = (f - n) // 2
        return raw[start:start + n]
    return raw[np.arange(n) % f]


def mel_patch(seg: FrictionSegment) -> MelPatch:
    return MelPatch(fit_frames(log_mel_frames(seg)))


def raw_frame_count(n_samples: int, sr: int) -> int:
    win, hop, *_ = _setup(sr)
    return 1 + max(n_samples - win, 0) // hop
