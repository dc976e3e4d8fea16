"""Synthetic recordings with planted ground truth, for tests and the demo pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import signal

from .audio_prep import AudioClip, FrictionSegment
from .labels import PatternLabel

# disjoint per-pattern bands used by the synthetic friction corpus
PATTERN_BANDS_HZ = {
    PatternLabel.LEFT_LOOP: (4500.0, 7500.0),
    PatternLabel.RIGHT_LOOP: (9000.0, 13000.0),
    PatternLabel.WHORL: (14500.0, 19500.0),
}


def db_to_amp(db: float) -> float:
    return 10.0 ** (db / 20.0)


def white_noise(n: int, rng: np.random.Generator, level_dbfs: float) -> np.ndarray:
    return rng.standard_normal(n) * db_to_amp(level_dbfs)


def band_noise(n: int, sr: int, low_hz: float, high_hz: float,
               rng: np.random.Generator, level_dbfs: float) -> np.ndarray:
    """Gaussian noise confined to [low_hz, high_hz] by zeroing FFT bins outside the band."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sr)
    spec[(freqs < low_hz) | (freqs > high_hz)] = 0.0
    x = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(x ** 2)) or 1.0
    return x / rms * db_to_amp(level_dbfs)


def friction_burst(n: int, sr: int, rng: np.random.Generator, level_dbfs: float = -18.0) -> np.ndarray:
    """Broadband, spectrally flat burst with 5 ms raised-cosine ramps."""
    x = white_noise(n, rng, level_dbfs)
    ramp = min(int(0.005 * sr), n // 2)
    if ramp:
        r = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, ramp))
        x[:ramp] *= r
        x[-ramp:] *= r[::-1]
    return x


def speech_band_burst(n: int, sr: int, rng: np.random.Generator, level_dbfs: float = -14.0) -> np.ndarray:
    return band_noise(n, sr, 80.0, 3800.0, rng, level_dbfs)


@dataclass
class EventClip:
    clip: AudioClip
    friction_spans: List[Tuple[int, int]]
    speech_spans: List[Tuple[int, int]]


def event_clip(rng: np.random.Generator, sr: int = 44100, n_friction: int = 2, n_speech: int = 1,
               floor_dbfs: float = -90.0) -> EventClip:
    """Random layout of friction bursts (0.2-0.8 s) and speech-band bursts separated by silence."""
    kinds = ["f"] * n_friction + ["s"] * n_speech
    rng.shuffle(kinds)
    pieces = [white_noise(int(rng.uniform(0.3, 0.6) * sr), rng, floor_dbfs)]
    f_spans, s_spans = [], []
    pos = pieces[0].size
    for kind in kinds:
        dur = rng.uniform(0.2, 0.8) if kind == "f" else rng.uniform(0.3, 0.9)
        n = int(dur * sr)
        if kind == "f":
            burst = friction_burst(n, sr, rng, rng.uniform(-24.0, -12.0))
            f_spans.append((pos, pos + n))
        else:
            burst = speech_band_burst(n, sr, rng, rng.uniform(-20.0, -8.0))
            s_spans.append((pos, pos + n))
        pieces.append(burst + white_noise(n, rng, floor_dbfs))
        pos += n
        gap = white_noise(int(rng.uniform(0.3, 0.6) * sr), rng, floor_dbfs)
        pieces.append(gap)
        pos += gap.size
    samples = np.concatenate(pieces)
    return EventClip(AudioClip(np.clip(samples, -1, 1), sr), f_spans, s_spans)


def pattern_segment(pattern: PatternLabel, rng: np.random.Generator, sr: int = 44100,
                    duration_s: float = 0.3, level_dbfs: float = -18.0) -> FrictionSegment:
    """A friction-like segment whose energy sits in the pattern's band (plus a weak broadband floor)."""
    n = int(duration_s * sr)
    lo, hi = PATTERN_BANDS_HZ[PatternLabel(pattern)]
    jitter = rng.uniform(-300.0, 300.0)
    x = band_noise(n, sr, lo + jitter, hi + jitter, rng, level_dbfs + rng.uniform(-4, 4))
    x += white_noise(n, rng, level_dbfs - 30.0)
    return FrictionSegment.from_clip(AudioClip(x, sr))


def pattern_recording(pattern: PatternLabel, rng: np.random.Generator, sr: int = 44100,
                      n_swipes: int = 3, floor_dbfs: float = -90.0) -> Tuple[AudioClip, List[Tuple[int, int]]]:
    """A recording of ``n_swipes`` friction swipes of one finger separated by near-silence.

    Each swipe is broadband (so the segmenter finds it) with extra energy in the pattern band.
    """
    pieces = [white_noise(int(0.4 * sr), rng, floor_dbfs)]
    spans = []
    pos = pieces[0].size
    lo, hi = PATTERN_BANDS_HZ[PatternLabel(pattern)]
    for _ in range(n_swipes):
        n = int(rng.uniform(0.35, 0.6) * sr)
        swipe = friction_burst(n, sr, rng, -26.0) + band_noise(n, sr, lo, hi, rng, -30.0)
        spans.append((pos, pos + n))
        pieces.append(swipe)
        pos += n
        gap = white_noise(int(rng.uniform(0.4, 0.6) * sr), rng, floor_dbfs)
        pieces.append(gap)
        pos += gap.size
    return AudioClip(np.clip(np.concatenate(pieces), -1, 1), sr), spans
