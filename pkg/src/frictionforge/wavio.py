"""WAV reading and writing on top of :mod:`scipy.io.wavfile`."""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.io import wavfile

from .audio_prep import AudioClip, FrictionSegment
from .errors import IngestionError


def read_wav(path) -> AudioClip:
    """Mono clip in [-1, 1]; 16-bit PCM and 32-bit float are accepted, stereo is averaged."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            sr, data = wavfile.read(str(path))
    except (ValueError, OSError) as exc:
        raise IngestionError(f"cannot read WAV {path}: {exc}") from None
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        x = data.astype(np.float64)
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    else:
        raise IngestionError(f"{path}: unsupported sample format {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise IngestionError(f"{path}: no samples")
    return AudioClip(x, int(sr))


def write_wav(path, clip: AudioClip, float32: bool = False) -> None:
    x = np.clip(clip.samples, -1.0, 1.0)
    if float32:
        wavfile.write(str(path), clip.sample_rate_hz, x.astype(np.float32))
    else:
        wavfile.write(str(path), clip.sample_rate_hz, np.round(x * 32767.0).astype(np.int16))


def manifest_entries(segments: Sequence[FrictionSegment], source_file: str) -> List[dict]:
    return [{"source_file": source_file, "start_sample": int(s.start_sample), "end_sample": int(s.end_sample),
             "sample_rate_hz": int(s.waveform.sample_rate_hz)} for s in segments]


def export_segments(segments: Sequence[FrictionSegment], out_dir, source: str) -> List[Path]:
    """Write ``<source>_segNNN.wav`` files (16-bit PCM) and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, seg in enumerate(segments):
        p = out_dir / f"{source}_seg{k:03d}.wav"
        write_wav(p, seg.waveform)
        paths.append(p)
    return paths


def read_manifest(path) -> List[dict]:
    try:
        entries = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read segment manifest {path}: {exc}") from None
    if not isinstance(entries, list):
        raise IngestionError(f"{path}: a segment manifest is a JSON array")
    bad = [(k + 1, "missing keys") for k, e in enumerate(entries)
           if not {"source_file", "start_sample", "end_sample", "sample_rate_hz"} <= set(e)]
    if bad:
        raise IngestionError(f"{path}: malformed manifest entries", bad)
    return entries
