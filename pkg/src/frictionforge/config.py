"""Pipeline configuration: one YAML file, every key known in advance.

Resolution order, lowest to highest: built-in defaults, the config file,
``FRICTIONFORGE_SEED`` (seed only), command-line flags.
"""

from __future__ import annotations

import copy
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from .errors import ParameterError

SEED_ENV = "FRICTIONFORGE_SEED"

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "workers": None,
    "segmenter": {
        "t_dif": 6.0, "t_var": 9.0, "t_dur_s": 0.15, "band_low_hz": 0.0, "band_high_hz": 22050.0,
        "window_len": 1024, "hop": 512, "n_subbands": 8, "silence_db": -60.0,
    },
    "highpass": {"cutoff_hz": 4000.0, "taps": 255},
    "noise_compensation": {"enabled": False, "frame_len": 1024, "hop": 256},
    "selection": {"enabled": False, "k_candidates": 20, "cv_folds": 5, "knn_k": 5, "n_permutations": 19},
    "classifier": {
        "w_wide": 0.5, "w_deep": 0.5, "knn_k": 5, "soft_votes": False, "cv_folds": 10,
        "deep": {"kind": "native_linear", "learning_rate": 2.0, "l2": 1e-3, "max_epochs": 400,
                 "patience": 25, "min_delta": 1e-3, "val_fraction": 0.2, "scores_path": None},
    },
    "matcher": {"dist_tol_px": 9.0, "angle_tol_bins": 1.0, "min_edge_len_px": 10.0, "max_edge_len_px": 200.0,
                "min_support": 2, "support_fraction": 0.5},
    "calibration": {"targets": [0.01, 0.001, 0.0001], "attack_far": 0.001},
    "masterprint": {"exclude": "same_finger", "j_max": 500, "plateau": 100, "target_asr": 1.0,
                    "weights": [1.0, 1.0, 1.0, 1.0]},
    "synth_db": {
        "fingers_per_pattern": 20, "impressions": 3, "test_fraction": 0.5,
        "min_count": 14, "max_count": 24, "pool_size": 20, "pool_share": 0.3,
        "position_jitter_px": 4, "theta_jitter_prob": 0.2, "drop_fraction": 0.1, "add_fraction": 0.1,
    },
    "synth_audio": {"fingers_per_pattern": 10, "swipes": 3, "sample_rate_hz": 44100},
    "prevalence": {"fraction": 0.04},
    "pipeline": {"audio_dir": None, "labels_csv": None, "db_path": None, "figures": True},
}


def _check_type(path: str, default, value):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParameterError(f"config key {path} expects true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParameterError(f"config key {path} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParameterError(f"config key {path} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ParameterError(f"config key {path} expects a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ParameterError(f"config key {path} expects a list, got {value!r}")
        return list(value)
    return value


def merge(base: Dict[str, Any], update: Mapping[str, Any], schema: Mapping[str, Any] = DEFAULTS,
          prefix: str = "") -> Dict[str, Any]:
    """Deep-merge ``update`` into a copy of ``base``; unknown keys raise ParameterError."""
    out = copy.deepcopy(base)
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ParameterError(f"unknown config key {path!r}")
        if isinstance(schema[key], dict):
            if not isinstance(value, Mapping):
                raise ParameterError(f"config key {path} must be a mapping")
            out[key] = merge(out[key], value, schema[key], path + ".")
        else:
            out[key] = _check_type(path, schema[key], value)
    return out


def parse_assignment(text: str) -> Dict[str, Any]:
    """``a.b.c=value`` (value read as YAML) into a nested mapping."""
    if "=" not in text:
        raise ParameterError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw) if raw.strip() else None
    parts = key.strip().split(".")
    nested: Dict[str, Any] = {parts[-1]: value}
    for p in reversed(parts[:-1]):
        nested = {p: nested}
    return nested


def resolve(path: Optional[str] = None, overrides=(), seed: Optional[int] = None,
            workers: Optional[int] = None, env: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    env = os.environ if env is None else env
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            loaded = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ParameterError(f"cannot read config {path}: {exc}") from None
        if not isinstance(loaded, Mapping):
            raise ParameterError("the config file must hold a mapping at top level")
        cfg = merge(cfg, loaded)
    if env.get(SEED_ENV, "").strip():
        try:
            cfg["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ParameterError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    for item in overrides:
        cfg = merge(cfg, parse_assignment(item) if isinstance(item, str) else item)
    if seed is not None:
        cfg["seed"] = int(seed)
    if workers is not None:
        cfg["workers"] = int(workers)
    return cfg


def dump(cfg: Mapping[str, Any], path) -> None:
    Path(path).write_text(yaml.safe_dump(dict(cfg), sort_keys=True, default_flow_style=False))


# typed views ----------------------------------------------------------------

def segmenter_config(cfg):
    from .audio_prep import SegmenterConfig
    return SegmenterConfig(**cfg["segmenter"])


def matcher_config(cfg):
    from .matcher import MatcherConfig
    return MatcherConfig(**cfg["matcher"])


def classifier_config(cfg, feature_indices=None):
    from .pattern_classify import ClassifierConfig, DeepConfig
    c = cfg["classifier"]
    deep = None if c["deep"]["kind"] == "null" or c["w_deep"] == 0 else DeepConfig(**c["deep"])
    return ClassifierConfig(w_wide=c["w_wide"], w_deep=c["w_deep"], knn_k=c["knn_k"], deep=deep,
                            soft_votes=c["soft_votes"], feature_indices=feature_indices, seed=cfg["seed"])


def hill_climb_config(cfg):
    from .masterprint import HillClimbConfig
    m = cfg["masterprint"]
    return HillClimbConfig(j_max=m["j_max"], plateau=m["plateau"], target_asr=m["target_asr"],
                           weights=tuple(m["weights"]), seed=cfg["seed"])


def synth_configs(cfg):
    from .fingerprint_db import NoiseConfig, SynthConfig
    s = cfg["synth_db"]
    noise = NoiseConfig(s["position_jitter_px"], s["theta_jitter_prob"], s["drop_fraction"], s["add_fraction"])
    synth = SynthConfig(min_count=s["min_count"], max_count=s["max_count"], pool_size=s["pool_size"],
                        pool_share=s["pool_share"])
    return noise, synth
