import numpy as np
import pytest

from frictionforge.audio_prep import AudioClip, FrictionSegment
from frictionforge.errors import ParameterError
from frictionforge.features import (extract_features, mel_patch, mrmr_select, read_feature_csv, read_patches,
                                    write_feature_csv, write_patches)
from frictionforge.features.bank import BLOCKS, N_FEATURES, FeatureVector
from frictionforge.features.dsp import hz_to_mel, lpc, mel_to_hz
from frictionforge.features.melpatch import PATCH_BANDS, PATCH_FRAMES, raw_frame_count
from frictionforge.features.mrmr import equal_frequency_bins, mutual_information
from frictionforge.labels import PatternLabel

SR = 44100


def _noise(seconds, seed=0, scale=0.1):
    rng = np.random.default_rng(seed)
    return FrictionSegment.from_clip(AudioClip(scale * rng.standard_normal(int(seconds * SR)), SR))


def test_blocks_cover_all_99_dimensions_once():
    covered = np.zeros(N_FEATURES, dtype=int)
    for sl in BLOCKS.values():
        covered[sl] += 1
    assert np.all(covered == 1)


def test_features_are_finite_and_deterministic():
    seg = _noise(0.4)
    a, b = extract_features(seg), extract_features(seg)
    assert a.values.shape == (99,) and np.all(np.isfinite(a.values))
    assert np.array_equal(a.values, b.values)


def test_feature_vector_validation():
    with pytest.raises(ParameterError):
        FeatureVector(np.zeros(10))
    with pytest.raises(ParameterError):
        FeatureVector(np.full(99, np.nan))
    assert FeatureVector(np.zeros(99), "whorl").label is PatternLabel.WHORL


def test_too_short_segment_is_rejected():
    with pytest.raises(ParameterError):
        extract_features(_noise(0.05))


def test_feature_csv_round_trip(tmp_path):
    vecs = [extract_features(_noise(0.3, s), PatternLabel(1 + s % 3)) for s in range(3)]
    write_feature_csv(tmp_path / "f.csv", vecs)
    back = read_feature_csv(tmp_path / "f.csv")
    assert [v.label for v in back] == [v.label for v in vecs]
    for a, b in zip(vecs, back):
        np.testing.assert_allclose(a.values, b.values, rtol=0, atol=0)


def test_mel_patch_round_trip_and_shape(tmp_path):
    patches = [mel_patch(_noise(d, 3)) for d in (0.1, 0.97, 1.5)]
    assert all(p.grid.shape == (PATCH_FRAMES, PATCH_BANDS) for p in patches)
    write_patches(tmp_path / "p.bin", patches, ["a", "b", "c"])
    back, ids = read_patches(tmp_path / "p.bin")
    assert ids == ["a", "b", "c"]
    for a, b in zip(patches, back):  # stored as little-endian float32
        assert np.array_equal(a.grid.astype(np.float32), b.grid.astype(np.float32))


def test_raw_frame_count_grows_with_duration():
    counts = [raw_frame_count(int(d * SR), SR) for d in (0.1, 0.5, 2.0)]
    assert counts == sorted(counts) and counts[0] < PATCH_FRAMES < counts[-1]


def test_mel_scale_round_trip():
    f = np.array([0.0, 100.0, 1000.0, 8000.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-6)


def test_lpc_recovers_ar_coefficients():
    from scipy.signal import lfilter
    rng = np.random.default_rng(0)
    x = lfilter([1.0], [1.0, -0.9, 0.4], rng.standard_normal(200000))
    r = np.array([np.dot(x[: x.size - k], x[k:]) for k in range(3)])
    a, err = lpc(r, 2)
    np.testing.assert_allclose(a, [1.0, -0.9, 0.4], atol=0.02)
    assert 0 < err < r[0]


def test_mutual_information_basics():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 4, 5000)
    assert mutual_information(a, a) == pytest.approx(np.log(4), rel=0.02)
    assert mutual_information(a, rng.integers(0, 4, 5000)) < 0.01
    bins = equal_frequency_bins(rng.standard_normal(800))
    assert np.bincount(bins).min() >= 90


def test_mrmr_selects_nothing_from_pure_noise():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((300, 99))
    y = np.repeat([1, 2, 3], 100)
    res = mrmr_select((x, y), k_candidates=10, cv_folds=5)
    assert len(res.selected_indices) <= 2
    assert all(1 <= i <= 99 for i in res.selected_indices)
