"""Acceptance criteria 1-12, each checked against an oracle built here and not by the code under test.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion. ``python3 tests/test_acceptance.py`` does the same.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from frictionforge.audio_prep import (AUGMENTATIONS, AudioClip, FrictionSegment, SegmenterConfig,
                                      augment_corpus, pitch_shift, segment_friction, time_stretch)
from frictionforge.features import mel_patch, mrmr_select
from frictionforge.fingerprint_db import (MinutiaPoint, MinutiaeTemplate, PlantSpec, crucial_region,
                                          synth_planted)
from frictionforge.labels import PATTERNS
from frictionforge.masterprint import (AsrMatrix, HillClimbConfig, hill_climb, independent_pmp,
                                       planted_attractor, sequential_pmp, wasr)
from frictionforge.matcher import (calibrate_far, far_curve, impostor_pairs, match, mp_prevalence,
                                   score_matrix, thresholds_from_scores)
from frictionforge.synthetic_audio import event_clip, pattern_segment

SR = 44100


# 1 -------------------------------------------------------------------------

def test_criterion_01_wasr_oracle(criterion):
    criterion(1, "wASR equals triple-loop brute force on 1,000 random matrices within 1e-12, < 1 s")
    rng = np.random.default_rng(1)
    mats = []
    for _ in range(1000):
        r = rng.random((3, 3))
        mats.append(AsrMatrix(r / r.sum(axis=1, keepdims=True), rng.random((3, 3))))
    t0 = time.perf_counter()
    got = [wasr(m) for m in mats]
    worst = 0.0
    for m, g in zip(mats, got):
        for i in range(3):
            acc = 0.0
            for j in range(3):
                acc += m.R[i][j] * m.ASR[j][i]
            worst = max(worst, abs(acc - g[i]))
    elapsed = time.perf_counter() - t0
    criterion.detail(f"max error {worst:.1e}, {elapsed:.3f} s")
    assert worst <= 1e-12
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------

def _random_template(rng, n, cx=200, cy=150, radius=125, spacing=14):
    pts = []
    while len(pts) < n:
        r = radius * math.sqrt(rng.random())
        a = rng.random() * 2 * math.pi
        x, y = int(round(cx + r * math.cos(a))), int(round(cy + r * math.sin(a)))
        if all((x - p.x) ** 2 + (y - p.y) ** 2 >= spacing ** 2 for p in pts):
            pts.append(MinutiaPoint(x, y, int(rng.integers(16)), "EB"[int(rng.integers(2))]))
    return MinutiaeTemplate(400, 300, tuple(pts))


def test_criterion_02_matcher_invariants(criterion):
    criterion(2, "matcher symmetry, self-match, translation, whole-bin rotation, score bound on 200 templates, < 30 s")
    rng = np.random.default_rng(2)
    templates = [_random_template(rng, int(rng.integers(12, 41))) for _ in range(200)]
    t0 = time.perf_counter()
    failures = []
    for i, t in enumerate(templates):
        other = templates[(i + 1) % len(templates)]
        ab, ba = match(t, other), match(other, t)
        if ab != ba:
            failures.append((i, "symmetry", ab, ba))
        if ab > min(len(t), len(other)):
            failures.append((i, "bound", ab))
        if match(t, t) != len(t):
            failures.append((i, "self", match(t, t), len(t)))
        moved = t.translated(int(rng.integers(-20, 21)), int(rng.integers(-20, 21)))
        if match(t, moved) != len(t):
            failures.append((i, "translation"))
        turned = t.rotated(int(rng.integers(1, 16)), (200, 150))
        if match(t, turned) != len(t):
            failures.append((i, "rotation"))
    elapsed = time.perf_counter() - t0
    criterion.detail(f"{len(failures)} violations, {elapsed:.1f} s")
    assert not failures, failures[:5]
    assert elapsed < 30.0


# 3 -------------------------------------------------------------------------

def _far_oracle(scores, target):
    """Smallest threshold whose share of scores strictly above it is at most the target."""
    scores = list(scores)
    lam = 0
    while sum(s > lam for s in scores) / len(scores) > target:
        lam += 1
    return lam


def test_criterion_03_far_calibration(criterion):
    criterion(3, "FAR curve non-increasing, thresholds ordered, uniform {1..100} gives threshold 99 at 1%")
    uniform = np.arange(1, 101)
    table = thresholds_from_scores(uniform, [0.01])
    assert table.entries[0.01] == 99 == _far_oracle(uniform, 0.01)

    d = synth_planted(3, 60, 3).dataset
    scores = score_matrix(d.templates)
    iu, ju = impostor_pairs(d)
    imp = scores[iu, ju]
    curve = far_curve(d, scores=imp)
    fars = [f for _, f in curve]
    assert all(b <= a for a, b in zip(fars, fars[1:]))
    tab = calibrate_far(d, scores=imp)
    lams = [tab.entries[t] for t in (0.01, 0.001, 0.0001)]
    assert lams[0] <= lams[1] <= lams[2]
    for t, lam in zip((0.01, 0.001, 0.0001), lams):
        assert lam == _far_oracle(imp.tolist(), t)
    criterion.detail(f"thresholds at 1%/0.1%/0.01%: {lams}, {imp.size} impostor pairs")


# 4 -------------------------------------------------------------------------

def test_criterion_04_planted_recovery(criterion):
    criterion(4, "planted MasterPrint is independent #1 and sequential round 1 in 10/10 seeds, < 2 min")
    t0 = time.perf_counter()
    hits = []
    for seed in range(10):
        pattern = PATTERNS[seed % 3]
        pd = synth_planted(100 + seed, 60, 3, plants=[PlantSpec(pattern, fraction=0.3)])
        d, planted = pd.dataset, pd.planted[0]
        assert len(pd.covered[0]) >= 0.3 * 60
        scores = score_matrix(d.templates)
        iu, ju = impostor_pairs(d)
        lam = calibrate_far(d, [0.001], scores=scores[iu, ju]).entries[0.001]
        ind = independent_pmp(d, lam, scores=scores)
        seq = sequential_pmp(d, lam, scores=scores)
        hits.append(ind.templates[0].key == planted.key and seq.templates[0].key == planted.key)
    elapsed = time.perf_counter() - t0
    criterion.detail(f"{sum(hits)}/10 seeds, {elapsed:.0f} s")
    assert all(hits)
    assert elapsed < 120.0


# 5 -------------------------------------------------------------------------

def _coverage_oracle(probe, train, lam, cfg):
    """Share of the probe's other fingers with at least one impression scoring above ``lam``."""
    fingers = {t.finger_id for t in train.templates if t.finger_id != probe.finger_id}
    hit = {t.finger_id for t in train.templates
           if t.finger_id != probe.finger_id and match(probe, t, cfg) > lam}
    return len(hit) / len(fingers)


def _modify_neighbours(t):
    """All single grid moves and direction steps of crucial-region minutiae."""
    cr = crucial_region(t)
    out = []
    for k, m in enumerate(t.minutiae):
        if not cr.contains(m.x, m.y):
            continue
        x, y = cr.snap(m.x, m.y)
        for dx, dy, dt in ((9, 0, 0), (-9, 0, 0), (0, 9, 0), (0, -9, 0), (0, 0, 1), (0, 0, -1)):
            if not cr.contains(x + dx, y + dy):
                continue
            pts = list(t.minutiae)
            pts[k] = MinutiaPoint(x + dx, y + dy, (m.theta_bin + dt) % 16, m.kind)
            try:
                out.append(t.with_minutiae(pts))
            except Exception:
                pass  # grid-cell collision
    return out


def test_criterion_05_hill_climb(criterion):
    criterion(5, "hill climb monotone, reproducible, lifts planted attractor 0.2 -> 0.6 in >= 9/10 seeds, < 5 min")
    t0 = time.perf_counter()
    reached = 0
    for s in range(10):
        pa = planted_attractor(s)
        seed_t = pa.seeds.templates[0]
        start = _coverage_oracle(seed_t, pa.train, pa.threshold, pa.matcher_cfg)
        best_neighbour = max(_coverage_oracle(n, pa.train, pa.threshold, pa.matcher_cfg)
                             for n in _modify_neighbours(seed_t))
        assert start == pytest.approx(0.2) and best_neighbour == pytest.approx(0.6), (s, start, best_neighbour)

        cfg = HillClimbConfig(j_max=500, plateau=100, seed=s)
        res = hill_climb(pa.seeds, pa.train, pa.threshold, cfg, pa.matcher_cfg)
        for k in {r.template for r in res.trace}:
            best = [r.best_asr for r in res.trace if r.template == k]
            assert all(b >= a for a, b in zip(best, best[1:]))
        final = _coverage_oracle(res.templates[0], pa.train, pa.threshold, pa.matcher_cfg)
        assert final == pytest.approx(res.per_template_asr[0])
        reached += final >= 0.6 - 1e-9
        if s == 0:
            again = hill_climb(pa.seeds, pa.train, pa.threshold, cfg, pa.matcher_cfg)
            assert again.templates == res.templates and again.trace == res.trace
    elapsed = time.perf_counter() - t0
    criterion.detail(f"{reached}/10 seeds reach 0.6, {elapsed:.1f} s")
    assert reached >= 9
    assert elapsed < 300.0


# 6 -------------------------------------------------------------------------

def test_criterion_06_segmentation(criterion):
    criterion(6, "segmentation recall >= 90%, no false positives, boundary error <= 1 window, < 1 min")
    rng = np.random.default_rng(6)
    cfg = SegmenterConfig()
    found = total = false_pos = 0
    worst = 0
    t0 = time.perf_counter()
    for _ in range(50):
        ec = event_clip(rng, n_friction=int(rng.integers(1, 4)), n_speech=int(rng.integers(1, 3)))
        segs = segment_friction(ec.clip, cfg)
        used = set()
        for s, e in ec.friction_spans:
            total += 1
            overlap = [k for k, g in enumerate(segs) if g.start_sample < e and g.end_sample > s]
            if overlap:
                found += 1
                used.update(overlap)
                g = segs[overlap[0]]
                worst = max(worst, abs(g.start_sample - s), abs(g.end_sample - e))
        false_pos += len(segs) - len(used)
    elapsed = time.perf_counter() - t0
    criterion.detail(f"recall {found}/{total}, {false_pos} false positives, worst boundary {worst} samples, "
                     f"{elapsed:.1f} s")
    assert found / total >= 0.9
    assert false_pos == 0
    assert worst <= cfg.window_len
    assert elapsed < 60.0


# 7 -------------------------------------------------------------------------

def _peak_hz(x, sr=SR):
    n = 1 << 20
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x)), n=n))
    return np.argmax(spec) * sr / n


def test_criterion_07_augmentation(criterion):
    criterion(7, "stretch 0.8 gives x1.25 duration, +/-2 semitone shift moves a 1 kHz peak, corpus x5")
    t = np.arange(int(0.5 * SR)) / SR
    tone = FrictionSegment.from_clip(AudioClip(0.5 * np.sin(2 * np.pi * 1000 * t), SR))
    stretched = time_stretch(tone, 0.8)
    assert len(stretched.waveform) / len(tone.waveform) == pytest.approx(1.25, rel=0.02)
    detail = []
    for st in (2, -2):
        shifted = pitch_shift(tone, st)
        want = 1000 * 2 ** (st / 12)
        got = _peak_hz(shifted.waveform.samples)
        assert got == pytest.approx(want, rel=0.03)
        assert len(shifted.waveform) / len(tone.waveform) == pytest.approx(1.0, rel=0.02)
        detail.append(f"{st:+d}: {got:.0f} Hz")
    rng = np.random.default_rng(7)
    corpus = [pattern_segment(PATTERNS[k % 3], rng, duration_s=0.25) for k in range(4)]
    assert len(augment_corpus(corpus)) == 5 * len(corpus) == len(AUGMENTATIONS) * len(corpus)
    criterion.detail(", ".join(detail))


# 8 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def band_fingers():
    from frictionforge.features import extract_features
    from frictionforge.pattern_classify import LabeledFinger
    rng = np.random.default_rng(8)
    fingers = []
    for lab in PATTERNS:
        for k in range(60):
            segs = []
            for _ in range(3):
                seg = pattern_segment(lab, rng, duration_s=float(rng.uniform(0.2, 0.5)))
                segs.append((extract_features(seg), mel_patch(seg)))
            fingers.append(LabeledFinger(tuple(segs), lab, f"{lab.slug}-{k}"))
    return fingers


def test_criterion_08_classifier(criterion, band_fingers):
    from frictionforge.pattern_classify import ClassifierConfig, DeepConfig, cross_validate
    criterion(8, "10-fold CV finger accuracy: joint >= 0.90, wide-only >= 0.85")
    joint = cross_validate(band_fingers, ClassifierConfig(0.5, 0.5, deep=DeepConfig()), 10, 0).report
    wide = cross_validate(band_fingers, ClassifierConfig(1.0, 0.0, deep=None), 10, 0).report
    # the oracle is the label itself: recompute accuracy from the confusion matrix
    for rep in (joint, wide):
        c = np.asarray(rep.confusion)
        assert c.sum() == len(band_fingers)
        assert rep.accuracy == pytest.approx(np.trace(c) / c.sum())
    criterion.detail(f"joint {joint.accuracy:.3f}, wide-only {wide.accuracy:.3f}")
    assert joint.accuracy >= 0.90
    assert wide.accuracy >= 0.85


# 9 -------------------------------------------------------------------------

def test_criterion_09_mrmr(criterion):
    criterion(9, "mRMR keeps >= 4 of 5 informative dims and <= 15 dims in total")
    rng = np.random.default_rng(9)
    n = 300
    y = np.repeat([1, 2, 3], 100)
    x = rng.standard_normal((n, 99))
    informative = [3, 17, 40, 60, 88]  # zero-based columns
    for k, j in enumerate(informative):
        shift = np.roll(np.array([0.0, 1.0, 2.0]), k)[y - 1] * 0.8
        x[:, j] = rng.standard_normal(n) + shift
    res = mrmr_select((x, y), k_candidates=20, cv_folds=5)
    chosen = set(res.zero_based)
    good = len(chosen & set(informative))
    criterion.detail(f"{good}/5 informative among {len(chosen)} selected")
    assert good >= 4
    assert len(chosen) <= 15


# 10 ------------------------------------------------------------------------

def _toy_prevalence_dataset(seed):
    """Planted template copied into all fingers of one pattern, plus as many unrelated fingers."""
    pattern = PATTERNS[seed % 3]
    pd = synth_planted(500 + seed, 4, 2, plants=[PlantSpec(pattern, fraction=1.0)])
    d, planted = pd.dataset, pd.planted[0]
    covered = set(pd.covered[0])
    pats = d.finger_patterns()
    unrelated = [f for f in d.finger_ids if pats[f] != pattern and f != planted.finger_id][:len(covered)]
    keep = covered | set(unrelated) | {planted.finger_id}
    return d.subset([i for i, t in enumerate(d.templates) if t.finger_id in keep]), planted


def _prevalence_oracle(d, lam, fraction):
    keys = []
    fingers = sorted({t.finger_id for t in d.templates})
    for a in d.templates:
        hit = set()
        for b in d.templates:
            if b.finger_id != a.finger_id and b.finger_id not in hit and match(a, b) > lam:
                hit.add(b.finger_id)
        if len(hit) / (len(fingers) - 1) >= fraction:
            keys.append(a.key)
    return keys


def test_criterion_10_prevalence(criterion):
    criterion(10, "mp_prevalence finds the 50%-coverage plant and equals brute force on 20 toy draws")
    lam = 8
    for seed in range(20):
        d, planted = _toy_prevalence_dataset(seed)
        fingers = sorted({t.finger_id for t in d.templates})
        others = [f for f in fingers if f != planted.finger_id]
        cov = {t.finger_id for t in d.templates if t.finger_id != planted.finger_id and match(planted, t) > lam}
        assert len(cov) >= 0.5 * len(others), (seed, len(cov))
        prev = mp_prevalence(d, lam, 0.04)
        assert prev.count >= 1 and planted.key in prev.template_keys
        assert list(prev.template_keys) == _prevalence_oracle(d, lam, 0.04), seed
    criterion.detail("20/20 draws equal to the oracle")


# 11 ------------------------------------------------------------------------

def test_criterion_11_melpatch_shape(criterion):
    criterion(11, "Mel patch is 96x64 for 0.1 s, 0.5 s and 2.0 s segments")
    rng = np.random.default_rng(11)
    shapes = []
    for dur in (0.1, 0.5, 2.0):
        seg = FrictionSegment.from_clip(AudioClip(0.1 * rng.standard_normal(int(dur * SR)), SR))
        shapes.append(mel_patch(seg).grid.shape)
    criterion.detail(str(shapes))
    assert shapes == [(96, 64)] * 3


# 12 ------------------------------------------------------------------------

SMALL_PIPELINE = """\
seed: 11
synth_audio: {fingers_per_pattern: 4}
classifier: {cv_folds: 3, deep: {max_epochs: 60}}
synth_db: {fingers_per_pattern: 8, impressions: 2}
calibration: {targets: [0.01], attack_far: 0.01}
masterprint: {j_max: 40, plateau: 20}
"""


def test_criterion_12_pipeline_determinism(criterion, tmp_path):
    criterion(12, "pipeline with a fixed seed run twice gives byte-identical reports")
    cfg = tmp_path / "small.yaml"
    cfg.write_text(SMALL_PIPELINE)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "frictionforge.cli", "pipeline", "--config", str(cfg),
                               "--out", str(out)], capture_output=True, text=True, timeout=600)
        assert proc.returncode == 0, proc.stderr[-2000:]
        outs.append(out)
    compared = 0
    for f in sorted(outs[0].rglob("*")):
        if f.is_file() and f.name != "run.json":  # run.json records the differing --out argument
            rel = f.relative_to(outs[0])
            assert (outs[1] / rel).read_bytes() == f.read_bytes(), rel
            compared += 1
    assert (outs[0] / "report.json").exists()
    criterion.detail(f"{compared} artifacts identical")


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-v"]))
