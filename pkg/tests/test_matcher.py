import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from frictionforge.errors import CalibrationError, ParameterError
from frictionforge.fingerprint_db import MinutiaPoint, MinutiaeTemplate, synth_planted
from frictionforge.matcher import (Gallery, MatcherConfig, ThresholdTable, far_at, impostor_pairs,
                                   impostor_scores, indicator, match, mp_prevalence, score_histogram,
                                   score_matrix, set_workers, thresholds_from_scores)


@pytest.fixture(scope="module")
def db():
    return synth_planted(5, 4, 2).dataset


def test_score_matrix_agrees_with_match(db):
    s = score_matrix(db.templates)
    assert s.shape == (len(db), len(db))
    assert np.array_equal(s, s.T)
    for i in range(0, len(db), 3):
        for j in range(0, len(db), 4):
            assert s[i, j] == match(db.templates[i], db.templates[j])
    assert all(s[i, i] == len(t) for i, t in enumerate(db.templates))


def test_gallery_matches_score_matrix(db):
    s = score_matrix(db.templates)
    g = Gallery(db.templates)
    for i, t in enumerate(db.templates):
        assert np.array_equal(g.scores(t), s[i])


def test_rectangular_score_matrix(db):
    rows, cols = db.templates[:3], db.templates[3:9]
    s = score_matrix(rows, cols)
    assert s.shape == (3, 6)
    assert s[1, 2] == match(rows[1], cols[2])


def test_results_independent_of_worker_count(db):
    a = score_matrix(db.templates, workers=1)
    b = score_matrix(db.templates, workers=2)
    set_workers(None)
    assert np.array_equal(a, b)


def test_empty_and_tiny_templates_score_zero():
    t = MinutiaeTemplate(400, 300, (MinutiaPoint(50, 50, 0),))
    u = MinutiaeTemplate(400, 300, ())
    assert match(t, u) == 0 and match(u, u) == 0
    assert match(t, t) <= 1


def test_impostor_pairs_exclude_same_finger(db):
    iu, ju = impostor_pairs(db)
    fid = [t.finger_id for t in db.templates]
    assert all(fid[i] != fid[j] and i < j for i, j in zip(iu, ju))
    n_f = len(db.finger_ids)
    assert iu.size == (n_f * (n_f - 1) // 2) * 4  # two impressions per finger
    assert impostor_scores(db).size == iu.size


def test_thresholds_from_scores_definition():
    rng = np.random.default_rng(0)
    s = rng.integers(0, 30, 5000)
    tab = thresholds_from_scores(s, [0.01, 0.001])
    for t, lam in tab.entries.items():
        assert far_at(s, lam) <= t
        assert lam == 0 or far_at(s, lam - 1) > t
        assert tab.achieved_far[t] == pytest.approx(far_at(s, lam))
    assert sum(score_histogram(s).values()) == s.size


def test_calibration_errors():
    with pytest.raises(CalibrationError):
        thresholds_from_scores(np.arange(50), [0.001])
    with pytest.raises(ParameterError):
        thresholds_from_scores(np.arange(50), [1.5])
    with pytest.raises(CalibrationError):
        ThresholdTable({0.01: 10, 0.001: 5}, {}, 100)


def test_indicator_is_strict():
    assert indicator(11, 10) == 1 and indicator(10, 10) == 0


def test_mp_prevalence_validates_fraction(db):
    with pytest.raises(ParameterError):
        mp_prevalence(db, 5, fraction=0.0)


def test_matcher_config_validation():
    with pytest.raises(ParameterError):
        MatcherConfig(dist_tol_px=0)
    with pytest.raises(ParameterError):
        MatcherConfig(min_edge_len_px=300, max_edge_len_px=200)
    with pytest.raises(ParameterError):
        MatcherConfig(support_fraction=2.0)


# property-based -----------------------------------------------------------------

@st.composite
def templates(draw):
    n = draw(st.integers(0, 25))
    pts, cells = [], set()
    for _ in range(n):
        x, y = draw(st.integers(0, 399)), draw(st.integers(0, 299))
        m = MinutiaPoint(x, y, draw(st.integers(0, 15)), draw(st.sampled_from("EB")))
        if m.cell not in cells:
            cells.add(m.cell)
            pts.append(m)
    return MinutiaeTemplate(400, 300, tuple(pts))


@settings(max_examples=60, deadline=None)
@given(templates(), templates())
def test_symmetry_and_bound(a, b):
    s = match(a, b)
    assert s == match(b, a)
    assert 0 <= s <= min(len(a), len(b))


@settings(max_examples=40, deadline=None)
@given(templates(), st.integers(-15, 15), st.integers(-15, 15))
def test_translation_never_raises_score_above_size(a, dx, dy):
    pts = [m for m in a.minutiae if 0 <= m.x + dx < 400 and 0 <= m.y + dy < 300]
    try:
        b = a.with_minutiae(pts).translated(dx, dy)
    except ParameterError:  # two shifted minutiae landed in one grid cell
        assume(False)
    assert match(a, b) <= len(b)


def test_rotation_by_whole_turn_is_identity():
    rng = np.random.default_rng(4)
    pts = []
    while len(pts) < 20:
        r, ang = 100 * math.sqrt(rng.random()), rng.random() * 2 * math.pi
        m = MinutiaPoint(int(200 + r * math.cos(ang)), int(150 + r * math.sin(ang)), int(rng.integers(16)))
        if all((m.x - p.x) ** 2 + (m.y - p.y) ** 2 >= 14 ** 2 for p in pts):  # no cell clash after turning
            pts.append(m)
    t = MinutiaeTemplate(400, 300, tuple(pts))
    assert t.rotated(16, (200, 150)) == t
    assert match(t, t.rotated(4, (200, 150))) == len(t)
