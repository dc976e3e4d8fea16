import json

import numpy as np
import pytest

from frictionforge.errors import ParameterError
from frictionforge.fingerprint_db import (FingerprintDataset, MinutiaPoint, MinutiaeTemplate, PlantSpec,
                                          crucial_region, synth_planted)
from frictionforge.labels import PATTERNS, PatternLabel
from frictionforge.masterprint import (AsrMatrix, HillClimbConfig, PmpKind, PmpSequence, confusion_to_r,
                                       evaluate_attack, hill_climb, independent_pmp, load_pmp, match_rate,
                                       mutate, save_pmp, sequential_pmp, union_coverage, wasr,
                                       write_trace_csv)
from frictionforge.matcher import match, score_matrix


@pytest.fixture(scope="module")
def small_db():
    pd = synth_planted(21, 6, 2, plants=[PlantSpec("whorl", fraction=0.5)])
    return pd


@pytest.fixture(scope="module")
def small_scores(small_db):
    return score_matrix(small_db.dataset.templates)


def _rate_oracle(x, d, lam, exclude):
    counted = [t for t in d.templates
               if not (exclude == "same_finger" and t.finger_id == x.finger_id)
               and not (exclude == "self" and t.key == x.key)]
    return sum(match(x, t) > lam for t in counted) / len(counted)


@pytest.mark.parametrize("exclude", ["same_finger", "self", "none"])
def test_match_rate_equals_enumeration(small_db, exclude):
    d = small_db.dataset
    for x in d.templates[::5]:
        assert match_rate(x, d, 8, exclude=exclude) == pytest.approx(_rate_oracle(x, d, 8, exclude))


def test_match_rate_rejects_unknown_mode(small_db):
    with pytest.raises(ParameterError):
        match_rate(small_db.dataset.templates[0], small_db.dataset, 8, exclude="nobody")


def test_independent_sorted_by_rate_with_tie_break(small_db, small_scores):
    d = small_db.dataset
    seq = independent_pmp(d, 8, scores=small_scores)
    assert seq.kind is PmpKind.INDEPENDENT and len(seq) == 5
    rates = [_rate_oracle(t, d, 8, "same_finger") for t in seq.templates]
    assert rates == sorted(rates, reverse=True)
    for a, b, ra, rb in zip(seq.templates, seq.templates[1:], rates, rates[1:]):
        if ra == rb:
            assert a.key < b.key


def test_sequential_marginals_sum_to_union(small_db, small_scores):
    d = small_db.dataset
    n_other = len(d.finger_ids) - 1
    for fn in (independent_pmp, sequential_pmp):
        seq = fn(d, 8, scores=small_scores)
        idx = [d.templates.index(t) for t in seq.templates]
        union = union_coverage(d, idx, 8, small_scores)
        assert sum(seq.per_template_asr) == pytest.approx(union / n_other)


def test_sequential_round_one_matches_independent(small_db, small_scores):
    d = small_db.dataset
    assert (independent_pmp(d, 8, scores=small_scores).templates[0]
            == sequential_pmp(d, 8, scores=small_scores).templates[0])


def test_sequential_never_repeats_a_template(small_db, small_scores):
    seq = sequential_pmp(small_db.dataset, 40, scores=small_scores)  # nothing matches at this level
    assert len({t.key for t in seq.templates}) == 5


def test_pmp_needs_five_templates():
    d = synth_planted(1, 1, 1).dataset.subset([0, 1, 2])
    with pytest.raises(ParameterError):
        independent_pmp(d, 5)


def test_pmp_sequence_validation():
    t = synth_planted(1, 1, 1).dataset.templates[0]
    with pytest.raises(ParameterError):
        PmpSequence((t,) * 6, PmpKind.SEQUENTIAL, (0.0,) * 6)
    with pytest.raises(ParameterError):
        PmpSequence((t,), PmpKind.SEQUENTIAL, (0.0, 0.1))


# mutations --------------------------------------------------------------------

def _template(n, seed=0):
    rng = np.random.default_rng(seed)
    pts, cells = [], set()
    while len(pts) < n:
        m = MinutiaPoint(int(rng.integers(100, 300)), int(rng.integers(40, 260)), int(rng.integers(16)))
        if m.cell not in cells:
            cells.add(m.cell)
            pts.append(m)
    return MinutiaeTemplate(400, 300, tuple(pts), 1, 1)


def test_mutation_bounds_are_no_ops():
    rng = np.random.default_rng(0)
    t = _template(20)
    cr = crucial_region(t)
    assert mutate(t, cr, "add", rng, 12, 20) is None
    assert mutate(t, cr, "delete", rng, 20, 80) is None
    with pytest.raises(ParameterError):
        mutate(t, cr, "teleport", rng)


def test_mutations_stay_in_region_and_change_one_thing():
    rng = np.random.default_rng(1)
    t = _template(20)
    cr = crucial_region(t)
    for kind, delta in (("add", 1), ("delete", -1), ("replace", 0), ("modify", 0)):
        for _ in range(20):
            out = mutate(t, cr, kind, rng)
            if out is None:
                continue
            assert len(out) - len(t) == delta
            new = set(out.minutiae) - set(t.minutiae)
            assert len(new) <= 1
            for m in new:
                assert cr.on_grid(m.x, m.y)


def test_hill_climb_config_validation():
    with pytest.raises(ParameterError):
        HillClimbConfig(weights=(0, 0, 0, 0))
    with pytest.raises(ParameterError):
        HillClimbConfig(plateau=0)
    with pytest.raises(ParameterError):
        HillClimbConfig(target_asr=1.5)


def test_hill_climb_requires_sequential_seeds(small_db, small_scores):
    d = small_db.dataset
    ind = independent_pmp(d, 8, scores=small_scores)
    with pytest.raises(ParameterError):
        hill_climb(ind, d, 8)


def test_hill_climb_budget_and_trace(small_db, small_scores, tmp_path):
    d = small_db.dataset
    seeds = sequential_pmp(d, 8, scores=small_scores)
    res = hill_climb(seeds, d, 8, HillClimbConfig(j_max=15, plateau=5, seed=3))
    assert res.kind is PmpKind.SYNTHETIC and len(res) == len(seeds)
    for k in range(1, len(seeds) + 1):
        rows = [r for r in res.trace if r.template == k]
        assert rows[0].mutation == "init" and len(rows) <= 16
        assert all(b.best_asr >= a.best_asr for a, b in zip(rows, rows[1:]))
    # the climbed template never does worse than its seed on the first slot
    assert res.per_template_asr[0] >= seeds.per_template_asr[0] - 1e-12
    write_trace_csv(res.trace, tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("template,iteration") and len(lines) == len(res.trace) + 1


def test_target_asr_stops_immediately(small_db, small_scores):
    d = small_db.dataset
    seeds = sequential_pmp(d, 8, scores=small_scores)
    res = hill_climb(seeds, d, 8, HillClimbConfig(target_asr=0.0))
    assert all(r.mutation == "init" for r in res.trace)


# attack evaluation --------------------------------------------------------------

def test_wasr_and_matrix_validation():
    r = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.2, 0.3, 0.5]])
    a = np.arange(9).reshape(3, 3) / 10.0
    np.testing.assert_allclose(wasr(AsrMatrix(r, a)), [0.5 * 0.0 + 0.5 * 0.3, 0.4, 0.2 * 0.2 + 0.3 * 0.5 + 0.5 * 0.8])
    with pytest.raises(ParameterError):
        AsrMatrix(np.ones((3, 3)), a)
    with pytest.raises(ParameterError):
        AsrMatrix(np.eye(3), a * 20)


def test_confusion_to_r_normalises_and_fills_empty_rows():
    r = confusion_to_r([[2, 2, 0], [0, 0, 0], [1, 0, 3]])
    np.testing.assert_allclose(r, [[0.5, 0.5, 0], [0, 1, 0], [0.25, 0, 0.75]])


def _attack_oracle(pmps, test, lam, r):
    fingers = sorted({t.finger_id for t in test.templates})
    fpat = {t.finger_id: t.pattern for t in test.templates}
    asr = np.zeros((5, 3, 3))
    for j, pat in enumerate(PATTERNS):
        hit = set()
        for k in range(5):
            if k < len(pmps[pat]):
                x = pmps[pat].templates[k]
                for t in test.templates:
                    if t.finger_id != x.finger_id and match(x, t) > lam:
                        hit.add(t.finger_id)
            for i, q in enumerate(PATTERNS):
                of_q = [f for f in fingers if fpat[f] == q]
                asr[k, j, i] = sum(f in hit for f in of_q) / len(of_q)
    w = np.array([[sum(r[i, j] * asr[k, j, i] for j in range(3)) for i in range(3)] for k in range(5)])
    return asr, w


def test_evaluate_attack_matches_enumeration(small_db, small_scores):
    train = small_db.dataset
    test = synth_planted(77, 5, 2).dataset
    pmps = {p: sequential_pmp(train.by_pattern(p), 7) for p in PATTERNS}
    r = confusion_to_r([[8, 1, 1], [2, 7, 1], [0, 1, 9]])
    rep = evaluate_attack(pmps, test, 7, r)
    asr, w = _attack_oracle(pmps, test, 7, r)
    np.testing.assert_allclose(rep.asr, asr, atol=1e-12)
    np.testing.assert_allclose(rep.wasr, w, atol=1e-12)
    body = rep.to_dict()
    assert set(body) == {p.slug for p in PATTERNS}
    for i, p in enumerate(PATTERNS):
        assert len(body[p.slug]["attempts"]) == 5
        assert body[p.slug]["wASR"] == pytest.approx(w[-1, i])
        att = body[p.slug]["attempts"]
        assert all(b >= a - 1e-12 for a, b in zip(att, att[1:]))


def test_evaluate_attack_requires_every_pattern(small_db):
    test = synth_planted(77, 2, 1).dataset
    pmps = {PatternLabel.WHORL: sequential_pmp(small_db.dataset.by_pattern("whorl"), 7)}
    with pytest.raises(ParameterError):
        evaluate_attack(pmps, test, 7)


def test_pmp_round_trip(small_db, small_scores, tmp_path):
    seq = sequential_pmp(small_db.dataset, 8, scores=small_scores)
    save_pmp(seq, tmp_path / "p.txt")
    side = json.loads((tmp_path / "p.txt.json").read_text())
    assert side["kind"] == "sequential" and len(side["keys"]) == 5
    back = load_pmp(tmp_path / "p.txt")
    assert back.templates == seq.templates
    assert back.per_template_asr == seq.per_template_asr and back.kind == seq.kind


def test_load_pmp_detects_missing_template(small_db, small_scores, tmp_path):
    seq = sequential_pmp(small_db.dataset, 8, scores=small_scores)
    save_pmp(seq, tmp_path / "p.txt")
    side = json.loads((tmp_path / "p.txt.json").read_text())
    side["keys"][0] = [999, 9]
    (tmp_path / "p.txt.json").write_text(json.dumps(side))
    with pytest.raises(ParameterError):
        load_pmp(tmp_path / "p.txt")
