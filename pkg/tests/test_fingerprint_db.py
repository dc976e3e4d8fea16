import math

import numpy as np
import pytest

from frictionforge.errors import IngestionError, ParameterError
from frictionforge.fingerprint_db import (MinutiaPoint, MinutiaeTemplate, NoiseConfig, PlantSpec, SynthConfig,
                                          crucial_region, format_dataset, load_dataset, load_dataset_json,
                                          parse_dataset, save_dataset, save_dataset_json, synth_dataset,
                                          synth_planted)
from frictionforge.labels import PATTERNS, PatternLabel


def _header(fid=1, imp=1, pattern="whorl"):
    return f"T {fid} {imp} 400 300 500 {pattern}\n"


def _minutiae(n, x0=20):
    return "".join(f"M {x0 + 10 * k} {30 + (k % 5) * 20} {k % 16} E\n" for k in range(n))


def test_text_round_trip(tmp_path):
    d = synth_dataset(3, 2, 2)
    save_dataset(d, tmp_path / "db.txt")
    back = load_dataset(tmp_path / "db.txt")
    assert back.templates == d.templates
    assert format_dataset(back) == format_dataset(d)


def test_json_round_trip(tmp_path):
    d = synth_dataset(4, 1, 2)
    save_dataset_json(d, tmp_path / "db.json")
    assert load_dataset_json(tmp_path / "db.json").templates == d.templates


def test_parser_reports_every_offender_with_line_numbers():
    text = (_header(1) + _minutiae(12) + "M 5000 5 1 E\n"  # line 14: outside
            + _header(2) + _minutiae(12) + "M 21 31 2 E\n"  # line 28: same grid cell as line 15
            + "X nonsense\n"  # line 29
            + _header(1) + _minutiae(12))  # line 30: duplicate id
    with pytest.raises(IngestionError) as err:
        parse_dataset(text)
    lines = [ln for ln, _ in err.value.offenders]
    assert lines == sorted(lines)
    assert {14, 28, 29, 30} <= set(lines)
    assert "line 14" in str(err.value)
    assert err.value.to_dict()["error"] == "ingestion_error"


def test_parser_enforces_minutiae_count_bounds():
    with pytest.raises(IngestionError):
        parse_dataset(_header() + _minutiae(5))
    d = parse_dataset(_header() + _minutiae(5), min_minutiae=5)
    assert len(d.templates[0]) == 5


def test_parser_ignores_comments_and_warns_on_empty():
    d = parse_dataset("# comment\n" + _header() + _minutiae(12))
    assert len(d) == 1 and d.templates[0].pattern is PatternLabel.WHORL
    with pytest.warns(UserWarning):
        assert len(parse_dataset("# nothing\n")) == 0


def test_missing_file_is_an_ingestion_error(tmp_path):
    with pytest.raises(IngestionError):
        load_dataset(tmp_path / "none.txt")


def test_template_invariants():
    with pytest.raises(ParameterError):
        MinutiaeTemplate(400, 300, (MinutiaPoint(10, 10, 0), MinutiaPoint(12, 13, 1)))
    with pytest.raises(ParameterError):
        MinutiaeTemplate(400, 300, (MinutiaPoint(400, 10, 0),))
    with pytest.raises(ParameterError):
        MinutiaPoint(1, 1, 16)
    with pytest.raises(ParameterError):
        MinutiaPoint(1, 1, 0, "X")


def test_crucial_region_geometry():
    t = synth_dataset(0, 1, 1).templates[0]
    cr = crucial_region(t)
    assert (cr.width, cr.height) == (200, 250)
    assert 0 <= cr.x0 and cr.x0 + cr.width <= t.width and 0 <= cr.y0 and cr.y0 + cr.height <= t.height
    for x, y in ((cr.x0 + 4, cr.y0 + 5), (0, 0), (399, 299)):
        sx, sy = cr.snap(x, y)
        assert cr.on_grid(sx, sy)
    small = MinutiaeTemplate(150, 150, ())
    with pytest.raises(ParameterError):
        crucial_region(small)


def test_synthesis_is_seed_deterministic():
    a = synth_planted(9, 3, 2, plants=[PlantSpec("left_loop", 0.5)])
    b = synth_planted(9, 3, 2, plants=[PlantSpec("left_loop", 0.5)])
    assert a.dataset.templates == b.dataset.templates
    assert synth_dataset(10, 3, 2).templates != a.dataset.templates


def test_synthetic_layout_and_bounds():
    cfg = SynthConfig()
    d = synth_dataset(2, 5, 3)
    assert len(d) == 3 * 5 * 3
    assert d.finger_ids == list(range(1, 16))
    for t in d.templates:
        assert t.pattern == PATTERNS[(t.finger_id - 1) // 5]
        t.validate()
        assert len(t) <= cfg.max_count + math.ceil(0.1 * cfg.max_count) + 1  # base plus added spurious points


def test_planted_template_is_shared_by_covered_fingers():
    spec = PlantSpec("right_loop", fraction=0.4, shared=12)
    pd = synth_planted(12, 10, 2, NoiseConfig.zero(), plants=[spec])
    planted = pd.planted[0]
    cov = pd.covered[0]
    assert len(cov) == math.ceil(0.4 * 10)
    assert planted.pattern is PatternLabel.RIGHT_LOOP and planted.finger_id == 31
    pats = pd.dataset.finger_patterns()
    assert all(pats[f] is PatternLabel.RIGHT_LOOP for f in cov)
    pts = {(m.x, m.y) for m in planted.minutiae}
    for t in pd.dataset.templates:
        if t.finger_id in cov:
            assert len(pts & {(m.x, m.y) for m in t.minutiae}) >= 10


def test_noise_and_plant_validation():
    with pytest.raises(ParameterError):
        NoiseConfig(drop_fraction=0.5)
    with pytest.raises(ParameterError):
        NoiseConfig(position_jitter_px=20)
    with pytest.raises(ParameterError):
        PlantSpec("whorl", fraction=0.0)
    with pytest.raises(ParameterError):
        synth_planted(0, 2, 1, plants=[PlantSpec("whorl", 1.0), PlantSpec("whorl", 1.0)])


def test_dataset_helpers():
    d = synth_dataset(1, 2, 2)
    w = d.by_pattern("whorl")
    assert {t.pattern for t in w.templates} == {PatternLabel.WHORL} and len(w) == 4
    assert len(d.subset([0, 1, 1])) == 2
    with pytest.raises(ParameterError):
        type(d)(d.templates + d.templates[:1])
