import numpy as np

from frictionforge.masterprint import AttackReport, TraceRow
from frictionforge.plotting import plot_attack_attempts, plot_confusion, plot_far_curve, plot_hill_climb_trace

PNG = b"\x89PNG"


def test_figures_are_written(tmp_path):
    plot_far_curve({"a": [(0, 1.0), (1, 0.1), (2, 0.0)]}, tmp_path / "far.png", {0.01: 2})
    trace = [TraceRow(1, i, "modify", 0.1 * i, 0.1 * i, True) for i in range(5)]
    plot_hill_climb_trace(trace, tmp_path / "hc.png")
    w = np.linspace(0, 0.3, 15).reshape(5, 3)
    plot_attack_attempts({"x": AttackReport(np.zeros((5, 3, 3)), w, np.eye(3))}, tmp_path / "att.png")
    plot_confusion(np.eye(3) * 4, tmp_path / "cm.png")
    for name in ("far", "hc", "att", "cm"):
        assert (tmp_path / f"{name}.png").read_bytes()[:4] == PNG


def test_figures_are_byte_stable(tmp_path):
    for k in range(2):
        plot_confusion(np.array([[3, 1, 0], [0, 4, 0], [1, 0, 3]]), tmp_path / f"{k}.png")
    assert (tmp_path / "0.png").read_bytes() == (tmp_path / "1.png").read_bytes()
