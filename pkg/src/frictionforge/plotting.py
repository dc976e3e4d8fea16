"""Report figures rendered to PNG with the non-interactive Agg backend."""

from __future__ import annotations

from typing import Dict, Mapping, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .labels import PATTERNS  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(str(path), dpi=110, metadata=_META)
    plt.close(fig)


def plot_far_curve(curves: Mapping[str, Sequence[Tuple[int, float]]], path,
                   thresholds: Mapping[float, int] = None) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for name, curve in curves.items():
        lam = [c[0] for c in curve]
        far = [max(c[1], 1e-6) for c in curve]
        ax.step(lam, far, where="post", label=name)
    for target, lam in sorted((thresholds or {}).items()):
        ax.axhline(target, color="grey", lw=0.6, ls=":")
        ax.axvline(lam, color="grey", lw=0.6, ls=":")
    ax.set_yscale("log")
    ax.set_xlabel("threshold")
    ax.set_ylabel("FAR")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_hill_climb_trace(trace, path) -> None:
    """best_asr against iteration, one line per template of the sequence."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    by_t: Dict[int, list] = {}
    for row in trace:
        by_t.setdefault(row.template, []).append((row.iteration, row.best_asr))
    for t in sorted(by_t):
        it, best = zip(*by_t[t])
        ax.plot(it, best, label=f"template {t}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best ASR")
    if by_t:
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_attack_attempts(reports: Mapping[str, object], path) -> None:
    """Cumulative wASR over attempts for each generator and pattern."""
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.4), sharey=True)
    attempts = np.arange(1, 6)
    for ax, (i, pat) in zip(axes, enumerate(PATTERNS)):
        for name, rep in reports.items():
            ax.plot(attempts, rep.wasr[:, i], marker="o", label=name)
        ax.set_title(pat.slug)
        ax.set_xlabel("attempts")
        ax.set_xticks(attempts)
    axes[0].set_ylabel("wASR")
    axes[0].legend(fontsize=8)
    _save(fig, path)


def plot_confusion(confusion, path, labels=None) -> None:
    c = np.asarray(confusion)
    labels = labels or [p.slug for p in PATTERNS]
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    ax.imshow(c, cmap="Blues")
    for i in range(c.shape[0]):
        for j in range(c.shape[1]):
            ax.text(j, i, str(int(c[i, j])), ha="center", va="center", fontsize=9)
    ax.set_xticks(range(len(labels)), labels, rotation=30)
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    _save(fig, path)
