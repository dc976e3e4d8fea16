"""Two-stage feature selection: incremental mRMR, then a KNN wrapper."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ..errors import ParameterError
from ..knn import KnnModel, stratified_folds

N_BINS = 8


@dataclass(frozen=True)
class SelectionResult:
    selected_indices: tuple  # 1-based feature numbers, in selection order
    cv_accuracy_history: tuple
    candidates: tuple = field(default=())  # stage-1 output, 1-based

    def __post_init__(self):
        if len(set(self.selected_indices)) != len(self.selected_indices):
            raise ParameterError("selected indices must be unique")
        if not self.cv_accuracy_history:
            raise ParameterError("accuracy history must not be empty")

    @property
    def zero_based(self) -> List[int]:
        return [i - 1 for i in self.selected_indices]


def zscore(x: np.ndarray):
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    return (x - mu) / sd


def equal_frequency_bins(col: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    """Quantile binning; tied values always share a bin."""
    edges = np.quantile(col, np.arange(1, n_bins) / n_bins)
    return np.searchsorted(edges, col, side="right")


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """MI (nats) between two discrete integer-coded variables."""
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))


def mrmr_rank(x: np.ndarray, y: np.ndarray, k: int) -> List[int]:
    """Greedy relevance-minus-mean-redundancy order of ``k`` zero-based columns.

    Features are z-scored and quantile-binned first; ties go to the lowest index.
    """
    binned = np.column_stack([equal_frequency_bins(c) for c in zscore(x).T])
    n_feat = binned.shape[1]
    relevance = np.array([mutual_information(binned[:, j], y) for j in range(n_feat)])
    chosen = [int(np.argmax(relevance))]
    redundancy = np.zeros(n_feat)
    remaining = np.ones(n_feat, dtype=bool)
    remaining[chosen[0]] = False
    while len(chosen) < k and remaining.any():
        last = chosen[-1]
        for j in np.flatnonzero(remaining):
            redundancy[j] += mutual_information(binned[:, j], binned[:, last])
        score = np.where(remaining, relevance - redundancy / len(chosen), -np.inf)
        best = int(np.argmax(score))
        chosen.append(best)
        remaining[best] = False
    return chosen


def cv_accuracy(x: np.ndarray, y: np.ndarray, features: Sequence[int], folds: List[np.ndarray],
                knn_k: int) -> float:
    correct = 0
    for test_idx in folds:
        train = np.ones(y.size, dtype=bool)
        train[test_idx] = False
        model = KnnModel.fit(x[np.ix_(train, features)], y[train], knn_k)
        correct += int(np.sum(model.predict(x[np.ix_(test_idx, features)]) == y[test_idx]))
    return correct / y.size


def _permutation_ceiling(x, y, pool, folds, knn_k, seed, n_perm) -> float:
    """Best single-feature CV accuracy reached under any of ``n_perm`` label shuffles."""
    rng = np.random.default_rng([seed, 0x5E1EC7])
    ceiling = 0.0
    for _ in range(n_perm):
        yp = y[rng.permutation(y.size)]
        ceiling = max(ceiling, max(cv_accuracy(x, yp, [c], folds, knn_k) for c in pool))
    return ceiling


def mrmr_select(dataset, k_candidates: int = 20, cv_folds: int = 5, knn_k: int = 5,
                seed: int = 0, n_permutations: int = 19) -> SelectionResult:
    """Select features from labelled :class:`FeatureVector` objects (or an (X, y) pair).

    Stage 2 is sequential forward selection over the stage-1 candidates with
    stratified k-fold KNN accuracy, starting from the majority-class rate; it
    stops as soon as no candidate strictly improves the accuracy. The first
    step must also beat every one of ``n_permutations`` label-permuted replays
    of itself, otherwise nothing is selected and the history is the chance rate.
    """
    if isinstance(dataset, tuple):
        x, y = np.asarray(dataset[0], dtype=float), np.asarray(dataset[1])
    else:
        if any(fv.label is None for fv in dataset):
            raise ParameterError("every feature vector needs a label for selection")
        x = np.vstack([fv.values for fv in dataset])
        y = np.array([int(fv.label) for fv in dataset])
    if not (1 <= k_candidates <= x.shape[1]):
        raise ParameterError(f"k_candidates must lie in [1, {x.shape[1]}]")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < 3:
        raise ParameterError("need at least 3 samples per class")
    if counts.min() < cv_folds:
        raise ParameterError(f"class {classes[np.argmin(counts)]} has fewer than {cv_folds} samples")

    candidates = mrmr_rank(x, y, k_candidates)
    xs = zscore(x)
    folds = stratified_folds(y, cv_folds, seed)

    selected: List[int] = []
    best_acc = float(counts.max() / y.size)
    history: List[float] = []
    pool = list(candidates)
    while pool:
        scores = [cv_accuracy(xs, y, selected + [c], folds, knn_k) for c in pool]
        i = int(np.argmax(scores))  # first maximum keeps mRMR order as tie-break
        if scores[i] <= best_acc:
            break
        if not selected and n_permutations > 0:
            if scores[i] <= _permutation_ceiling(xs, y, pool, folds, knn_k, seed, n_permutations):
                break
        best_acc = float(scores[i])
        selected.append(pool.pop(i))
        history.append(best_acc)
    if not history:
        history.append(best_acc)
    return SelectionResult(tuple(c + 1 for c in selected), tuple(history),
                           tuple(c + 1 for c in candidates))
