"""Plain Euclidean k-nearest-neighbour classifier and fold assignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass(frozen=True)
class KnnModel:
    x: np.ndarray
    y: np.ndarray
    k: int
    classes: np.ndarray

    @classmethod
    def fit(cls, x, y, k: int) -> "KnnModel":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        return cls(x, y, int(k), np.unique(y))

    def _neighbours(self, q: np.ndarray) -> np.ndarray:
        d2 = (np.sum(q ** 2, axis=1)[:, None] - 2.0 * q @ self.x.T
              + np.sum(self.x ** 2, axis=1)[None, :])
        k = min(self.k, self.y.size)
        return np.argsort(d2, axis=1, kind="stable")[:, :k]

    def votes(self, q) -> np.ndarray:
        """(n, n_classes) neighbour counts, columns ordered as ``self.classes``."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        nb = self.y[self._neighbours(q)]
        return (nb[:, :, None] == self.classes[None, None, :]).sum(axis=1)

    def predict(self, q) -> np.ndarray:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        nb = self.y[self._neighbours(q)]
        hits = nb[:, :, None] == self.classes[None, None, :]
        counts = hits.sum(axis=1)
        k = nb.shape[1]
        first = np.where(hits.any(axis=1), hits.argmax(axis=1), k)
        # among tied classes the closest neighbour decides
        tied = counts == counts.max(axis=1, keepdims=True)
        return self.classes[np.argmin(np.where(tied, first, k + 1), axis=1)]


def stratified_folds(y, n_folds: int, seed: int = 0) -> List[np.ndarray]:
    """Deterministic stratified k-fold test-index arrays."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=int)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        assignment[idx] = (np.arange(idx.size) + offset) % n_folds
        offset += idx.size
    return [np.flatnonzero(assignment == f) for f in range(n_folds)]
