"""Finger-level pattern prediction: KNN wide model, Mel-patch deep stand-in, weighted vote."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IngestionError, ParameterError
from .features.bank import FeatureVector
from .features.melpatch import PATCH_BANDS, PATCH_FRAMES, MelPatch
from .knn import KnnModel, stratified_folds
from .labels import PATTERNS, PatternLabel

N_CLASSES = 3
MODEL_FORMAT = "frictionforge-joint-predictor"
MODEL_VERSION = 1
DEEP_KINDS = ("native_linear", "external_file", "null")


@dataclass(frozen=True)
class DeepConfig:
    kind: str = "native_linear"
    learning_rate: float = 2.0
    l2: float = 1e-3
    max_epochs: int = 400
    patience: int = 25
    min_delta: float = 1e-3  # validation-loss gain that counts as progress
    val_fraction: float = 0.2
    scores_path: Optional[str] = None  # for external_file

    def __post_init__(self):
        if self.kind not in DEEP_KINDS:
            raise ParameterError(f"deep kind must be one of {DEEP_KINDS}")
        if self.learning_rate <= 0 or self.l2 < 0:
            raise ParameterError("learning_rate must be > 0 and l2 >= 0")
        if self.max_epochs < 1 or self.patience < 1:
            raise ParameterError("max_epochs and patience must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ParameterError("val_fraction must lie in (0, 1)")
        if self.kind == "external_file" and not self.scores_path:
            raise ParameterError("external_file scorer needs scores_path")


@dataclass(frozen=True)
class ClassifierConfig:
    w_wide: float = 0.5
    w_deep: float = 0.5
    knn_k: int = 5
    deep: Optional[DeepConfig] = None  # None means no deep model
    soft_votes: bool = False
    feature_indices: Optional[Tuple[int, ...]] = None  # 1-based subset, e.g. from selection
    seed: int = 0

    def __post_init__(self):
        if self.w_wide < 0 or self.w_deep < 0 or self.w_wide + self.w_deep <= 0:
            raise ParameterError("weights must be non-negative with a positive sum")
        if int(self.knn_k) != self.knn_k or self.knn_k < 1:
            raise ParameterError("knn_k must be a positive integer")
        if isinstance(self.deep, dict):
            object.__setattr__(self, "deep", DeepConfig(**self.deep) if self.deep else None)
        if self.feature_indices is not None:
            idx = tuple(int(i) for i in self.feature_indices)
            if not idx or any(i < 1 or i > 99 for i in idx) or len(set(idx)) != len(idx):
                raise ParameterError("feature_indices must be unique values in 1..99")
            object.__setattr__(self, "feature_indices", idx)


@dataclass(frozen=True)
class DeepScorer:
    kind: str
    weights: Optional[np.ndarray] = None  # (6144, 3)
    bias: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    external: Optional[Dict[str, np.ndarray]] = None
    epochs_run: int = 0

    @classmethod
    def null(cls) -> "DeepScorer":
        return cls("null")

    def probabilities(self, patches: np.ndarray, segment_ids: Sequence[Optional[str]]) -> np.ndarray:
        n = patches.shape[0]
        if self.kind == "null":
            return np.zeros((n, N_CLASSES))
        if self.kind == "native_linear":
            z = (patches - self.mean) / self.scale
            return _softmax(z @ self.weights + self.bias)
        out = np.empty((n, N_CLASSES))
        for i, sid in enumerate(segment_ids):
            if sid is None or sid not in self.external:
                raise ParameterError(f"no external deep score for segment {sid!r}")
            out[i] = self.external[sid]
        return out

    def votes(self, patches, segment_ids, soft: bool) -> np.ndarray:
        probs = self.probabilities(patches, segment_ids)
        if soft or self.kind == "null":
            return probs
        return _one_hot(np.argmax(probs, axis=1))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(idx: np.ndarray) -> np.ndarray:
    out = np.zeros((idx.size, N_CLASSES))
    out[np.arange(idx.size), idx] = 1.0
    return out


def load_external_scores(path) -> Dict[str, np.ndarray]:
    """Read ``segment_id,score1,score2,score3`` rows; each row must sum to 1 within 1e-6."""
    scores: Dict[str, np.ndarray] = {}
    bad = []
    with open(path, newline="") as fh:
        for ln, row in enumerate(csv.reader(fh), start=1):
            if not row or (ln == 1 and row[0].strip().lower() == "segment_id"):
                continue
            try:
                if len(row) != 4:
                    raise ValueError("expected 4 columns")
                vals = np.array([float(v) for v in row[1:]])
                if np.any(vals < 0) or abs(vals.sum() - 1.0) > 1e-6:
                    raise ValueError("scores must be non-negative and sum to 1")
                if row[0] in scores:
                    raise ValueError(f"duplicate segment id {row[0]}")
                scores[row[0]] = vals
            except ValueError as exc:
                bad.append((ln, str(exc)))
    if bad:
        raise IngestionError(f"{path}: invalid external scores", bad)
    return scores


def _train_linear(x: np.ndarray, y: np.ndarray, cfg: DeepConfig, seed: int) -> DeepScorer:
    """Full-batch gradient descent on softmax cross-entropy, early-stopped on a held-out split."""
    folds = stratified_folds(y, max(2, int(round(1.0 / cfg.val_fraction))), seed)
    val = np.zeros(y.size, dtype=bool)
    val[folds[0]] = True
    if val.all() or not val.any():
        val[:] = False
    train = ~val if val.any() else np.ones(y.size, dtype=bool)
    mean = x[train].mean(axis=0)
    scale = x[train].std(axis=0)
    scale = np.where(scale > 1e-9, scale, 1.0)
    z = (x - mean) / scale
    d = z.shape[1]
    target = _one_hot(y - 1)
    w = np.zeros((d, N_CLASSES))
    b = np.zeros(N_CLASSES)
    lr = cfg.learning_rate / d  # keeps step size independent of input width
    best = (np.inf, w.copy(), b.copy(), 0)
    since = 0
    zt, tt = z[train], target[train]
    zv, tv = (z[val], target[val]) if val.any() else (zt, tt)
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        p = _softmax(zt @ w + b)
        g = (p - tt) / zt.shape[0]
        w -= lr * (zt.T @ g + cfg.l2 * d * w)
        b -= lr * d * g.sum(axis=0)
        pv = _softmax(zv @ w + b)
        loss = float(-np.mean(np.sum(tv * np.log(pv + 1e-12), axis=1)))
        if loss < best[0] - cfg.min_delta:
            best = (loss, w.copy(), b.copy(), epoch)
            since = 0
        else:
            since += 1
            if since >= cfg.patience:
                break
    return DeepScorer("native_linear", best[1], best[2], mean, scale, epochs_run=epoch)


@dataclass(frozen=True)
class JointPredictor:
    w_wide: float
    w_deep: float
    knn_k: int
    wide_model: KnnModel  # holds z-scored training vectors
    mu: np.ndarray
    sd: np.ndarray
    deep_model: DeepScorer
    feature_indices: Optional[Tuple[int, ...]] = None
    soft_votes: bool = False

    def _select(self, x: np.ndarray) -> np.ndarray:
        if self.feature_indices is None:
            return x
        return x[:, [i - 1 for i in self.feature_indices]]

    def wide_votes(self, vectors: np.ndarray) -> np.ndarray:
        q = (self._select(np.atleast_2d(vectors)) - self.mu) / self.sd
        if self.soft_votes:
            v = self.wide_model.votes(q).astype(float)
            full = np.zeros((v.shape[0], N_CLASSES))
            full[:, self.wide_model.classes - 1] = v
            return full / full.sum(axis=1, keepdims=True)
        return _one_hot(self.wide_model.predict(q) - 1)

    def deep_votes(self, patches: np.ndarray, ids) -> np.ndarray:
        return self.deep_model.votes(patches, ids, self.soft_votes)

    def predict_wide(self, vectors) -> np.ndarray:
        q = (self._select(np.atleast_2d(vectors)) - self.mu) / self.sd
        return self.wide_model.predict(q)


def _unpack_segment(seg):
    if len(seg) == 2:
        return seg[0], seg[1], None
    if len(seg) == 3:
        return seg[0], seg[1], seg[2]
    raise ParameterError("segment must be (FeatureVector, MelPatch[, segment_id])")


def fit(training: Sequence[Tuple[FeatureVector, MelPatch, PatternLabel]],
        cfg: Optional[ClassifierConfig] = None) -> JointPredictor:
    cfg = cfg or ClassifierConfig()
    if not training:
        raise ParameterError("training set is empty")
    x = np.vstack([np.asarray(fv.values if isinstance(fv, FeatureVector) else fv, dtype=float)
                   for fv, _, _ in training])
    y = np.array([int(PatternLabel.parse(lab)) for _, _, lab in training])
    counts = np.array([np.sum(y == c) for c in PATTERNS])
    present = counts[counts > 0]
    if present.min() < cfg.knn_k:
        raise ParameterError(f"every class needs at least knn_k={cfg.knn_k} samples, got {counts.tolist()}")
    if cfg.feature_indices is not None:
        x = x[:, [i - 1 for i in cfg.feature_indices]]
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    wide = KnnModel.fit((x - mu) / sd, y, cfg.knn_k)

    deep_cfg = cfg.deep
    if deep_cfg is None or deep_cfg.kind == "null":
        deep = DeepScorer.null()
    elif deep_cfg.kind == "external_file":
        deep = DeepScorer("external_file", external=load_external_scores(deep_cfg.scores_path))
    else:
        patches = np.vstack([_patch_array(p).reshape(1, -1) for _, p, _ in training])
        deep = _train_linear(patches, y, deep_cfg, cfg.seed)
    return JointPredictor(float(cfg.w_wide), float(cfg.w_deep), int(cfg.knn_k), wide, mu, sd, deep,
                          cfg.feature_indices, bool(cfg.soft_votes))


def _patch_array(p) -> np.ndarray:
    return np.asarray(p.grid if isinstance(p, MelPatch) else p, dtype=float)


def finger_scores(p: JointPredictor, segments) -> np.ndarray:
    """Weighted vote totals summed over the three segments."""
    if len(segments) != 3:
        raise ParameterError(f"a finger needs exactly 3 segments, got {len(segments)}")
    parts = [_unpack_segment(s) for s in segments]
    vecs = np.vstack([np.asarray(fv.values if isinstance(fv, FeatureVector) else fv, dtype=float)
                      for fv, _, _ in parts])
    wide = p.wide_votes(vecs)
    if p.w_deep > 0 and p.deep_model.kind != "null":
        patches = np.vstack([_patch_array(pt).reshape(1, -1) for _, pt, _ in parts])
        deep = p.deep_votes(patches, [sid for _, _, sid in parts])
    else:
        deep = np.zeros_like(wide)
    return p.w_wide * wide.sum(axis=0) + p.w_deep * deep.sum(axis=0)


def predict_finger(p: JointPredictor, segments) -> Tuple[PatternLabel, np.ndarray]:
    scores = finger_scores(p, segments)
    return PatternLabel(int(np.argmax(scores)) + 1), scores  # argmax keeps the lowest index on ties


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    wP: float
    wR: float
    f1: float
    confusion: np.ndarray  # rows = true class, columns = predicted

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy, "wP": self.wP, "wR": self.wR, "f1": self.f1,
            "confusion": np.asarray(self.confusion).astype(int).tolist(),
            "labels": [lab.slug for lab in PATTERNS],
        }


def metrics_from_confusion(confusion) -> MetricsReport:
    c = np.asarray(confusion, dtype=float)
    if c.shape != (N_CLASSES, N_CLASSES) or c.sum() <= 0:
        raise ParameterError("confusion must be a non-empty 3x3 count matrix")
    total = c.sum()
    support = c.sum(axis=1)
    predicted = c.sum(axis=0)
    diag = np.diag(c)
    precision = np.divide(diag, predicted, out=np.zeros(N_CLASSES), where=predicted > 0)
    recall = np.divide(diag, support, out=np.zeros(N_CLASSES), where=support > 0)
    weights = support / total
    wp = float(weights @ precision)
    wr = float(weights @ recall)
    f1 = 2 * wp * wr / (wp + wr) if wp + wr > 0 else 0.0
    return MetricsReport(float(diag.sum() / total), wp, wr, float(f1), c.astype(int))


def metrics_from_predictions(y_true, y_pred) -> MetricsReport:
    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    for t, pr in zip(y_true, y_pred):
        conf[int(t) - 1, int(pr) - 1] += 1
    return metrics_from_confusion(conf)


@dataclass(frozen=True)
class LabeledFinger:
    segments: tuple  # three (FeatureVector, MelPatch[, segment_id])
    label: PatternLabel
    finger_id: Optional[str] = None

    def __post_init__(self):
        if len(self.segments) != 3:
            raise ParameterError("a labelled finger carries exactly 3 segments")
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "label", PatternLabel.parse(self.label))


def evaluate(p: JointPredictor, test: Sequence[LabeledFinger]) -> MetricsReport:
    if not test:
        raise ParameterError("test set is empty")
    preds = [int(predict_finger(p, f.segments)[0]) for f in test]
    return metrics_from_predictions([int(f.label) for f in test], preds)


@dataclass(frozen=True)
class CvResult:
    report: MetricsReport
    fold_accuracy: tuple
    predictions: tuple = field(default=())  # (finger index, predicted label)


def cross_validate(fingers: Sequence[LabeledFinger], cfg: Optional[ClassifierConfig] = None,
                   n_folds: int = 10, seed: int = 0) -> CvResult:
    """Stratified k-fold over fingers; every segment of a training finger is a training sample."""
    cfg = cfg or ClassifierConfig()
    y = np.array([int(f.label) for f in fingers])
    if n_folds < 2 or np.unique(y, return_counts=True)[1].min() < n_folds:
        raise ParameterError(f"need n_folds >= 2 and at least {n_folds} fingers per class")
    folds = stratified_folds(y, n_folds, seed)
    preds = np.zeros(y.size, dtype=int)
    fold_acc = []
    for test_idx in folds:
        held = set(test_idx.tolist())
        train = [(s[0], s[1], f.label) for i, f in enumerate(fingers) if i not in held for s in f.segments]
        model = fit(train, cfg)
        for i in test_idx:
            preds[i] = int(predict_finger(model, fingers[i].segments)[0])
        fold_acc.append(float(np.mean(preds[test_idx] == y[test_idx])))
    return CvResult(metrics_from_predictions(y, preds), tuple(fold_acc),
                    tuple((int(i), int(preds[i])) for i in range(y.size)))


# persistence ---------------------------------------------------------------

def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def predictor_to_dict(p: JointPredictor) -> dict:
    deep = p.deep_model
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "w_wide": p.w_wide,
        "w_deep": p.w_deep,
        "knn_k": p.knn_k,
        "soft_votes": p.soft_votes,
        "feature_indices": None if p.feature_indices is None else list(p.feature_indices),
        "zscore": {"mean": _arr(p.mu), "std": _arr(p.sd)},
        "train_vectors": _arr(p.wide_model.x),
        "train_labels": _arr(p.wide_model.y),
        "deep": {
            "kind": deep.kind,
            "weights": _arr(deep.weights),
            "bias": _arr(deep.bias),
            "mean": _arr(deep.mean),
            "scale": _arr(deep.scale),
            "external": None if deep.external is None else {k: v.tolist() for k, v in sorted(deep.external.items())},
            "epochs_run": deep.epochs_run,
        },
    }


def predictor_from_dict(d: dict) -> JointPredictor:
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise IngestionError(f"not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    dd = d["deep"]

    def opt(key):
        return None if dd.get(key) is None else np.asarray(dd[key], dtype=float)

    external = None if dd.get("external") is None else {k: np.asarray(v) for k, v in dd["external"].items()}
    deep = DeepScorer(dd["kind"], opt("weights"), opt("bias"), opt("mean"), opt("scale"), external,
                      int(dd.get("epochs_run", 0)))
    wide = KnnModel.fit(np.asarray(d["train_vectors"], dtype=float), np.asarray(d["train_labels"], dtype=int),
                        int(d["knn_k"]))
    fi = d.get("feature_indices")
    return JointPredictor(float(d["w_wide"]), float(d["w_deep"]), int(d["knn_k"]), wide,
                          np.asarray(d["zscore"]["mean"], dtype=float), np.asarray(d["zscore"]["std"], dtype=float),
                          deep, None if fi is None else tuple(fi), bool(d.get("soft_votes", False)))


def save_predictor(p: JointPredictor, path) -> None:
    with open(path, "w") as fh:
        json.dump(predictor_to_dict(p), fh, sort_keys=True)
        fh.write("\n")


def load_predictor(path) -> JointPredictor:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}: not valid JSON ({exc})") from exc
    return predictor_from_dict(data)


def config_dict(cfg: ClassifierConfig) -> dict:
    out = asdict(cfg)
    if cfg.feature_indices is not None:
        out["feature_indices"] = list(cfg.feature_indices)
    return out


__all__ = [
    "ClassifierConfig", "DeepConfig", "DeepScorer", "JointPredictor", "LabeledFinger", "MetricsReport",
    "CvResult", "fit", "predict_finger", "finger_scores", "evaluate", "cross_validate",
    "metrics_from_confusion", "metrics_from_predictions", "load_external_scores",
    "save_predictor", "load_predictor", "predictor_to_dict", "predictor_from_dict",
    "PATCH_FRAMES", "PATCH_BANDS",
]
