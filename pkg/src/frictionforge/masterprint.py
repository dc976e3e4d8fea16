"""PatternMasterPrint generation and attack evaluation.

A PatternMasterPrint (PMP) sequence is an ordered list of at most five
minutiae templates meant to be tried one after another against fingers of a
single pattern. Three generators are provided: the top match-rate templates
(independent), greedy coverage rounds (sequential) and hill-climbed synthetic
templates seeded from the sequential ones.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError
from .fingerprint_db import (MAX_MINUTIAE, MIN_MINUTIAE, N_DIR_BINS, UNIT_PX, CrucialRegion,
                             FingerprintDataset, MinutiaPoint, MinutiaeTemplate, crucial_region,
                             format_dataset, parse_dataset)
from .labels import PATTERNS, PatternLabel
from .matcher import Gallery, MatcherConfig, score_matrix

MAX_ATTEMPTS = 5
EXCLUDE_MODES = ("same_finger", "self", "none")
MUTATIONS = ("modify", "add", "replace", "delete")


class PmpKind(str, enum.Enum):
    INDEPENDENT = "independent"
    SEQUENTIAL = "sequential"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class TraceRow:
    template: int  # 1-based position in the sequence
    iteration: int
    mutation: str
    temp_asr: float
    best_asr: float
    accepted: bool


@dataclass(frozen=True)
class PmpSequence:
    templates: Tuple[MinutiaeTemplate, ...]
    kind: PmpKind
    per_template_asr: Tuple[float, ...]
    pattern: Optional[PatternLabel] = None
    trace: Tuple[TraceRow, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        object.__setattr__(self, "per_template_asr", tuple(float(a) for a in self.per_template_asr))
        object.__setattr__(self, "kind", PmpKind(self.kind))
        if self.pattern is not None:
            object.__setattr__(self, "pattern", PatternLabel.parse(self.pattern))
        if len(self.templates) > MAX_ATTEMPTS:
            raise ParameterError(f"a PMP sequence holds at most {MAX_ATTEMPTS} templates")
        if len(self.per_template_asr) != len(self.templates):
            raise ParameterError("per_template_asr needs one value per template")

    def __len__(self):
        return len(self.templates)


def _check_mode(exclude: str) -> None:
    if exclude not in EXCLUDE_MODES:
        raise ParameterError(f"exclude must be one of {EXCLUDE_MODES}, got {exclude!r}")


def _included(probe: MinutiaeTemplate, d_templates: Sequence[MinutiaeTemplate], exclude: str) -> np.ndarray:
    if exclude == "same_finger":
        return np.array([t.finger_id != probe.finger_id for t in d_templates], dtype=bool)
    if exclude == "self":
        return np.array([t.key != probe.key for t in d_templates], dtype=bool)
    return np.ones(len(d_templates), dtype=bool)


def _internal_mask(d: FingerprintDataset, exclude: str) -> np.ndarray:
    """mask[i, j]: template j counts when rating template i of the same dataset."""
    n = len(d)
    if exclude == "same_finger":
        fid = np.array([t.finger_id for t in d.templates])
        return fid[:, None] != fid[None, :]
    if exclude == "self":
        return ~np.eye(n, dtype=bool)
    return np.ones((n, n), dtype=bool)


def match_rate(x: MinutiaeTemplate, d: FingerprintDataset, threshold: int,
               cfg: Optional[MatcherConfig] = None, exclude: str = "same_finger",
               scores: Optional[np.ndarray] = None) -> float:
    """Share of the counted templates of ``d`` that ``x`` matches with score above ``threshold``.

    With the default mode, templates of x's own finger are neither matched nor counted.
    """
    _check_mode(exclude)
    if len(d) == 0:
        raise ParameterError("match_rate needs a non-empty dataset")
    keep = _included(x, d.templates, exclude)
    if not keep.any():
        return 0.0
    if scores is None:
        scores = Gallery(d.templates, cfg).scores(x)
    return float(np.count_nonzero(np.asarray(scores)[keep] > threshold) / keep.sum())


def match_rates(d: FingerprintDataset, threshold: int, scores: np.ndarray, exclude: str = "same_finger",
                active: Optional[np.ndarray] = None) -> np.ndarray:
    """Match rate of every template against the active part of its own dataset."""
    mask = _internal_mask(d, exclude)
    if active is not None:
        mask = mask & active[None, :]
    hits = (scores > threshold) & mask
    denom = mask.sum(axis=1)
    return np.divide(hits.sum(axis=1), denom, out=np.zeros(len(d)), where=denom > 0)


def _order_key(d: FingerprintDataset, rates: np.ndarray, i: int):
    t = d.templates[i]
    return -rates[i], t.finger_id, t.impression_id, i


def _finger_cover(d: FingerprintDataset, threshold: int, scores: np.ndarray, exclude: str):
    """cover[i, k]: template i matches some counted impression of finger ``fingers[k]``."""
    fid = np.array([t.finger_id for t in d.templates])
    fingers = np.unique(fid)
    hits = (scores > threshold) & _internal_mask(d, exclude)
    col = np.searchsorted(fingers, fid)
    cover = np.zeros((len(d), fingers.size), dtype=bool)
    for k in range(fingers.size):
        cover[:, k] = hits[:, col == k].any(axis=1)
    # fingers that take part in the statistics at all for each template
    counted = np.zeros_like(cover)
    mask = _internal_mask(d, exclude)
    for k in range(fingers.size):
        counted[:, k] = mask[:, col == k].any(axis=1)
    return cover, counted, fingers


def _marginal(order: Sequence[int], cover: np.ndarray, counted: np.ndarray) -> List[float]:
    done = np.zeros(cover.shape[1], dtype=bool)
    out = []
    for i in order:
        new = cover[i] & ~done
        denom = max(int(counted[i].sum()), 1)
        out.append(float(new.sum() / denom))
        done |= cover[i]
    return out


def union_coverage(d: FingerprintDataset, indices: Sequence[int], threshold: int, scores: np.ndarray,
                   exclude: str = "same_finger") -> int:
    """Number of distinct fingers matched by any of the given templates."""
    cover, _, _ = _finger_cover(d, threshold, scores, exclude)
    if not len(indices):
        return 0
    return int(cover[list(indices)].any(axis=0).sum())


def _dataset_pattern(d: FingerprintDataset) -> Optional[PatternLabel]:
    pats = {t.pattern for t in d.templates}
    return pats.pop() if len(pats) == 1 else None


def _prepare(d, threshold, cfg, exclude, scores, workers):
    _check_mode(exclude)
    if len(d) < MAX_ATTEMPTS:
        raise ParameterError(f"PMP generation needs at least {MAX_ATTEMPTS} templates, got {len(d)}")
    if scores is None:
        scores = score_matrix(d.templates, cfg=cfg, workers=workers)
    scores = np.asarray(scores)
    if scores.shape != (len(d), len(d)):
        raise ParameterError("score matrix shape does not match the dataset")
    return scores


def independent_pmp(d: FingerprintDataset, threshold: int, cfg: Optional[MatcherConfig] = None,
                    exclude: str = "same_finger", scores: Optional[np.ndarray] = None,
                    workers: Optional[int] = None) -> PmpSequence:
    """The five templates with the highest match rate over the whole dataset."""
    scores = _prepare(d, threshold, cfg, exclude, scores, workers)
    rates = match_rates(d, threshold, scores, exclude)
    order = sorted(range(len(d)), key=lambda i: _order_key(d, rates, i))[:MAX_ATTEMPTS]
    cover, counted, _ = _finger_cover(d, threshold, scores, exclude)
    return PmpSequence(tuple(d.templates[i] for i in order), PmpKind.INDEPENDENT,
                       tuple(_marginal(order, cover, counted)), _dataset_pattern(d))


def sequential_pmp_indices(d: FingerprintDataset, threshold: int, scores: np.ndarray,
                           exclude: str = "same_finger") -> Tuple[List[int], List[float]]:
    n = len(d)
    fid = np.array([t.finger_id for t in d.templates])
    hits = (scores > threshold) & _internal_mask(d, exclude)
    cover, counted, fingers = _finger_cover(d, threshold, scores, exclude)
    active = np.ones(n, dtype=bool)
    chosen: List[int] = []
    asr: List[float] = []
    done = np.zeros(fingers.size, dtype=bool)
    for _ in range(MAX_ATTEMPTS):
        pool = active.copy()
        pool[chosen] = False
        if not pool.any():
            # every template was removed; keep choosing among the unchosen ones
            pool = np.ones(n, dtype=bool)
            pool[chosen] = False
            active = pool.copy()
        rates = match_rates(d, threshold, scores, exclude, active=active)
        cand = np.flatnonzero(pool)
        i = min(cand, key=lambda c: _order_key(d, rates, c))
        chosen.append(int(i))
        new = cover[i] & ~done
        asr.append(float(new.sum() / max(int(counted[i].sum()), 1)))
        done |= cover[i]
        hit_fingers = np.unique(fid[hits[i] & active])
        active &= ~np.isin(fid, hit_fingers)
        active[i] = False
    return chosen, asr


def sequential_pmp(d: FingerprintDataset, threshold: int, cfg: Optional[MatcherConfig] = None,
                   exclude: str = "same_finger", scores: Optional[np.ndarray] = None,
                   workers: Optional[int] = None) -> PmpSequence:
    """Five greedy rounds; after each, the covered fingers and the chosen template leave the pool.

    ``per_template_asr`` holds each round's newly covered share of the fingers.
    """
    scores = _prepare(d, threshold, cfg, exclude, scores, workers)
    chosen, asr = sequential_pmp_indices(d, threshold, scores, exclude)
    return PmpSequence(tuple(d.templates[i] for i in chosen), PmpKind.SEQUENTIAL, tuple(asr),
                       _dataset_pattern(d))


# hill climbing -------------------------------------------------------------

@dataclass(frozen=True)
class HillClimbConfig:
    j_max: int = 500
    plateau: int = 100
    target_asr: float = 1.0
    weights: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)  # modify, add, replace, delete
    seed: int = 0
    min_minutiae: int = MIN_MINUTIAE
    max_minutiae: int = MAX_MINUTIAE

    def __post_init__(self):
        if self.j_max < 0 or self.plateau < 1:
            raise ParameterError("j_max must be >= 0 and plateau >= 1")
        w = tuple(float(x) for x in self.weights)
        if len(w) != 4 or min(w) < 0 or sum(w) <= 0:
            raise ParameterError("weights must be four non-negative numbers with a positive sum")
        object.__setattr__(self, "weights", w)
        if not 0.0 <= self.target_asr <= 1.0:
            raise ParameterError("target_asr must lie in [0, 1]")
        if not 1 <= self.min_minutiae <= self.max_minutiae:
            raise ParameterError("minutiae bounds must satisfy 1 <= min <= max")


@dataclass
class HillClimbState:
    temp_s: MinutiaeTemplate
    best: MinutiaeTemplate
    best_asr: float
    iter: int
    j_max: int
    plateau: int
    rng_seed: Tuple[int, int]
    rng: np.random.Generator = field(repr=False, default=None)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(np.random.SeedSequence(list(self.rng_seed)))


class _Objective:
    """Marginal finger coverage of a probe against a fixed set of still-uncovered fingers."""

    def __init__(self, seed: MinutiaeTemplate, train: FingerprintDataset, covered: set,
                 threshold: int, cfg: MatcherConfig, exclude: str, workers):
        keep = _included(seed, train.templates, exclude)
        counted = {t.finger_id for t, k in zip(train.templates, keep) if k}
        self.denominator = max(len(counted), 1)
        targets = [t for t, k in zip(train.templates, keep) if k and t.finger_id not in covered]
        self.fingers = np.array([t.finger_id for t in targets], dtype=np.int64)
        self.gallery = Gallery(targets, cfg, workers)
        self.threshold = threshold

    def covered(self, probe: MinutiaeTemplate) -> set:
        if not len(self.gallery):
            return set()
        s = self.gallery.scores(probe)
        return set(int(f) for f in np.unique(self.fingers[s > self.threshold]))

    def count(self, probe: MinutiaeTemplate) -> int:
        return len(self.covered(probe))


def _free_grid(cr: CrucialRegion, cells: set) -> List[Tuple[int, int]]:
    return [(int(x), int(y)) for y in cr.grid_y() for x in cr.grid_x()
            if (x // UNIT_PX, y // UNIT_PX) not in cells]


def mutate(t: MinutiaeTemplate, cr: CrucialRegion, kind: str, rng: np.random.Generator,
           min_minutiae: int = MIN_MINUTIAE, max_minutiae: int = MAX_MINUTIAE) -> Optional[MinutiaeTemplate]:
    """Apply one mutation inside the crucial region; ``None`` when it cannot apply."""
    pts = list(t.minutiae)
    cells = {m.cell for m in pts}
    inside = [k for k, m in enumerate(pts) if cr.contains(m.x, m.y)]
    if kind == "modify":
        if not inside:
            return None
        k = inside[int(rng.integers(len(inside)))]
        m = pts[k]
        x, y = cr.snap(m.x, m.y)
        theta = m.theta_bin
        move = int(rng.integers(6))
        if move < 4:
            dx, dy = ((cr.unit_px, 0), (-cr.unit_px, 0), (0, cr.unit_px), (0, -cr.unit_px))[move]
            x, y = x + dx, y + dy
        else:
            theta = (theta + (1 if move == 4 else -1)) % N_DIR_BINS
        if not cr.contains(x, y):
            return None
        cell = (x // UNIT_PX, y // UNIT_PX)
        if cell != m.cell and cell in cells:
            return None
        pts[k] = MinutiaPoint(x, y, theta, m.kind)
    elif kind == "add":
        if len(pts) >= max_minutiae:
            return None
        free = _free_grid(cr, cells)
        if not free:
            return None
        x, y = free[int(rng.integers(len(free)))]
        pts.append(MinutiaPoint(x, y, int(rng.integers(N_DIR_BINS)), "EB"[int(rng.integers(2))]))
    elif kind == "replace":
        if not inside:
            return None
        k = inside[int(rng.integers(len(inside)))]
        old = pts.pop(k)
        free = _free_grid(cr, cells - {old.cell})
        x, y = free[int(rng.integers(len(free)))]
        pts.insert(k, MinutiaPoint(x, y, int(rng.integers(N_DIR_BINS)), old.kind))
    elif kind == "delete":
        if len(pts) <= min_minutiae or not inside:
            return None
        pts.pop(inside[int(rng.integers(len(inside)))])
    else:
        raise ParameterError(f"unknown mutation {kind!r}")
    return t.with_minutiae(pts)


def _climb_one(index: int, seed_t: MinutiaeTemplate, objective: _Objective, cfg: HillClimbConfig,
               trace: List[TraceRow]) -> HillClimbState:
    cr = crucial_region(seed_t)
    probs = np.array(cfg.weights) / sum(cfg.weights)
    best_count = objective.count(seed_t)
    st = HillClimbState(seed_t, seed_t, best_count / objective.denominator, 0, cfg.j_max, 0,
                        (int(cfg.seed), index))
    temp_count = best_count
    trace.append(TraceRow(index, 0, "init", st.best_asr, st.best_asr, True))
    target_count = cfg.target_asr * objective.denominator
    while st.iter < cfg.j_max and st.plateau < cfg.plateau and best_count < target_count - 1e-9:
        st.iter += 1
        kind = MUTATIONS[int(st.rng.choice(4, p=probs))]
        cand = mutate(st.temp_s, cr, kind, st.rng, cfg.min_minutiae, cfg.max_minutiae)
        cand_count = temp_count if cand is None else objective.count(cand)
        accepted = cand_count >= best_count
        if accepted and cand is not None:
            st.temp_s = cand
            temp_count = cand_count
        if cand_count > best_count:
            best_count = cand_count
            st.best = st.temp_s
            st.best_asr = best_count / objective.denominator
            st.plateau = 0
        else:
            st.plateau += 1
        trace.append(TraceRow(index, st.iter, kind if cand is not None else kind + ":noop",
                              cand_count / objective.denominator, st.best_asr, accepted))
    return st


def hill_climb(seeds: PmpSequence, train: FingerprintDataset, threshold: int,
               cfg: Optional[HillClimbConfig] = None, matcher_cfg: Optional[MatcherConfig] = None,
               exclude: str = "same_finger", workers: Optional[int] = None) -> PmpSequence:
    """Random-restart hill climbing from each sequential seed; returns a synthetic sequence.

    Equal-ASR mutations are kept as the working template, while the stored best
    only changes on strict improvement; the returned sequence carries the trace.
    """
    cfg = cfg or HillClimbConfig()
    matcher_cfg = matcher_cfg or MatcherConfig()
    _check_mode(exclude)
    if seeds.kind != PmpKind.SEQUENTIAL:
        raise ParameterError("hill climbing starts from a sequential PMP sequence")
    for t in seeds.templates:
        t.validate(cfg.min_minutiae, cfg.max_minutiae)
        crucial_region(t)
    covered: set = set()
    out, asr, trace = [], [], []
    for i, seed_t in enumerate(seeds.templates, start=1):
        objective = _Objective(seed_t, train, covered, threshold, matcher_cfg, exclude, workers)
        st = _climb_one(i, seed_t, objective, cfg, trace)
        out.append(st.best)
        asr.append(st.best_asr)
        covered |= objective.covered(st.best)
    return PmpSequence(tuple(out), PmpKind.SYNTHETIC, tuple(asr), seeds.pattern, tuple(trace))


def write_trace_csv(trace: Sequence[TraceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["template", "iteration", "mutation", "temp_asr", "best_asr", "accepted"])
        for r in trace:
            w.writerow([r.template, r.iteration, r.mutation, repr(r.temp_asr), repr(r.best_asr), int(r.accepted)])


# attack evaluation ----------------------------------------------------------

@dataclass(frozen=True)
class AsrMatrix:
    """``R[i, j]``: probability that a pattern-i finger is predicted as pattern j.
    ``ASR[j, i]``: success of the pattern-j PMP against pattern-i fingers."""

    R: np.ndarray
    ASR: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.R, dtype=np.float64)
        a = np.asarray(self.ASR, dtype=np.float64)
        if r.shape != (3, 3) or a.shape != (3, 3):
            raise ParameterError("R and ASR must both be 3x3")
        for name, m in (("R", r), ("ASR", a)):
            if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
                raise ParameterError(f"{name} entries must lie in [0, 1]")
        if np.any(np.abs(r.sum(axis=1) - 1.0) > 1e-9):
            raise ParameterError("every row of R must sum to 1")
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "ASR", a)


def wasr(m: AsrMatrix) -> np.ndarray:
    """Weighted attack success per true pattern: sum_j R[i, j] * ASR[j, i]."""
    return np.einsum("ij,ji->i", m.R, m.ASR)


def confusion_to_r(confusion) -> np.ndarray:
    """Row-normalise a 3x3 count matrix; an empty row becomes the identity row."""
    c = np.asarray(confusion, dtype=np.float64)
    if c.shape != (3, 3) or c.min() < 0:
        raise ParameterError("confusion must be a non-negative 3x3 matrix")
    out = np.eye(3)
    sums = c.sum(axis=1)
    nz = sums > 0
    out[nz] = c[nz] / sums[nz, None]
    return out


@dataclass(frozen=True)
class AttackReport:
    asr: np.ndarray  # (attempts, 3, 3) cumulative ASR[j, i]
    wasr: np.ndarray  # (attempts, 3)
    R: np.ndarray

    def to_dict(self) -> dict:
        out = {}
        for i, pat in enumerate(PATTERNS):
            out[pat.slug] = {
                "attempts": [round(float(v), 12) for v in self.wasr[:, i]],
                "wASR": round(float(self.wasr[-1, i]), 12),
                "asr_by_pmp": {q.slug: round(float(self.asr[-1, j, i]), 12) for j, q in enumerate(PATTERNS)},
            }
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def evaluate_attack(pmps: Mapping, test: FingerprintDataset, threshold: int, confusion=None,
                    cfg: Optional[MatcherConfig] = None, workers: Optional[int] = None) -> AttackReport:
    """Cumulative attack success of each pattern's PMP over 1..5 attempts, then weighted by R.

    ``confusion`` is a row-stochastic R (or raw counts, which are normalised);
    the default is the identity, i.e. a perfect pattern classifier.
    """
    seqs = {PatternLabel.parse(k): v for k, v in pmps.items()}
    missing = [p.slug for p in PATTERNS if p not in seqs]
    if missing:
        raise ParameterError(f"PMP sequences missing for patterns: {missing}")
    if any(t.pattern is None for t in test.templates):
        raise ParameterError("every test template needs a pattern label")
    r = np.eye(3) if confusion is None else np.asarray(confusion, dtype=np.float64)
    if r.shape == (3, 3) and np.any(np.abs(r.sum(axis=1) - 1.0) > 1e-9):
        r = confusion_to_r(r)
    fid = np.array([t.finger_id for t in test.templates])
    fingers = np.unique(fid)
    col = np.searchsorted(fingers, fid)
    fpat = np.zeros(fingers.size, dtype=np.int64)
    for t, c in zip(test.templates, col):
        fpat[c] = PATTERNS.index(t.pattern)
    n_pat = np.array([np.count_nonzero(fpat == i) for i in range(3)])
    gallery = Gallery(test.templates, cfg, workers)
    asr = np.zeros((MAX_ATTEMPTS, 3, 3))
    for j, pat in enumerate(PATTERNS):
        hit = np.zeros(fingers.size, dtype=bool)
        templates = list(seqs[pat].templates)
        for k in range(MAX_ATTEMPTS):
            if k < len(templates):
                s = gallery.scores(templates[k])
                ok = (s > threshold) & (fid != templates[k].finger_id)
                hit[np.unique(col[ok])] = True
            for i in range(3):
                if n_pat[i]:
                    asr[k, j, i] = np.count_nonzero(hit & (fpat == i)) / n_pat[i]
    w = np.stack([wasr(AsrMatrix(r, asr[k])) for k in range(MAX_ATTEMPTS)])
    return AttackReport(asr, w, AsrMatrix(r, asr[-1]).R)


# persistence ----------------------------------------------------------------

def save_pmp(seq: PmpSequence, path) -> None:
    """Templates in the text format, with kind, pattern and ASR in ``<path>.json``."""
    path = Path(path)
    ds = FingerprintDataset(seq.templates, f"pmp-{seq.kind.value}")
    path.write_text(format_dataset(ds))
    side = {"format": "frictionforge-pmp", "version": 1, "kind": seq.kind.value,
            "pattern": seq.pattern.slug if seq.pattern is not None else None,
            "per_template_asr": list(seq.per_template_asr),
            "keys": [list(t.key) for t in seq.templates]}
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def load_pmp(path) -> PmpSequence:
    path = Path(path)
    ds = parse_dataset(path.read_text(), name=path.name)
    side = json.loads(Path(str(path) + ".json").read_text())
    by_key = {t.key: t for t in ds.templates}
    try:
        templates = tuple(by_key[tuple(k)] for k in side["keys"])
    except KeyError as exc:
        raise ParameterError(f"sidecar names template {exc} missing from {path}") from None
    return PmpSequence(templates, side["kind"], tuple(side["per_template_asr"]), side.get("pattern"))


# planted attractor ------------------------------------------------------------

ATTRACTOR_MATCHER = MatcherConfig(dist_tol_px=3.0, angle_tol_bins=1.0, max_edge_len_px=450.0)


@dataclass(frozen=True)
class PlantedAttractor:
    """A training set where one grid move of the seed's lone CR minutia lifts coverage 0.2 -> 0.6."""

    seeds: PmpSequence
    train: FingerprintDataset
    threshold: int
    matcher_cfg: MatcherConfig
    lifted: MinutiaeTemplate  # the seed after the known improving move
    moved_index: int  # position of the CR minutia in the seed


def _diagonal_points(rng, cx, cy, count, w, h):
    pts: List[MinutiaPoint] = []
    cells = {(cx // UNIT_PX, cy // UNIT_PX)}
    while len(pts) < count:
        quad = len(pts) % 4
        ang = math.radians(45 + 90 * quad + rng.uniform(-8, 8))
        r = rng.uniform(150, 195)
        x, y = int(round(cx + r * math.cos(ang))), int(round(cy + r * math.sin(ang)))
        m = MinutiaPoint(x, y, int(rng.integers(N_DIR_BINS)))
        if 0 <= x < w and 0 <= y < h and m.cell not in cells:
            cells.add(m.cell)
            pts.append(m)
    return pts


def _attempt_attractor(rng, w, h, n_others, pattern):
    cx, cy = w // 2, h // 2
    others = _diagonal_points(rng, cx, cy, n_others, w, h)
    theta = int(rng.integers(N_DIR_BINS))
    mx, my = cx, cy
    for _ in range(30):
        probe = MinutiaeTemplate(w, h, tuple(others) + (MinutiaPoint(mx, my, theta),))
        cr = crucial_region(probe)
        sx, sy = cr.snap(mx, my)
        if (sx, sy) == (mx, my):
            break
        mx, my = sx, sy
    else:
        return None
    if any(cr.contains(o.x, o.y) for o in others):
        return None
    u = cr.unit_px
    m = MinutiaPoint(mx, my, theta)
    right, down = MinutiaPoint(mx + u, my, theta), MinutiaPoint(mx, my + u, theta)
    if not (cr.contains(right.x, right.y) and cr.contains(down.x, down.y)):
        return None
    seed_pts = tuple(others) + (m,)
    cells = {p.cell for p in seed_pts}
    if right.cell in cells or down.cell in cells:
        return None

    def tpl(pts, fid):
        return MinutiaeTemplate(w, h, tuple(pts), fid, 1, pattern)

    extra = _diagonal_points(rng, cx, cy, 2, w, h)
    fingers = [
        tpl(seed_pts, 1),  # the seed's own finger
        tpl(seed_pts + (right, down), 2),  # matched before and after the move
    ]
    for k, e in enumerate(extra):
        body = tuple(others) + (right, down)
        if e.cell not in {p.cell for p in body}:
            body = body + (e,)
        fingers.append(tpl(body, 3 + k))  # matched only once m has moved
    for k in range(2):
        fingers.append(tpl(_diagonal_points(rng, cx + rng.integers(-40, 41), cy + rng.integers(-40, 41),
                                            n_others + 2, w, h), 5 + k))
    seed = fingers[0]
    lifted = seed.with_minutiae(tuple(others) + (right,))
    return seed, lifted, FingerprintDataset(tuple(fingers), "planted-attractor"), len(others)


def planted_attractor(seed: int = 0, width: int = 500, height: int = 500, n_others: int = 12,
                      pattern: PatternLabel = PatternLabel.WHORL, max_tries: int = 200) -> PlantedAttractor:
    """Build a training set around a seed whose only crucial-region minutia sits one grid
    unit from the position that satisfies two extra fingers.

    The seed covers 1 of the 5 other fingers; moving that minutia right (or down)
    by one unit covers 3 of 5. Random draws are repeated until direct matching
    confirms both levels.
    """
    from .matcher import match

    rng = np.random.default_rng(seed)
    lam = n_others  # score must reach |seed| = n_others + 1
    for _ in range(max_tries):
        got = _attempt_attractor(rng, width, height, n_others, pattern)
        if got is None:
            continue
        s, lifted, train, idx = got
        others = [t for t in train.templates if t.finger_id != s.finger_id]
        before = sum(match(s, t, ATTRACTOR_MATCHER) > lam for t in others)
        after = sum(match(lifted, t, ATTRACTOR_MATCHER) > lam for t in others)
        if before == 1 and after == 3:
            seq = PmpSequence((s,), PmpKind.SEQUENTIAL, (0.2,), pattern)
            return PlantedAttractor(seq, train, lam, ATTRACTOR_MATCHER, lifted, idx)
    raise ParameterError("could not build a planted attractor; try another seed")


__all__ = [
    "MAX_ATTEMPTS", "EXCLUDE_MODES", "MUTATIONS", "PmpKind", "PmpSequence", "TraceRow", "match_rate",
    "match_rates", "union_coverage", "independent_pmp", "sequential_pmp", "sequential_pmp_indices",
    "HillClimbConfig", "HillClimbState", "mutate", "hill_climb", "write_trace_csv", "AsrMatrix", "wasr",
    "confusion_to_r", "AttackReport", "evaluate_attack", "save_pmp", "load_pmp", "PlantedAttractor",
    "planted_attractor", "ATTRACTOR_MATCHER",
]
