"""Minutiae templates, datasets, the text/JSON formats, and a synthetic generator."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IngestionError, ParameterError
from .labels import PATTERNS, PatternLabel

N_DIR_BINS = 16
UNIT_PX = 9  # ridge spacing at 500 dpi; also the grid pitch
DEFAULT_DPI = 500
MIN_MINUTIAE = 12
MAX_MINUTIAE = 80
CR_WIDTH = 200
CR_HEIGHT = 250
KINDS = ("E", "B")  # ridge ending, bifurcation


@dataclass(frozen=True)
class MinutiaPoint:
    x: int
    y: int
    theta_bin: int
    kind: str = "E"

    def __post_init__(self):
        for name in ("x", "y", "theta_bin"):
            v = getattr(self, name)
            if int(v) != v:
                raise ParameterError(f"minutia {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not 0 <= self.theta_bin < N_DIR_BINS:
            raise ParameterError(f"theta_bin {self.theta_bin} outside [0, {N_DIR_BINS})")
        if self.kind not in KINDS:
            raise ParameterError(f"minutia kind must be E or B, got {self.kind!r}")

    @property
    def cell(self) -> Tuple[int, int]:
        return self.x // UNIT_PX, self.y // UNIT_PX


@dataclass(frozen=True)
class MinutiaeTemplate:
    width: int
    height: int
    minutiae: Tuple[MinutiaPoint, ...]
    finger_id: int = 0
    impression_id: int = 0
    pattern: Optional[PatternLabel] = None
    dpi: int = DEFAULT_DPI

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError("template dimensions must be positive")
        pts = tuple(self.minutiae)
        object.__setattr__(self, "minutiae", pts)
        if self.pattern is not None:
            object.__setattr__(self, "pattern", PatternLabel.parse(self.pattern))
        seen = set()
        for m in pts:
            if not (0 <= m.x < self.width and 0 <= m.y < self.height):
                raise ParameterError(f"minutia ({m.x},{m.y}) outside {self.width}x{self.height}")
            if m.cell in seen:
                raise ParameterError(f"two minutiae share grid cell {m.cell}")
            seen.add(m.cell)

    def __len__(self):
        return len(self.minutiae)

    @property
    def key(self) -> Tuple[int, int]:
        return self.finger_id, self.impression_id

    def validate(self, min_minutiae: int = MIN_MINUTIAE, max_minutiae: int = MAX_MINUTIAE) -> None:
        if not min_minutiae <= len(self.minutiae) <= max_minutiae:
            raise ParameterError(
                f"template {self.key} has {len(self.minutiae)} minutiae, outside [{min_minutiae}, {max_minutiae}]")

    def as_array(self) -> np.ndarray:
        """(n, 3) int array of x, y, theta_bin."""
        if not self.minutiae:
            return np.zeros((0, 3), dtype=np.int64)
        return np.array([(m.x, m.y, m.theta_bin) for m in self.minutiae], dtype=np.int64)

    def with_minutiae(self, minutiae: Iterable[MinutiaPoint]) -> "MinutiaeTemplate":
        return replace(self, minutiae=tuple(minutiae))

    def translated(self, dx: int, dy: int) -> "MinutiaeTemplate":
        return self.with_minutiae(MinutiaPoint(m.x + dx, m.y + dy, m.theta_bin, m.kind) for m in self.minutiae)

    def rotated(self, bins: int, center: Optional[Tuple[float, float]] = None) -> "MinutiaeTemplate":
        """Rotate positions by ``bins`` direction quanta about ``center`` (default image centre)."""
        cx, cy = center if center is not None else (self.width / 2.0, self.height / 2.0)
        ang = 2.0 * math.pi * bins / N_DIR_BINS
        c, s = math.cos(ang), math.sin(ang)
        out = []
        for m in self.minutiae:
            dx, dy = m.x - cx, m.y - cy
            out.append(MinutiaPoint(int(round(cx + c * dx - s * dy)), int(round(cy + s * dx + c * dy)),
                                    (m.theta_bin + bins) % N_DIR_BINS, m.kind))
        return self.with_minutiae(out)

    def to_dict(self) -> dict:
        return {
            "finger_id": self.finger_id,
            "impression_id": self.impression_id,
            "width": self.width,
            "height": self.height,
            "dpi": self.dpi,
            "pattern": self.pattern.slug if self.pattern is not None else "unknown",
            "minutiae": [[m.x, m.y, m.theta_bin, m.kind] for m in self.minutiae],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MinutiaeTemplate":
        pattern = None if d.get("pattern") in (None, "unknown") else PatternLabel.parse(d["pattern"])
        return cls(int(d["width"]), int(d["height"]),
                   tuple(MinutiaPoint(int(x), int(y), int(t), str(k)) for x, y, t, k in d["minutiae"]),
                   int(d["finger_id"]), int(d["impression_id"]), pattern, int(d.get("dpi", DEFAULT_DPI)))


@dataclass(frozen=True)
class FingerprintDataset:
    templates: Tuple[MinutiaeTemplate, ...]
    name: str = "dataset"

    def __post_init__(self):
        ts = tuple(self.templates)
        object.__setattr__(self, "templates", ts)
        keys = [t.key for t in ts]
        if len(set(keys)) != len(keys):
            dup = sorted({k for k in keys if keys.count(k) > 1})
            raise ParameterError(f"duplicate (finger_id, impression_id) pairs: {dup}")

    def __len__(self):
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def __getitem__(self, i):
        return self.templates[i]

    @property
    def finger_ids(self) -> List[int]:
        return sorted({t.finger_id for t in self.templates})

    def by_pattern(self, pattern) -> "FingerprintDataset":
        lab = PatternLabel.parse(pattern)
        return FingerprintDataset(tuple(t for t in self.templates if t.pattern == lab), f"{self.name}:{lab.slug}")

    def finger_patterns(self) -> Dict[int, Optional[PatternLabel]]:
        return {t.finger_id: t.pattern for t in self.templates}

    def subset(self, keep: Iterable[int], name: Optional[str] = None) -> "FingerprintDataset":
        idx = sorted(set(keep))
        return FingerprintDataset(tuple(self.templates[i] for i in idx), name or self.name)

    def validate(self, min_minutiae: int = MIN_MINUTIAE, max_minutiae: int = MAX_MINUTIAE) -> None:
        for t in self.templates:
            t.validate(min_minutiae, max_minutiae)

    def to_dict(self) -> dict:
        return {"name": self.name, "templates": [t.to_dict() for t in self.templates]}

    @classmethod
    def from_dict(cls, d: dict) -> "FingerprintDataset":
        return cls(tuple(MinutiaeTemplate.from_dict(t) for t in d["templates"]), d.get("name", "dataset"))


# text format ---------------------------------------------------------------

def format_dataset(d: FingerprintDataset) -> str:
    lines = []
    for t in d.templates:
        pat = t.pattern.slug if t.pattern is not None else "unknown"
        lines.append(f"T {t.finger_id} {t.impression_id} {t.width} {t.height} {t.dpi} {pat}")
        lines.extend(f"M {m.x} {m.y} {m.theta_bin} {m.kind}" for m in t.minutiae)
    return "".join(line + "\n" for line in lines)


def save_dataset(d: FingerprintDataset, path) -> None:
    Path(path).write_text(format_dataset(d))


def parse_dataset(text: str, name: str = "dataset", min_minutiae: int = MIN_MINUTIAE,
                  max_minutiae: int = MAX_MINUTIAE) -> FingerprintDataset:
    offenders: List[Tuple[int, str]] = []
    blocks: List[Tuple[int, dict, List[Tuple[int, MinutiaPoint]]]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "T":
            if len(parts) != 7:
                offenders.append((ln, "template header needs 6 fields"))
                blocks.append((ln, None, []))
                continue
            try:
                head = {"finger_id": int(parts[1]), "impression_id": int(parts[2]),
                        "width": int(parts[3]), "height": int(parts[4]), "dpi": int(parts[5])}
                head["pattern"] = None if parts[6] == "unknown" else PatternLabel.parse(parts[6])
                if head["width"] <= 0 or head["height"] <= 0 or head["dpi"] <= 0:
                    raise ValueError("dimensions and dpi must be positive")
            except ValueError as exc:
                offenders.append((ln, f"bad template header: {exc}"))
                head = None
            blocks.append((ln, head, []))
        elif parts[0] == "M":
            if not blocks:
                offenders.append((ln, "minutia before any template header"))
                continue
            if len(parts) != 5:
                offenders.append((ln, "minutia line needs 4 fields"))
                continue
            try:
                m = MinutiaPoint(int(parts[1]), int(parts[2]), int(parts[3]), parts[4])
            except (ValueError, ParameterError) as exc:
                offenders.append((ln, str(exc)))
                continue
            blocks[-1][2].append((ln, m))
        else:
            offenders.append((ln, f"unknown record type {parts[0]!r}"))

    templates = []
    seen_ids: Dict[Tuple[int, int], int] = {}
    for ln, head, mins in blocks:
        if head is None:
            continue
        key = (head["finger_id"], head["impression_id"])
        if key in seen_ids:
            offenders.append((ln, f"duplicate template id {key} (first on line {seen_ids[key]})"))
            continue
        seen_ids[key] = ln
        ok = True
        cells: Dict[Tuple[int, int], int] = {}
        for mln, m in mins:
            if not (0 <= m.x < head["width"] and 0 <= m.y < head["height"]):
                offenders.append((mln, f"minutia ({m.x},{m.y}) outside {head['width']}x{head['height']}"))
                ok = False
            elif m.cell in cells:
                offenders.append((mln, f"grid cell {m.cell} already used on line {cells[m.cell]}"))
                ok = False
            else:
                cells[m.cell] = mln
        if not min_minutiae <= len(mins) <= max_minutiae:
            offenders.append((ln, f"template has {len(mins)} minutiae, outside [{min_minutiae}, {max_minutiae}]"))
            ok = False
        if ok:
            templates.append(MinutiaeTemplate(head["width"], head["height"], tuple(m for _, m in mins),
                                              head["finger_id"], head["impression_id"], head["pattern"],
                                              head["dpi"]))
    if offenders:
        raise IngestionError(f"{name}: {len(offenders)} invalid record(s)", sorted(offenders))
    if not blocks:
        warnings.warn(f"{name}: no templates found; returning an empty dataset", stacklevel=2)
    return FingerprintDataset(tuple(templates), name)


def load_dataset(path, min_minutiae: int = MIN_MINUTIAE, max_minutiae: int = MAX_MINUTIAE) -> FingerprintDataset:
    p = Path(path)
    if not p.is_file():
        raise IngestionError(f"{p}: no such template file")
    return parse_dataset(p.read_text(), p.stem, min_minutiae, max_minutiae)


def save_dataset_json(d: FingerprintDataset, path) -> None:
    Path(path).write_text(json.dumps(d.to_dict(), indent=1, sort_keys=True) + "\n")


def load_dataset_json(path) -> FingerprintDataset:
    try:
        return FingerprintDataset.from_dict(json.loads(Path(path).read_text()))
    except (ValueError, KeyError, TypeError) as exc:
        raise IngestionError(f"{path}: invalid dataset JSON ({exc})") from exc


# crucial region ------------------------------------------------------------

@dataclass(frozen=True)
class CrucialRegion:
    x0: int
    y0: int
    width: int = CR_WIDTH
    height: int = CR_HEIGHT
    unit_px: int = UNIT_PX

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x0 + self.width and self.y0 <= y < self.y0 + self.height

    def grid_x(self) -> np.ndarray:
        return np.arange(self.x0, self.x0 + self.width, self.unit_px)

    def grid_y(self) -> np.ndarray:
        return np.arange(self.y0, self.y0 + self.height, self.unit_px)

    def on_grid(self, x: int, y: int) -> bool:
        return self.contains(x, y) and (x - self.x0) % self.unit_px == 0 and (y - self.y0) % self.unit_px == 0

    def snap(self, x: int, y: int) -> Tuple[int, int]:
        """Nearest grid point, kept inside the region."""
        gx, gy = self.grid_x(), self.grid_y()
        return int(gx[np.argmin(np.abs(gx - x))]), int(gy[np.argmin(np.abs(gy - y))])


def crucial_region(t: MinutiaeTemplate, width: int = CR_WIDTH, height: int = CR_HEIGHT,
                   unit_px: int = UNIT_PX) -> CrucialRegion:
    if t.width < width or t.height < height:
        raise ParameterError(f"template {t.width}x{t.height} is smaller than the {width}x{height} crucial region")
    if t.minutiae:
        arr = t.as_array()
        cx, cy = arr[:, 0].mean(), arr[:, 1].mean()
    else:
        cx, cy = t.width / 2.0, t.height / 2.0
    x0 = int(math.floor(cx - width / 2.0 + 0.5))
    y0 = int(math.floor(cy - height / 2.0 + 0.5))
    x0 = min(max(x0, 0), t.width - width)
    y0 = min(max(y0, 0), t.height - height)
    return CrucialRegion(x0, y0, width, height, unit_px)


# synthetic generation ------------------------------------------------------

@dataclass(frozen=True)
class NoiseConfig:
    """Per-impression perturbation of a finger's base template."""

    position_jitter_px: int = 4
    theta_jitter_prob: float = 0.2
    drop_fraction: float = 0.1
    add_fraction: float = 0.1

    def __post_init__(self):
        if not 0 <= self.position_jitter_px <= UNIT_PX:
            raise ParameterError(f"position_jitter_px must lie in [0, {UNIT_PX}]")
        for name in ("theta_jitter_prob", "drop_fraction", "add_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if self.drop_fraction > 0.1 or self.add_fraction > 0.1:
            raise ParameterError("drop/add fractions are capped at 10%")

    @classmethod
    def zero(cls) -> "NoiseConfig":
        return cls(0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SynthConfig:
    width: int = 400
    height: int = 300
    min_count: int = 14
    max_count: int = 24
    pool_size: int = 20  # per-pattern shared minutiae positions
    pool_share: float = 0.3  # fraction of each finger drawn from its pattern pool
    margin_px: int = 12

    def __post_init__(self):
        if not MIN_MINUTIAE <= self.min_count <= self.max_count <= MAX_MINUTIAE:
            raise ParameterError("synthetic minutiae counts must lie inside the template bounds")
        if not 0.0 <= self.pool_share <= 1.0:
            raise ParameterError("pool_share must lie in [0, 1]")


@dataclass(frozen=True)
class PlantSpec:
    """A MasterPrint planted into a fraction of one pattern's fingers."""

    pattern: PatternLabel
    fraction: float = 0.3
    n_minutiae: int = 24
    shared: int = 12  # planted minutiae copied into each covered finger

    def __post_init__(self):
        object.__setattr__(self, "pattern", PatternLabel.parse(self.pattern))
        if not 0.0 < self.fraction <= 1.0:
            raise ParameterError("plant fraction must lie in (0, 1]")
        if not 1 <= self.shared <= self.n_minutiae <= MAX_MINUTIAE:
            raise ParameterError("need 1 <= shared <= n_minutiae <= max minutiae")


@dataclass(frozen=True)
class PlantedDataset:
    dataset: FingerprintDataset
    planted: Tuple[MinutiaeTemplate, ...]
    covered: Tuple[Tuple[int, ...], ...]  # finger ids carrying each planted template


def _centre(pattern: PatternLabel, w: int, h: int) -> Tuple[float, float]:
    if pattern == PatternLabel.LEFT_LOOP:
        return 0.43 * w, 0.45 * h
    if pattern == PatternLabel.RIGHT_LOOP:
        return 0.57 * w, 0.45 * h
    return 0.5 * w, 0.5 * h


def flow_bin(pattern: PatternLabel, x: float, y: float, w: int, h: int) -> int:
    """Ridge-flow direction bin of the pattern prior at (x, y)."""
    cx, cy = _centre(pattern, w, h)
    ang = math.atan2(y - cy, x - cx)
    if pattern == PatternLabel.WHORL:
        flow = ang + math.pi / 2  # concentric
    else:
        # loops: ridges enter on one side, recurve around the core, and leave on the same side
        side = -1.0 if pattern == PatternLabel.LEFT_LOOP else 1.0
        flow = ang + math.pi / 2 + side * 0.6 * math.cos(ang)
    return int(round(flow / (2 * math.pi) * N_DIR_BINS)) % N_DIR_BINS


def _sample_position(rng: np.random.Generator, pattern: PatternLabel, cfg: SynthConfig) -> Tuple[int, int]:
    cx, cy = _centre(pattern, cfg.width, cfg.height)
    if pattern == PatternLabel.WHORL:
        sx, sy = 0.17 * cfg.width, 0.2 * cfg.height
    else:
        sx, sy = 0.22 * cfg.width, 0.24 * cfg.height
    lo, hix, hiy = cfg.margin_px, cfg.width - 1 - cfg.margin_px, cfg.height - 1 - cfg.margin_px
    x = int(np.clip(round(rng.normal(cx, sx)), lo, hix))
    y = int(np.clip(round(rng.normal(cy, sy)), lo, hiy))
    return x, y


def _new_minutia(rng, pattern, cfg, pos=None) -> MinutiaPoint:
    x, y = pos if pos is not None else _sample_position(rng, pattern, cfg)
    theta = (flow_bin(pattern, x, y, cfg.width, cfg.height) + int(rng.integers(-1, 2))) % N_DIR_BINS
    kind = KINDS[int(rng.integers(0, 2))]
    return MinutiaPoint(x, y, theta, kind)


def _add_unique(points: List[MinutiaPoint], cells: set, m: MinutiaPoint) -> bool:
    if m.cell in cells:
        return False
    points.append(m)
    cells.add(m.cell)
    return True


def _base_template(rng, pattern, pool: List[MinutiaPoint], cfg: SynthConfig) -> List[MinutiaPoint]:
    n = int(rng.integers(cfg.min_count, cfg.max_count + 1))
    pts: List[MinutiaPoint] = []
    cells: set = set()
    n_pool = min(int(round(cfg.pool_share * n)), len(pool))
    for i in rng.choice(len(pool), size=n_pool, replace=False) if n_pool else []:
        p = pool[int(i)]
        x = int(np.clip(p.x + rng.integers(-6, 7), 0, cfg.width - 1))
        y = int(np.clip(p.y + rng.integers(-6, 7), 0, cfg.height - 1))
        _add_unique(pts, cells, MinutiaPoint(x, y, p.theta_bin, p.kind))
    guard = 0
    while len(pts) < n and guard < 50 * n:
        _add_unique(pts, cells, _new_minutia(rng, pattern, cfg))
        guard += 1
    return pts


def _impression(rng, base: List[MinutiaPoint], pattern, noise: NoiseConfig, cfg: SynthConfig) -> List[MinutiaPoint]:
    n = len(base)
    n_drop = int(rng.integers(0, int(math.floor(noise.drop_fraction * n)) + 1))
    n_add = int(rng.integers(0, int(math.floor(noise.add_fraction * n)) + 1))
    drop = set(rng.choice(n, size=n_drop, replace=False).tolist()) if n_drop else set()
    j = noise.position_jitter_px
    pts: List[MinutiaPoint] = []
    cells: set = set()
    for k, m in enumerate(base):
        # draw the jitter even for dropped points so that impressions stay aligned in the stream
        dx, dy = (int(v) for v in rng.integers(-j, j + 1, size=2)) if j else (0, 0)
        flip = rng.random() < noise.theta_jitter_prob
        step = 1 if rng.random() < 0.5 else -1
        if k in drop:
            continue
        x = int(np.clip(m.x + dx, 0, cfg.width - 1))
        y = int(np.clip(m.y + dy, 0, cfg.height - 1))
        theta = (m.theta_bin + step) % N_DIR_BINS if flip else m.theta_bin
        _add_unique(pts, cells, MinutiaPoint(x, y, theta, m.kind))
    added = guard = 0
    while added < n_add and guard < 50:
        added += _add_unique(pts, cells, _new_minutia(rng, pattern, cfg))
        guard += 1
    while len(pts) < MIN_MINUTIAE:
        _add_unique(pts, cells, _new_minutia(rng, pattern, cfg))
    return pts


def _implant(rng, base: List[MinutiaPoint], planted: Sequence[MinutiaPoint], shared: int) -> List[MinutiaPoint]:
    chosen = [planted[int(i)] for i in sorted(rng.choice(len(planted), size=shared, replace=False))]
    keep = [m for m in base if all(abs(m.x - p.x) > UNIT_PX or abs(m.y - p.y) > UNIT_PX for p in chosen)]
    out = list(chosen)
    cells = {m.cell for m in out}
    for m in keep:
        if len(out) >= MAX_MINUTIAE:
            break
        _add_unique(out, cells, m)
    return out


def synth_planted(seed: int, fingers_per_pattern: int, impressions: int,
                  noise: Optional[NoiseConfig] = None, plants: Sequence[PlantSpec] = (),
                  cfg: Optional[SynthConfig] = None, name: str = "synthetic") -> PlantedDataset:
    """Synthetic dataset with optional planted MasterPrints and their ground-truth coverage.

    Finger ids run 1..3*fingers_per_pattern grouped by pattern; each planted template
    becomes a single-impression finger appended after them.
    """
    if fingers_per_pattern < 1 or impressions < 1:
        raise ParameterError("fingers_per_pattern and impressions must be >= 1")
    noise = noise or NoiseConfig()
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(seed)
    pools = {}
    for pat in PATTERNS:
        pool: List[MinutiaPoint] = []
        cells: set = set()
        while len(pool) < cfg.pool_size:
            _add_unique(pool, cells, _new_minutia(rng, pat, cfg))
        pools[pat] = pool

    bases: Dict[int, Tuple[PatternLabel, List[MinutiaPoint]]] = {}
    fid = 1
    for pat in PATTERNS:
        for _ in range(fingers_per_pattern):
            bases[fid] = (pat, _base_template(rng, pat, pools[pat], cfg))
            fid += 1

    planted_templates, covered_all = [], []
    taken: set = set()
    for spec in plants:
        pts: List[MinutiaPoint] = []
        cells: set = set()
        while len(pts) < spec.n_minutiae:
            _add_unique(pts, cells, _new_minutia(rng, spec.pattern, cfg))
        candidates = [f for f, (p, _) in bases.items() if p == spec.pattern and f not in taken]
        n_cov = int(math.ceil(spec.fraction * fingers_per_pattern))
        if n_cov > len(candidates):
            raise ParameterError("not enough uncovered fingers left for this plant")
        cov = sorted(int(c) for c in rng.choice(candidates, size=n_cov, replace=False))
        for f in cov:
            pat, base = bases[f]
            bases[f] = (pat, _implant(rng, base, pts, spec.shared))
        taken.update(cov)
        planted_templates.append(MinutiaeTemplate(cfg.width, cfg.height, tuple(pts), fid, 1, spec.pattern))
        covered_all.append(tuple(cov))
        fid += 1

    templates = []
    for f in sorted(bases):
        pat, base = bases[f]
        for imp in range(1, impressions + 1):
            pts = _impression(rng, base, pat, noise, cfg)
            templates.append(MinutiaeTemplate(cfg.width, cfg.height, tuple(pts), f, imp, pat))
    templates.extend(planted_templates)
    return PlantedDataset(FingerprintDataset(tuple(templates), name), tuple(planted_templates),
                          tuple(covered_all))


def synth_dataset(seed: int, fingers_per_pattern: int, impressions: int,
                  noise: Optional[NoiseConfig] = None, cfg: Optional[SynthConfig] = None,
                  name: str = "synthetic") -> FingerprintDataset:
    return synth_planted(seed, fingers_per_pattern, impressions, noise, (), cfg, name).dataset


__all__ = [
    "MinutiaPoint", "MinutiaeTemplate", "FingerprintDataset", "CrucialRegion", "NoiseConfig", "SynthConfig",
    "PlantSpec", "PlantedDataset", "crucial_region", "load_dataset", "save_dataset", "parse_dataset",
    "format_dataset", "save_dataset_json", "load_dataset_json", "synth_dataset", "synth_planted", "flow_bin",
    "N_DIR_BINS", "UNIT_PX", "MIN_MINUTIAE", "MAX_MINUTIAE",
]
