"""Feature-dump CSV and Mel-patch binary files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import IngestionError
from ..labels import PatternLabel
from .bank import FEATURE_NAMES, N_FEATURES, FeatureVector
from .melpatch import PATCH_BANDS, PATCH_FRAMES, MelPatch


def write_feature_csv(path, vectors: Sequence[FeatureVector]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(FEATURE_NAMES) + ["label"])
        for fv in vectors:
            label = fv.label.slug if fv.label is not None else ""
            w.writerow([repr(float(v)) for v in fv.values] + [label])


def read_feature_csv(path) -> List[FeatureVector]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(FEATURE_NAMES) + ["label"]:
            raise IngestionError(f"{path}: header must be f1..f{N_FEATURES},label", [(1, "bad header")])
        bad = []
        for ln, row in enumerate(reader, start=2):
            try:
                label = PatternLabel.parse(row[-1]) if row[-1] else None
                out.append(FeatureVector(np.array(row[:-1], dtype=float), label))
            except (ValueError, IndexError) as exc:
                bad.append((ln, str(exc)))
        if bad:
            raise IngestionError(f"{path}: malformed feature rows", bad)
    return out


def write_patches(path, patches: Sequence[MelPatch], ids: Sequence[str]) -> Path:
    """Write row-major float32 records plus a JSON index next to them; returns the index path."""
    path = Path(path)
    with open(path, "wb") as fh:
        for p in patches:
            fh.write(np.ascontiguousarray(p.grid, dtype="<f4").tobytes())
    index = {
        "format": "float32-le",
        "shape": [PATCH_FRAMES, PATCH_BANDS],
        "order": "row-major",
        "records": [{"id": sid, "offset": i * PATCH_FRAMES * PATCH_BANDS * 4} for i, sid in enumerate(ids)],
    }
    idx_path = path.with_suffix(path.suffix + ".json")
    idx_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return idx_path


def read_patches(path) -> Tuple[List[MelPatch], List[str]]:
    path = Path(path)
    index = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.fromfile(path, dtype="<f4")
    per = PATCH_FRAMES * PATCH_BANDS
    n = len(index["records"])
    if raw.size != n * per:
        raise IngestionError(f"{path}: expected {n} records of {per} floats, found {raw.size} floats")
    grids = raw.reshape(n, PATCH_FRAMES, PATCH_BANDS).astype(np.float64)
    return [MelPatch(g) for g in grids], [r["id"] for r in index["records"]]
