"""Command-line entry point: ``frictionforge <subcommand> --out DIR ...``.

Every subcommand writes its artifacts plus ``effective_config.yaml`` and
``run.json`` (seed, versions, arguments) into the output directory. Errors
end the process with a non-zero status and a JSON object on stderr (also
saved as ``error.json`` when the output directory exists).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import traceback
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import config as conf
from .errors import FrictionForgeError, IngestionError, ParameterError
from .labels import PATTERNS, PatternLabel

EXIT_MODULE_ERROR = 2
EXIT_INTERNAL_ERROR = 3


# helpers --------------------------------------------------------------------

def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _versions() -> dict:
    import matplotlib
    import numba
    import scipy
    import yaml
    return {"frictionforge": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "matplotlib": matplotlib.__version__,
            "pyyaml": yaml.__version__}


def _expand_wavs(items: Sequence[str]) -> List[Path]:
    out: List[Path] = []
    for it in items:
        p = Path(it)
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() == ".wav"))
        elif p.exists():
            out.append(p)
        else:
            raise IngestionError(f"input {it} does not exist")
    if not out:
        raise IngestionError("no WAV inputs given")
    return out


def _read_labels(path) -> Dict[str, PatternLabel]:
    """CSV ``name,pattern``; ``name`` is a file stem (a recording or a segment)."""
    labels: Dict[str, PatternLabel] = {}
    bad = []
    with open(path, newline="") as fh:
        for ln, row in enumerate(csv.reader(fh), start=1):
            if not row or (ln == 1 and row[0].strip().lower() in ("name", "file", "source")):
                continue
            try:
                labels[Path(row[0].strip()).stem] = PatternLabel.parse(row[1])
            except (ValueError, IndexError) as exc:
                bad.append((ln, str(exc)))
    if bad:
        raise IngestionError(f"{path}: malformed label rows", bad)
    return labels


def _label_for(stem: str, labels: Dict[str, PatternLabel]) -> Optional[PatternLabel]:
    if stem in labels:
        return labels[stem]
    source = stem.split("_seg")[0]
    return labels.get(source)


def _finger_of(segment_id: str) -> str:
    return segment_id.rsplit("_seg", 1)[0]


def _load_db(path):
    from .fingerprint_db import load_dataset, load_dataset_json
    return load_dataset_json(path) if str(path).endswith(".json") else load_dataset(path)


def _threshold(args, cfg, db, matcher_cfg):
    from .matcher import calibrate_far
    if args.threshold is not None:
        return int(args.threshold), None
    far = args.far if args.far is not None else cfg["calibration"]["attack_far"]
    table = calibrate_far(db, [far], matcher_cfg, cfg["workers"])
    return table.entries[far], table


def _patterns_arg(args) -> List[PatternLabel]:
    if getattr(args, "pattern", None):
        return [PatternLabel.parse(args.pattern)]
    return list(PATTERNS)


# audio ----------------------------------------------------------------------

def _prep_segment(seg, cfg):
    from .audio_prep import compensate_noise, highpass_filter, FrictionSegment
    clip = highpass_filter(seg.waveform, cfg["highpass"]["cutoff_hz"], cfg["highpass"]["taps"])
    if cfg["noise_compensation"]["enabled"]:
        clip = compensate_noise(clip, cfg["noise_compensation"]["frame_len"], cfg["noise_compensation"]["hop"])
    return FrictionSegment(seg.start_sample, seg.end_sample, clip, seg.source)


def cmd_segment(args, cfg, out: Path) -> dict:
    from .audio_prep import segment_friction
    from .wavio import export_segments, manifest_entries, read_wav
    seg_cfg = conf.segmenter_config(cfg)
    manifest = []
    for wav in _expand_wavs(args.inputs):
        clip = read_wav(wav)
        segs = segment_friction(clip, seg_cfg, source=wav.stem)
        export_segments(segs, out / "segments", wav.stem)
        manifest.extend(manifest_entries(segs, wav.name))
    _write_json(out / "manifest.json", manifest)
    return {"segments": len(manifest)}


def cmd_augment(args, cfg, out: Path) -> dict:
    from .audio_prep import AUGMENTATIONS, FrictionSegment, augment_corpus
    from .wavio import read_wav, write_wav
    wavs = _expand_wavs(args.inputs)
    segs = [FrictionSegment.from_clip(read_wav(w), w.stem) for w in wavs]
    aug = augment_corpus(segs)
    names = [f"{kind}{'' if arg is None else arg}" for kind, arg in AUGMENTATIONS]
    (out / "augmented").mkdir(exist_ok=True)
    index = []
    for k, seg in enumerate(aug):
        src = wavs[k // len(AUGMENTATIONS)].stem
        name = f"{src}_{names[k % len(AUGMENTATIONS)]}.wav"
        write_wav(out / "augmented" / name, seg.waveform)
        index.append({"file": name, "source": src, "augmentation": names[k % len(AUGMENTATIONS)],
                      "samples": len(seg.waveform)})
    _write_json(out / "augmented.json", index)
    return {"inputs": len(segs), "outputs": len(aug)}


def _segments_from_wavs(args, cfg):
    from .audio_prep import FrictionSegment
    from .wavio import read_wav
    wavs = _expand_wavs(args.inputs)
    return [(w.stem, _prep_segment(FrictionSegment.from_clip(read_wav(w), w.stem), cfg)) for w in wavs]


def cmd_features(args, cfg, out: Path) -> dict:
    from .features import extract_features, write_feature_csv
    labels = _read_labels(args.labels) if args.labels else {}
    fixed = PatternLabel.parse(args.label) if args.label else None
    segs = _segments_from_wavs(args, cfg)
    vecs = [extract_features(s, fixed or _label_for(sid, labels)) for sid, s in segs]
    write_feature_csv(out / "features.csv", vecs)
    _write_json(out / "segment_ids.json", [sid for sid, _ in segs])
    return {"vectors": len(vecs)}


def cmd_melpatch(args, cfg, out: Path) -> dict:
    from .features import mel_patch, write_patches
    segs = _segments_from_wavs(args, cfg)
    write_patches(out / "patches.bin", [mel_patch(s) for _, s in segs], [sid for sid, _ in segs])
    return {"patches": len(segs)}


def _load_training(args):
    from .features import read_feature_csv, read_patches
    vecs = read_feature_csv(args.features)
    patches, ids = read_patches(args.patches)
    if len(vecs) != len(patches):
        raise IngestionError(f"{len(vecs)} feature rows but {len(patches)} Mel patches")
    return vecs, patches, ids


def _selection_indices(path) -> Optional[Tuple[int, ...]]:
    if not path:
        return None
    return tuple(json.loads(Path(path).read_text())["selected_indices"])


def cmd_select(args, cfg, out: Path) -> dict:
    from .features import mrmr_select, read_feature_csv
    s = cfg["selection"]
    res = mrmr_select(read_feature_csv(args.features), s["k_candidates"], s["cv_folds"], s["knn_k"],
                      cfg["seed"], s["n_permutations"])
    body = {"selected_indices": list(res.selected_indices), "cv_accuracy_history": list(res.cv_accuracy_history),
            "candidates": list(res.candidates)}
    _write_json(out / "selection.json", body)
    return {"selected": len(res.selected_indices)}


def cmd_fit(args, cfg, out: Path) -> dict:
    from .pattern_classify import fit, save_predictor
    vecs, patches, ids = _load_training(args)
    if any(v.label is None for v in vecs):
        raise ParameterError("fit needs a label on every feature row")
    model = fit([(v, p, v.label) for v, p in zip(vecs, patches)],
                conf.classifier_config(cfg, _selection_indices(args.selection)))
    save_predictor(model, out / "model.json")
    return {"training_segments": len(vecs)}


def _group_fingers(ids, items):
    groups: Dict[str, list] = {}
    for sid, item in zip(ids, items):
        groups.setdefault(_finger_of(sid), []).append((sid, item))
    return groups


def cmd_predict(args, cfg, out: Path) -> dict:
    from .pattern_classify import load_predictor, predict_finger
    model = load_predictor(args.model)
    vecs, patches, ids = _load_training(args)
    rows, skipped = [], []
    for finger, items in sorted(_group_fingers(ids, zip(vecs, patches)).items()):
        if len(items) < 3:
            skipped.append(finger)
            continue
        segs = [(v, p, sid) for sid, (v, p) in items[:3]]
        label, scores = predict_finger(model, segs)
        rows.append({"finger": finger, "predicted": label.slug, "scores": [float(s) for s in scores]})
    _write_json(out / "predictions.json", {"predictions": rows, "skipped_fingers": skipped})
    return {"fingers": len(rows), "skipped": len(skipped)}


def _labeled_fingers(vecs, patches, ids):
    from .pattern_classify import LabeledFinger
    fingers, skipped = [], []
    for finger, items in sorted(_group_fingers(ids, zip(vecs, patches)).items()):
        labs = {v.label for _, (v, _) in items}
        if len(items) < 3 or None in labs or len(labs) != 1:
            skipped.append(finger)
            continue
        fingers.append(LabeledFinger(tuple((v, p, sid) for sid, (v, p) in items[:3]), labs.pop(), finger))
    return fingers, skipped


def _write_confusion(path, confusion) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\predicted"] + [p.slug for p in PATTERNS])
        for p, row in zip(PATTERNS, np.asarray(confusion)):
            w.writerow([p.slug] + [int(v) for v in row])


def _read_confusion(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    try:
        return np.array([[float(v) for v in r[1:4]] for r in rows[1:4]])
    except (ValueError, IndexError):
        raise IngestionError(f"{path}: expected a 3x3 confusion CSV with a header row") from None


def _cross_validate(fingers, cfg, feature_indices=None):
    from .pattern_classify import cross_validate
    counts = np.bincount([int(f.label) for f in fingers], minlength=4)[1:]
    folds = min(cfg["classifier"]["cv_folds"], int(counts[counts > 0].min()))
    return cross_validate(fingers, conf.classifier_config(cfg, feature_indices), folds, cfg["seed"])


def cmd_eval_classify(args, cfg, out: Path) -> dict:
    vecs, patches, ids = _load_training(args)
    fingers, skipped = _labeled_fingers(vecs, patches, ids)
    res = _cross_validate(fingers, cfg, _selection_indices(args.selection))
    body = res.report.to_dict()
    body["fold_accuracy"] = list(res.fold_accuracy)
    body["skipped_fingers"] = skipped
    _write_json(out / "metrics.json", body)
    _write_confusion(out / "confusion.csv", res.report.confusion)
    if cfg["pipeline"]["figures"]:
        from .plotting import plot_confusion
        plot_confusion(res.report.confusion, out / "confusion.png")
    return {"accuracy": res.report.accuracy}


# fingerprints -----------------------------------------------------------------

def cmd_synth_db(args, cfg, out: Path) -> dict:
    from .fingerprint_db import PlantSpec, save_dataset, save_dataset_json, synth_planted
    noise, synth = conf.synth_configs(cfg)
    plants = []
    for spec in args.plant or []:
        pat, _, frac = spec.partition(":")
        plants.append(PlantSpec(PatternLabel.parse(pat), float(frac) if frac else 0.3))
    s = cfg["synth_db"]
    pd = synth_planted(cfg["seed"], s["fingers_per_pattern"], s["impressions"], noise, plants, synth)
    save_dataset(pd.dataset, out / "db.txt")
    save_dataset_json(pd.dataset, out / "db.json")
    _write_json(out / "planted.json", [{"key": list(t.key), "pattern": t.pattern.slug, "covered_fingers": list(c)}
                                       for t, c in zip(pd.planted, pd.covered)])
    return {"templates": len(pd.dataset)}


def cmd_calibrate(args, cfg, out: Path) -> dict:
    from .matcher import calibrate_far
    db = _load_db(args.db)
    table = calibrate_far(db, cfg["calibration"]["targets"], conf.matcher_config(cfg), cfg["workers"])
    table.write_json(out / "thresholds.json")
    table.write_histogram_csv(out / "impostor_histogram.csv")
    return {"thresholds": {str(k): v for k, v in table.entries.items()}}


def cmd_far_curve(args, cfg, out: Path) -> dict:
    from .matcher import far_curve
    db = _load_db(args.db)
    mcfg = conf.matcher_config(cfg)
    curves = {"mixed": far_curve(db, mcfg, cfg["workers"])}
    for p in PATTERNS:
        sub = db.by_pattern(p)
        if len(sub.finger_ids) >= 2:
            curves[p.slug] = far_curve(sub, mcfg, cfg["workers"])
    _write_json(out / "far_curve.json", {k: [{"threshold": l, "far": f} for l, f in v] for k, v in curves.items()})
    if cfg["pipeline"]["figures"]:
        from .plotting import plot_far_curve
        plot_far_curve(curves, out / "far_curve.png")
    return {"curves": sorted(curves)}


def cmd_prevalence(args, cfg, out: Path) -> dict:
    from .matcher import mp_prevalence
    db = _load_db(args.db)
    mcfg = conf.matcher_config(cfg)
    lam, _ = _threshold(args, cfg, db, mcfg)
    prev = mp_prevalence(db, lam, cfg["prevalence"]["fraction"], mcfg, cfg["workers"])
    body = prev.to_dict()
    body.update({"threshold": lam, "fraction": cfg["prevalence"]["fraction"], "templates": len(db)})
    _write_json(out / "prevalence.json", body)
    return {"count": prev.count}


def _pmp_common(args, cfg, kind):
    from .masterprint import independent_pmp, save_pmp, sequential_pmp
    db = _load_db(args.db)
    mcfg = conf.matcher_config(cfg)
    lam, _ = _threshold(args, cfg, db, mcfg)
    fn = independent_pmp if kind == "independent" else sequential_pmp
    seqs = {}
    for p in _patterns_arg(args):
        sub = db.by_pattern(p)
        seqs[p] = fn(sub, lam, mcfg, cfg["masterprint"]["exclude"], workers=cfg["workers"])
    return db, lam, seqs, save_pmp


def _save_pmps(out: Path, seqs, save_pmp) -> None:
    for p, seq in seqs.items():
        save_pmp(seq, out / f"pmp_{p.slug}.txt")


def cmd_pmp_independent(args, cfg, out: Path) -> dict:
    _, lam, seqs, save = _pmp_common(args, cfg, "independent")
    _save_pmps(out, seqs, save)
    _write_json(out / "threshold.json", {"threshold": lam})
    return {"patterns": [p.slug for p in seqs]}


def cmd_pmp_sequential(args, cfg, out: Path) -> dict:
    _, lam, seqs, save = _pmp_common(args, cfg, "sequential")
    _save_pmps(out, seqs, save)
    _write_json(out / "threshold.json", {"threshold": lam})
    return {"patterns": [p.slug for p in seqs]}


def cmd_pmp_synthesize(args, cfg, out: Path) -> dict:
    from .masterprint import hill_climb, load_pmp, save_pmp, sequential_pmp, write_trace_csv
    db = _load_db(args.db)
    mcfg = conf.matcher_config(cfg)
    lam, _ = _threshold(args, cfg, db, mcfg)
    hc = conf.hill_climb_config(cfg)
    trace = []
    for p in _patterns_arg(args):
        sub = db.by_pattern(p)
        seed_path = Path(args.seeds) / f"pmp_{p.slug}.txt" if args.seeds else None
        seeds = load_pmp(seed_path) if seed_path else sequential_pmp(
            sub, lam, mcfg, cfg["masterprint"]["exclude"], workers=cfg["workers"])
        res = hill_climb(seeds, sub, lam, hc, mcfg, cfg["masterprint"]["exclude"], cfg["workers"])
        save_pmp(res, out / f"pmp_{p.slug}.txt")
        trace.extend((p, r) for r in res.trace)
    _write_trace(out / "hill_climb_trace.csv", trace)
    if cfg["pipeline"]["figures"]:
        from .plotting import plot_hill_climb_trace
        plot_hill_climb_trace([r for _, r in trace], out / "hill_climb_trace.png")
    _write_json(out / "threshold.json", {"threshold": lam})
    return {"iterations": len(trace)}


def _write_trace(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern", "template", "iteration", "mutation", "temp_asr", "best_asr", "accepted"])
        for p, r in rows:
            w.writerow([p.slug, r.template, r.iteration, r.mutation, repr(r.temp_asr), repr(r.best_asr),
                        int(r.accepted)])


def cmd_evaluate_attack(args, cfg, out: Path) -> dict:
    from .masterprint import evaluate_attack, load_pmp
    test = _load_db(args.test)
    mcfg = conf.matcher_config(cfg)
    if args.threshold is None:
        raise ParameterError("evaluate-attack needs --threshold (calibrate on the training set first)")
    pmps = {}
    for p in PATTERNS:
        path = Path(args.pmp_dir) / f"pmp_{p.slug}.txt"
        if not path.exists():
            raise ParameterError(f"missing PMP file {path}")
        pmps[p] = load_pmp(path)
    r = _read_confusion(args.confusion) if args.confusion else None
    rep = evaluate_attack(pmps, test, int(args.threshold), r, mcfg, cfg["workers"])
    rep.write_json(out / "attack_report.json")
    if cfg["pipeline"]["figures"]:
        from .plotting import plot_attack_attempts
        plot_attack_attempts({"pmp": rep}, out / "attack_attempts.png")
    return {"wASR": [float(v) for v in rep.wasr[-1]]}


# pipeline -------------------------------------------------------------------

def _pipeline_audio(cfg, out: Path, rng):
    """Labelled fingers from real recordings (audio_dir + labels_csv) or synthetic ones."""
    from .audio_prep import segment_friction
    from .features import extract_features, mel_patch
    from .pattern_classify import LabeledFinger
    from .synthetic_audio import pattern_recording
    from .wavio import manifest_entries, read_wav
    seg_cfg = conf.segmenter_config(cfg)
    recordings = []
    pl = cfg["pipeline"]
    if pl["audio_dir"]:
        if not pl["labels_csv"]:
            raise ParameterError("pipeline.audio_dir needs pipeline.labels_csv")
        labels = _read_labels(pl["labels_csv"])
        for wav in _expand_wavs([pl["audio_dir"]]):
            if wav.stem not in labels:
                raise IngestionError(f"no label for recording {wav.name}")
            recordings.append((wav.stem, labels[wav.stem], read_wav(wav)))
    else:
        sa = cfg["synth_audio"]
        for p in PATTERNS:
            for k in range(sa["fingers_per_pattern"]):
                clip, _ = pattern_recording(p, rng, sa["sample_rate_hz"], sa["swipes"])
                recordings.append((f"{p.slug}_{k:03d}", p, clip))
    fingers, manifest, skipped = [], [], []
    for name, label, clip in recordings:
        segs = segment_friction(clip, seg_cfg, source=name)
        manifest.extend(manifest_entries(segs, f"{name}.wav"))
        if len(segs) < 3:
            skipped.append(name)
            continue
        items = []
        for k, s in enumerate(segs[:3]):
            s = _prep_segment(s, cfg)
            items.append((extract_features(s, label), mel_patch(s), f"{name}_seg{k:03d}"))
        fingers.append(LabeledFinger(tuple(items), label, name))
    _write_json(out / "manifest.json", manifest)
    return fingers, skipped


def _split_fingers(db, test_fraction, rng):
    by_pat: Dict[Optional[PatternLabel], List[int]] = {}
    for f, p in sorted(db.finger_patterns().items()):
        by_pat.setdefault(p, []).append(f)
    test_ids = set()
    for p in sorted(by_pat, key=lambda q: -1 if q is None else int(q)):
        ids = by_pat[p]
        n_test = int(round(test_fraction * len(ids)))
        test_ids.update(int(ids[i]) for i in rng.permutation(len(ids))[:n_test])
    train = [i for i, t in enumerate(db.templates) if t.finger_id not in test_ids]
    test = [i for i, t in enumerate(db.templates) if t.finger_id in test_ids]
    return db.subset(train, f"{db.name}:train"), db.subset(test, f"{db.name}:test")


def cmd_pipeline(args, cfg, out: Path) -> dict:
    from .fingerprint_db import save_dataset, synth_planted
    from .masterprint import PmpKind, evaluate_attack, hill_climb, independent_pmp, save_pmp, sequential_pmp
    from .matcher import far_curve_from_scores, impostor_pairs, score_matrix, thresholds_from_scores
    streams = np.random.SeedSequence(cfg["seed"]).spawn(3)
    rng_audio, rng_split = (np.random.default_rng(s) for s in streams[:2])

    # stage 1: sound to pattern
    fingers, skipped = _pipeline_audio(cfg, out, rng_audio)
    cv = _cross_validate(fingers, cfg)
    _write_confusion(out / "confusion.csv", cv.report.confusion)
    from .masterprint import confusion_to_r
    r = confusion_to_r(cv.report.confusion)

    # stage 2: fingerprints and thresholds
    mcfg = conf.matcher_config(cfg)
    if cfg["pipeline"]["db_path"]:
        db = _load_db(cfg["pipeline"]["db_path"])
    else:
        noise, synth = conf.synth_configs(cfg)
        s = cfg["synth_db"]
        db = synth_planted(int(streams[2].generate_state(1)[0]), s["fingers_per_pattern"], s["impressions"],
                           noise, (), synth).dataset
    train, test = _split_fingers(db, cfg["synth_db"]["test_fraction"], rng_split)
    save_dataset(train, out / "train_db.txt")
    save_dataset(test, out / "test_db.txt")
    scores = score_matrix(train.templates, cfg=mcfg, workers=cfg["workers"])
    iu, ju = impostor_pairs(train)
    attack_far = cfg["calibration"]["attack_far"]
    wanted = sorted(set(cfg["calibration"]["targets"]) | {attack_far}, reverse=True)
    # a target needs at least 1/target impostor pairs; small splits drop the finest ones
    targets = [t for t in wanted if t == attack_far or iu.size >= math.ceil(1.0 / t - 1e-9)]
    unresolved = [t for t in wanted if t not in targets]
    table = thresholds_from_scores(scores[iu, ju], targets)
    table.write_json(out / "thresholds.json")
    table.write_histogram_csv(out / "impostor_histogram.csv")
    lam = table.entries[attack_far]
    curve = far_curve_from_scores(scores[iu, ju])

    # stage 3: PMP generation and attack
    exclude = cfg["masterprint"]["exclude"]
    hc = conf.hill_climb_config(cfg)
    seqs: Dict[PmpKind, Dict[PatternLabel, object]] = {k: {} for k in PmpKind}
    trace = []
    for p in PATTERNS:
        idx = [i for i, t in enumerate(train.templates) if t.pattern == p]
        sub = train.subset(idx)
        sub_scores = scores[np.ix_(idx, idx)]
        seqs[PmpKind.INDEPENDENT][p] = independent_pmp(sub, lam, mcfg, exclude, sub_scores)
        seqs[PmpKind.SEQUENTIAL][p] = sequential_pmp(sub, lam, mcfg, exclude, sub_scores)
        syn = hill_climb(seqs[PmpKind.SEQUENTIAL][p], sub, lam, hc, mcfg, exclude, cfg["workers"])
        seqs[PmpKind.SYNTHETIC][p] = syn
        trace.extend((p, row) for row in syn.trace)
    reports = {}
    for kind, per in seqs.items():
        (out / f"pmp_{kind.value}").mkdir(exist_ok=True)
        for p, seq in per.items():
            save_pmp(seq, out / f"pmp_{kind.value}" / f"pmp_{p.slug}.txt")
        reports[kind.value] = evaluate_attack(per, test, lam, r, mcfg, cfg["workers"])
        reports[kind.value].write_json(out / f"attack_{kind.value}.json")
    _write_trace(out / "hill_climb_trace.csv", trace)

    report = {
        "classification": {**cv.report.to_dict(), "fold_accuracy": list(cv.fold_accuracy),
                           "fingers": len(fingers), "skipped_recordings": skipped},
        "R": [[float(v) for v in row] for row in r],
        "thresholds": table.to_dict(),
        "attack_threshold": lam,
        "attack_far": attack_far,
        "unresolved_targets": unresolved,
        "train_templates": len(train), "test_templates": len(test),
        "attack": {k: v.to_dict() for k, v in reports.items()},
        "seed": cfg["seed"],
    }
    _write_json(out / "report.json", report)
    if cfg["pipeline"]["figures"]:
        from .plotting import plot_attack_attempts, plot_confusion, plot_far_curve, plot_hill_climb_trace
        plot_far_curve({"train": curve}, out / "far_curve.png",
                       {t: table.entries[t] for t in cfg["calibration"]["targets"] if t in table.entries})
        plot_hill_climb_trace([row for _, row in trace], out / "hill_climb_trace.png")
        plot_attack_attempts(reports, out / "attack_attempts.png")
        plot_confusion(cv.report.confusion, out / "confusion.png")
    return {"accuracy": cv.report.accuracy, "threshold": lam,
            "wASR": {k: [float(x) for x in v.wasr[-1]] for k, v in reports.items()}}


# argument parsing -------------------------------------------------------------

COMMANDS = {
    "segment": cmd_segment, "augment": cmd_augment, "features": cmd_features, "melpatch": cmd_melpatch,
    "select": cmd_select, "fit": cmd_fit, "predict": cmd_predict, "eval-classify": cmd_eval_classify,
    "synth-db": cmd_synth_db, "calibrate": cmd_calibrate, "far-curve": cmd_far_curve,
    "prevalence": cmd_prevalence, "pmp-independent": cmd_pmp_independent,
    "pmp-sequential": cmd_pmp_sequential, "pmp-synthesize": cmd_pmp_synthesize,
    "evaluate-attack": cmd_evaluate_attack, "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory (created if missing)")
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. --set matcher.dist_tol_px=7")
    common.add_argument("--seed", type=int, help="overrides FRICTIONFORGE_SEED and the config seed")
    common.add_argument("--workers", type=int, help="bound on matcher threads")

    parser = argparse.ArgumentParser(prog="frictionforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"frictionforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("segment", "find friction events in recordings")
    p.add_argument("inputs", nargs="+", help="WAV files or directories")
    p = add("augment", "time-stretch and pitch-shift segment WAVs")
    p.add_argument("inputs", nargs="+")
    for name, text in (("features", "99-dimension feature CSV"), ("melpatch", "96x64 Mel patches")):
        p = add(name, text)
        p.add_argument("inputs", nargs="+", help="segment WAV files or directories")
        if name == "features":
            p.add_argument("--labels", help="CSV name,pattern (recording or segment stem)")
            p.add_argument("--label", help="pattern for every input")
    p = add("select", "mRMR + KNN wrapper feature selection")
    p.add_argument("--features", required=True)
    for name, text in (("fit", "train the joint predictor"), ("predict", "predict finger patterns"),
                       ("eval-classify", "cross-validated classification metrics")):
        p = add(name, text)
        p.add_argument("--features", required=True)
        p.add_argument("--patches", required=True)
        if name != "predict":
            p.add_argument("--selection", help="selection.json from `select`")
        else:
            p.add_argument("--model", required=True)
    p = add("synth-db", "synthetic minutiae dataset")
    p.add_argument("--plant", action="append", metavar="PATTERN[:FRACTION]",
                   help="plant a MasterPrint covering a fraction of one pattern's fingers")
    for name, text in (("calibrate", "FAR thresholds"), ("far-curve", "FAR against threshold")):
        p = add(name, text)
        p.add_argument("--db", required=True)
    for name, text in (("prevalence", "MasterPrint prevalence"), ("pmp-independent", "independent PMPs"),
                       ("pmp-sequential", "sequential PMPs"), ("pmp-synthesize", "hill-climbed PMPs")):
        p = add(name, text)
        p.add_argument("--db", required=True)
        p.add_argument("--threshold", type=int, help="score threshold; default calibrates on --db")
        p.add_argument("--far", type=float, help="target FAR for calibration (default calibration.attack_far)")
        if name != "prevalence":
            p.add_argument("--pattern", help="restrict to one pattern")
        if name == "pmp-synthesize":
            p.add_argument("--seeds", help="directory of sequential pmp_<pattern>.txt files")
    p = add("evaluate-attack", "wASR of PMP sequences against a test set")
    p.add_argument("--pmp-dir", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--threshold", type=int)
    p.add_argument("--confusion", help="confusion.csv from eval-classify (default: identity)")
    add("pipeline", "segment -> classify -> PMPs -> attack report")
    return parser


def _fail(err: dict, out: Optional[Path], code: int) -> int:
    text = json.dumps(err, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(text + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = conf.resolve(args.config, args.set, args.seed, args.workers)
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").unlink(missing_ok=True)  # stale from an earlier failed run
        conf.dump(cfg, out / "effective_config.yaml")
        _write_json(out / "run.json", {"command": args.command, "seed": cfg["seed"], "versions": _versions(),
                                       "argv": [a for a in (argv if argv is not None else sys.argv[1:])]})
        summary = COMMANDS[args.command](args, cfg, out)
    except FrictionForgeError as exc:
        return _fail(exc.to_dict(), out, EXIT_MODULE_ERROR)
    except Exception as exc:  # anything else is a bug, still reported as JSON
        return _fail({"error": "internal_error", "message": f"{type(exc).__name__}: {exc}",
                      "traceback": traceback.format_exc()}, out, EXIT_INTERNAL_ERROR)
    print(json.dumps({"command": args.command, "out": str(out), **summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
