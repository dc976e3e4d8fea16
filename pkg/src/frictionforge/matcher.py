"""Edge-pairing minutiae matcher, FAR threshold calibration and MasterPrint prevalence.

Each template becomes a table of intra-template edges described by their
length and by the angles of both endpoint directions relative to the edge
azimuth. Those quantities do not depend on where the finger sits or on how it
is rotated. Edges of the two templates that agree within tolerance form
candidate minutia correspondences; the score is the size of the largest
one-to-one set of correspondences that share a single global rotation and is
grown from a seed pair by support voting.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numba
import numpy as np
from numba import njit, prange

from .errors import CalibrationError, ParameterError
from .fingerprint_db import N_DIR_BINS, FingerprintDataset, MinutiaeTemplate

DEFAULT_TARGETS = (0.01, 0.001, 0.0001)


@dataclass(frozen=True)
class MatcherConfig:
    dist_tol_px: float = 9.0
    angle_tol_bins: float = 1.0
    min_edge_len_px: float = 10.0
    max_edge_len_px: float = 200.0
    min_support: int = 2  # compatible edges a new correspondence needs into the cluster
    support_fraction: float = 0.5  # ... and this share of the members within edge range of it

    def __post_init__(self):
        if min(self.dist_tol_px, self.angle_tol_bins, self.min_edge_len_px, self.max_edge_len_px) <= 0:
            raise ParameterError("matcher tolerances and edge lengths must be positive")
        if self.min_edge_len_px >= self.max_edge_len_px:
            raise ParameterError("min_edge_len_px must be below max_edge_len_px")
        if int(self.min_support) != self.min_support or self.min_support < 1:
            raise ParameterError("min_support must be a positive integer")
        if not 0.0 <= self.support_fraction <= 1.0:
            raise ParameterError("support_fraction must lie in [0, 1]")

    def params(self):
        return (float(self.dist_tol_px), float(self.angle_tol_bins),
                float(self.min_edge_len_px), float(self.max_edge_len_px), int(self.min_support), float(self.support_fraction))


# kernels -------------------------------------------------------------------

@njit(cache=True, inline="always", error_model="numpy")
def _circ(a, b):
    """Circular distance of two direction values in [0, 16)."""
    d = a - b
    if d < 0.0:
        d = -d
    if d > 8.0:
        d = 16.0 - d
    return d


@njit(cache=True, error_model="numpy")
def _edges(pts, min_len, max_len):
    """Edges i < j within the length window, sorted by length.

    Columns of the float table: length, beta_i, beta_j, azimuth (all angles in bins).
    """
    n = pts.shape[0]
    cap = n * (n - 1) // 2
    idx = np.empty((cap, 2), np.int64)
    val = np.empty((cap, 4), np.float64)
    scale = N_DIR_BINS / (2.0 * math.pi)
    c = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = float(pts[j, 0] - pts[i, 0])
            dy = float(pts[j, 1] - pts[i, 1])
            d = math.sqrt(dx * dx + dy * dy)
            if d < min_len or d > max_len:
                continue
            phi = (math.atan2(dy, dx) * scale) % N_DIR_BINS
            idx[c, 0] = i
            idx[c, 1] = j
            val[c, 0] = d
            val[c, 1] = (pts[i, 2] - phi) % N_DIR_BINS
            val[c, 2] = (pts[j, 2] - phi) % N_DIR_BINS
            val[c, 3] = phi
            c += 1
    order = np.argsort(val[:c, 0], kind="mergesort")
    return idx[order], val[order]


@njit(cache=True, error_model="numpy")
def _group_by_bin(values):
    """Stable counting sort of indices by the integer direction bin of ``values``."""
    n = values.size
    counts = np.zeros(N_DIR_BINS + 1, np.int64)
    for f in range(n):
        counts[int(values[f]) + 1] += 1
    for g in range(N_DIR_BINS):
        counts[g + 1] += counts[g]
    pos = counts[:-1].copy()
    perm = np.empty(n, np.int64)
    for f in range(n):
        g = int(values[f])
        perm[pos[g]] = f
        pos[g] += 1
    return perm, counts


@njit(cache=True, error_model="numpy")
def _orientations(idx, val):
    """Every edge read forward and reversed, grouped by first-angle bin.

    Reversing swaps the endpoints, exchanges the relative angles (each turned
    by half a circle) and turns the azimuth by half a circle. Rows of the
    returned table are (length, beta_first, beta_second, azimuth); within a
    group they stay in increasing length.
    """
    m = val.shape[0]
    half = N_DIR_BINS / 2.0
    # entry 2f is edge f read forward, 2f + 1 the same edge reversed
    b1 = np.empty(2 * m, np.float64)
    for f in range(m):
        b1[2 * f] = val[f, 1]
        b1[2 * f + 1] = (val[f, 2] + half) % N_DIR_BINS
    perm, gstart = _group_by_bin(b1)
    tab = np.empty((2 * m, 4), np.float64)
    ends = np.empty((2 * m, 2), np.int64)
    for k in range(2 * m):
        f = perm[k] // 2
        tab[k, 0] = val[f, 0]
        tab[k, 1] = b1[perm[k]]
        if perm[k] % 2 == 0:
            tab[k, 2] = val[f, 2]
            tab[k, 3] = val[f, 3]
            ends[k, 0] = idx[f, 0]
            ends[k, 1] = idx[f, 1]
        else:
            tab[k, 2] = (val[f, 1] + half) % N_DIR_BINS
            tab[k, 3] = (val[f, 3] + half) % N_DIR_BINS
            ends[k, 0] = idx[f, 1]
            ends[k, 1] = idx[f, 0]
    return tab, ends, gstart


@njit(cache=True, error_model="numpy")
def _scan_pairs(ia, va, tab, ends, gstart, nb, dist_tol, tol, c0, c1, v0, v1, v2):
    """Fill the output buffers with compatible pairs; returns the count or -1 on overflow."""
    cap = c0.size
    half = N_DIR_BINS / 2.0
    lo = gstart[:-1].copy()
    hi = gstart[:-1].copy()
    span = min(int(math.floor(2.0 * tol)) + 1, N_DIR_BINS)
    n = 0
    for e in range(ia.shape[0]):
        d = va[e, 0]
        x1 = va[e, 1]
        x2 = va[e, 2]
        az = va[e, 3]
        a_first = ia[e, 0] * nb
        a_second = ia[e, 1] * nb
        g0 = int(math.floor(x1 - tol)) + N_DIR_BINS
        for gg in range(span):
            g = (g0 + gg) % N_DIR_BINS
            end = gstart[g + 1]
            k0 = lo[g]
            while k0 < end and tab[k0, 0] < d - dist_tol:
                k0 += 1
            lo[g] = k0
            k1 = max(hi[g], k0)
            while k1 < end and tab[k1, 0] <= d + dist_tol:
                k1 += 1
            hi[g] = k1
            if n + k1 - k0 > cap:
                return -1
            for k in range(k0, k1):
                u1 = abs(x1 - tab[k, 1])
                if u1 > half:
                    u1 = N_DIR_BINS - u1
                if u1 > tol:
                    continue
                u2 = abs(x2 - tab[k, 2])
                if u2 > half:
                    u2 = N_DIR_BINS - u2
                if u2 > tol:
                    continue
                c0[n] = a_first + ends[k, 0]
                c1[n] = a_second + ends[k, 1]
                v0[n] = abs(d - tab[k, 0])
                v1[n] = d
                r = az - tab[k, 3]
                if r < 0.0:
                    r += N_DIR_BINS
                v2[n] = r
                n += 1
    return n


@njit(cache=True, error_model="numpy")
def _compatible_pairs(ia, va, tab, ends, gstart, nb, dist_tol, tol):
    """Cross-template edge pairs agreeing in length and both relative angles.

    An edge of B is tried in both orientations; reversing it swaps its
    endpoints and turns its azimuth by half a circle. B edges are grouped by
    the integer bin of their first relative angle so that only groups within
    the angular tolerance are scanned, each with a sliding length window
    (A edges arrive in increasing length).

    Returns correspondence codes (a * nb + b for both endpoints) and, per pair,
    |delta d|, the A-edge length and the rotation in bins.
    """
    cap = 256 + 8 * ia.shape[0]
    while True:
        c0 = np.empty(cap, np.int64)
        c1 = np.empty(cap, np.int64)
        v0 = np.empty(cap, np.float64)
        v1 = np.empty(cap, np.float64)
        v2 = np.empty(cap, np.float64)
        n = _scan_pairs(ia, va, tab, ends, gstart, nb, dist_tol, tol, c0, c1, v0, v1, v2)
        if n >= 0:
            return c0[:n], c1[:n], v0[:n], v1[:n], v2[:n]
        cap *= 4


@njit(cache=True, error_model="numpy")
def _seed_order(dd, length, dist_tol, max_len):
    """Order pairs by |delta d| then A-edge length, each quantised to 1/1024 of
    its range, then by construction order (two stable counting-sort passes)."""
    n = dd.shape[0]
    nbk = 1024
    k1 = np.empty(n, np.int64)
    k2 = np.empty(n, np.int64)
    for p in range(n):
        k1[p] = min(nbk - 1, int(dd[p] / dist_tol * nbk))
        k2[p] = min(nbk - 1, int(length[p] / max_len * nbk))
    order = np.arange(n)
    for keys in (k2, k1):
        counts = np.zeros(nbk + 1, np.int64)
        for p in range(n):
            counts[keys[p] + 1] += 1
        for b in range(nbk):
            counts[b + 1] += counts[b]
        out = np.empty(n, np.int64)
        for q in range(n):
            p = order[q]
            out[counts[keys[p]]] = p
            counts[keys[p]] += 1
        order = out
    return order


@njit(cache=True, error_model="numpy")
def _match(pa, pb, dist_tol, angle_tol, min_len, max_len, min_support, support_fraction):
    ia, va = _edges(pa, min_len, max_len)
    ib, vb = _edges(pb, min_len, max_len)
    tab, ends, gstart = _orientations(ib, vb)
    return _match_prepared(pa.shape[0], ia, va, pb.shape[0], tab, ends, gstart,
                           dist_tol, angle_tol, max_len, min_support, support_fraction)


@njit(cache=True, error_model="numpy")
def _match_prepared(na, ia, va, nb, tab, ends, gstart,
                    dist_tol, angle_tol, max_len, min_support, support_fraction):
    if na < 2 or nb < 2 or ia.shape[0] == 0 or tab.shape[0] == 0:
        return 0
    tol = angle_tol + 1e-9
    c0, c1, dd, length, rho = _compatible_pairs(ia, va, tab, ends, gstart, nb, dist_tol + 1e-9, tol)
    npairs = c0.shape[0]
    if npairs == 0:
        return 0

    order = _seed_order(dd, length, dist_tol + 1e-9, max_len + 1e-9)

    # adjacency between correspondences, stored in both directions
    ncorr = na * nb
    start = np.zeros(ncorr + 1, np.int64)
    for p in range(npairs):
        start[c0[p] + 1] += 1
        start[c1[p] + 1] += 1
    for c in range(ncorr):
        start[c + 1] += start[c]
    fill = start[:-1].copy()
    nbr = np.empty(2 * npairs, np.int64)
    nrho = np.empty(2 * npairs, np.float64)
    for p in range(npairs):
        k = fill[c0[p]]
        nbr[k] = c1[p]
        nrho[k] = rho[p]
        fill[c0[p]] += 1
        k = fill[c1[p]]
        nbr[k] = c0[p]
        nrho[k] = rho[p]
        fill[c1[p]] += 1

    in_range = np.zeros((na, na), np.bool_)
    for e in range(ia.shape[0]):
        in_range[ia[e, 0], ia[e, 1]] = True
        in_range[ia[e, 1], ia[e, 0]] = True

    # per-seed scratch is invalidated by bumping a stamp instead of clearing
    covered = np.zeros(ncorr, np.bool_)
    support = np.zeros(ncorr, np.int64)
    sup_stamp = np.zeros(ncorr, np.int64)
    touched = np.empty(ncorr, np.int64)
    used_a = np.zeros(na, np.int64)
    used_b = np.zeros(nb, np.int64)
    cap_m = min(na, nb)
    members = np.empty(cap_m, np.int64)
    eligible = np.zeros(na, np.int64)  # members within edge range, per A point
    best = 0
    stamp = 0
    for q in range(npairs):
        p = order[q]
        if covered[c0[p]] or covered[c1[p]]:
            continue
        stamp += 1
        rho0 = rho[p]
        n_t = 0
        n_m = 0
        eligible[:] = 0
        pending = c0[p]
        second = c1[p]
        while pending >= 0:
            a = pending // nb
            used_a[a] = stamp
            used_b[pending % nb] = stamp
            members[n_m] = pending
            n_m += 1
            if support_fraction > 0.0:
                for x in range(na):
                    if in_range[x, a]:
                        eligible[x] += 1
            for k in range(start[pending], start[pending + 1]):
                c = nbr[k]
                if used_a[c // nb] == stamp or used_b[c % nb] == stamp:
                    continue
                if _circ(nrho[k], rho0) > tol:
                    continue
                if sup_stamp[c] != stamp:
                    sup_stamp[c] = stamp
                    support[c] = 0
                    touched[n_t] = c
                    n_t += 1
                support[c] += 1
            if second >= 0:
                pending = second
                second = -1
                continue
            pending = -1
            if n_m == cap_m:
                break
            # most supported admissible correspondence, lowest index on ties
            top = 0
            floor_support = min(min_support, n_m)
            for t in range(n_t):
                c = touched[t]
                s = support[c]
                if s < floor_support or s < top:
                    continue
                ca = c // nb
                if used_a[ca] == stamp or used_b[c % nb] == stamp:
                    continue
                if s < support_fraction * eligible[ca] - 1e-9:
                    continue
                if s > top or c < pending:
                    top = s
                    pending = c
        for t in range(n_m):
            covered[members[t]] = True
        if n_m > best:
            best = n_m
            if best == cap_m:
                break
    return best


@njit(cache=True, error_model="numpy")
def _prepare_all(flat, offsets, min_len, max_len):
    """Edge tables of every packed template, concatenated with per-template offsets.

    ``eoff`` indexes the plain edge tables, ``toff`` the two-orientation ones.
    """
    t_count = offsets.size - 1
    eoff = np.zeros(t_count + 1, np.int64)
    idx_l = []
    val_l = []
    for t in range(t_count):
        i, v = _edges(flat[offsets[t]:offsets[t + 1]], min_len, max_len)
        idx_l.append(i)
        val_l.append(v)
        eoff[t + 1] = eoff[t] + i.shape[0]
    total = eoff[-1]
    idx = np.empty((total, 2), np.int64)
    val = np.empty((total, 4), np.float64)
    tab = np.empty((2 * total, 4), np.float64)
    ends = np.empty((2 * total, 2), np.int64)
    gstart = np.empty((t_count, N_DIR_BINS + 1), np.int64)
    for t in range(t_count):
        e0 = eoff[t]
        e1 = eoff[t + 1]
        idx[e0:e1] = idx_l[t]
        val[e0:e1] = val_l[t]
        tb, en, gs = _orientations(idx_l[t], val_l[t])
        tab[2 * e0:2 * e1] = tb
        ends[2 * e0:2 * e1] = en
        gstart[t] = gs
    return eoff, idx, val, tab, ends, gstart


@njit(cache=True, parallel=True, error_model="numpy")
def _pairs_kernel(flat, offsets, pi, pj, dist_tol, angle_tol, min_len, max_len, min_support, support_fraction):
    eoff, idx, val, tab, ends, gstart = _prepare_all(flat, offsets, min_len, max_len)
    out = np.zeros(pi.size, np.int64)
    for k in prange(pi.size):
        a = pi[k]
        b = pj[k]
        a0, a1 = eoff[a], eoff[a + 1]
        b0, b1 = 2 * eoff[b], 2 * eoff[b + 1]
        out[k] = _match_prepared(offsets[a + 1] - offsets[a], idx[a0:a1], val[a0:a1],
                                 offsets[b + 1] - offsets[b], tab[b0:b1], ends[b0:b1], gstart[b],
                                 dist_tol, angle_tol, max_len, min_support, support_fraction)
    return out


@njit(cache=True, parallel=True, error_model="numpy")
def _probe_kernel(probe, probe_first, eoff, idx, val, tab, ends, gstart, sizes,
                  dist_tol, angle_tol, min_len, max_len, min_support, support_fraction):
    """One probe against prepared gallery tables; ``probe_first[g]`` picks the roles."""
    pi, pv = _edges(probe, min_len, max_len)
    ptab, pends, pgs = _orientations(pi, pv)
    npr = probe.shape[0]
    out = np.zeros(sizes.size, np.int64)
    for g in prange(sizes.size):
        a0, a1 = eoff[g], eoff[g + 1]
        b0, b1 = 2 * eoff[g], 2 * eoff[g + 1]
        if probe_first[g]:
            out[g] = _match_prepared(npr, pi, pv, sizes[g], tab[b0:b1], ends[b0:b1], gstart[g],
                                     dist_tol, angle_tol, max_len, min_support, support_fraction)
        else:
            out[g] = _match_prepared(sizes[g], idx[a0:a1], val[a0:a1], npr, ptab, pends, pgs,
                                     dist_tol, angle_tol, max_len, min_support, support_fraction)
    return out


# python API ----------------------------------------------------------------

def _canonical_key(t: MinutiaeTemplate):
    return len(t), tuple(sorted((m.x, m.y, m.theta_bin) for m in t.minutiae))


def _pack(templates: Sequence[MinutiaeTemplate]):
    arrays = [t.as_array() for t in templates]
    offsets = np.zeros(len(arrays) + 1, np.int64)
    offsets[1:] = np.cumsum([a.shape[0] for a in arrays])
    flat = np.vstack(arrays) if arrays and offsets[-1] else np.zeros((0, 3), np.int64)
    ranks = np.empty(len(templates), np.int64)
    ranks[sorted(range(len(templates)), key=lambda i: _canonical_key(templates[i]))] = np.arange(len(templates))
    return np.ascontiguousarray(flat, dtype=np.int64), offsets, ranks


def set_workers(workers: Optional[int]) -> int:
    """Bound numba's thread pool; results never depend on the count."""
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if not workers else max(1, min(int(workers), limit))
    numba.set_num_threads(n)
    return n


def match(a: MinutiaeTemplate, b: MinutiaeTemplate, cfg: Optional[MatcherConfig] = None) -> int:
    cfg = cfg or MatcherConfig()
    if _canonical_key(b) < _canonical_key(a):
        a, b = b, a
    return int(_match(a.as_array(), b.as_array(), *cfg.params()))


def _score_pairs(templates, pi, pj, cfg, workers):
    flat, offsets, ranks = _pack(templates)
    pi = np.asarray(pi, np.int64)
    pj = np.asarray(pj, np.int64)
    swap = ranks[pj] < ranks[pi]
    first = np.where(swap, pj, pi)
    second = np.where(swap, pi, pj)
    set_workers(workers)
    return _pairs_kernel(flat, offsets, first, second, *cfg.params())


def score_matrix(rows: Sequence[MinutiaeTemplate], cols: Optional[Sequence[MinutiaeTemplate]] = None,
                 cfg: Optional[MatcherConfig] = None, workers: Optional[int] = None) -> np.ndarray:
    """Integer score matrix; with ``cols`` omitted, the symmetric all-pairs matrix of ``rows``."""
    cfg = cfg or MatcherConfig()
    rows = list(rows)
    if cols is None:
        n = len(rows)
        iu, ju = np.triu_indices(n, k=1)
        out = np.zeros((n, n), np.int64)
        if iu.size:
            s = _score_pairs(rows, iu, ju, cfg, workers)
            out[iu, ju] = s
            out[ju, iu] = s
        out[np.arange(n), np.arange(n)] = [len(t) for t in rows]
        return out
    cols = list(cols)
    nr, nc = len(rows), len(cols)
    if nr == 0 or nc == 0:
        return np.zeros((nr, nc), np.int64)
    ii, jj = np.meshgrid(np.arange(nr), np.arange(nc), indexing="ij")
    s = _score_pairs(rows + cols, ii.ravel(), jj.ravel() + nr, cfg, workers)
    return s.reshape(nr, nc)


class Gallery:
    """A fixed template set whose edge tables are built once, for scoring many probes."""

    def __init__(self, templates: Sequence[MinutiaeTemplate], cfg: Optional[MatcherConfig] = None,
                 workers: Optional[int] = None):
        self.templates = list(templates)
        self.cfg = cfg or MatcherConfig()
        self.workers = workers
        self._keys = [_canonical_key(t) for t in self.templates]
        flat, offsets, _ = _pack(self.templates)
        p = self.cfg.params()
        if self.templates:
            self._tables = _prepare_all(flat, offsets, p[2], p[3])
        self._sizes = np.diff(offsets).astype(np.int64)

    def __len__(self):
        return len(self.templates)

    def scores(self, probe: MinutiaeTemplate) -> np.ndarray:
        if not self.templates:
            return np.zeros(0, np.int64)
        key = _canonical_key(probe)
        probe_first = np.array([key <= k for k in self._keys], dtype=np.bool_)
        set_workers(self.workers)
        eoff, idx, val, tab, ends, gstart = self._tables
        return _probe_kernel(probe.as_array(), probe_first, eoff, idx, val, tab, ends, gstart,
                             self._sizes, *self.cfg.params())


def indicator(score, threshold) -> int:
    return int(score > threshold)


def impostor_pairs(d: FingerprintDataset) -> Tuple[np.ndarray, np.ndarray]:
    fid = np.array([t.finger_id for t in d.templates])
    iu, ju = np.triu_indices(len(d), k=1)
    keep = fid[iu] != fid[ju]
    return iu[keep], ju[keep]


def impostor_scores(d: FingerprintDataset, cfg: Optional[MatcherConfig] = None,
                    workers: Optional[int] = None) -> np.ndarray:
    """Scores of every unordered pair of templates from different fingers."""
    cfg = cfg or MatcherConfig()
    iu, ju = impostor_pairs(d)
    if iu.size == 0:
        return np.zeros(0, np.int64)
    return _score_pairs(list(d.templates), iu, ju, cfg, workers)


@dataclass(frozen=True)
class ThresholdTable:
    entries: Dict[float, int]
    score_histogram: Dict[int, int]
    n_pairs: int
    achieved_far: Dict[float, float] = field(default_factory=dict)

    def __post_init__(self):
        ordered = [self.entries[t] for t in sorted(self.entries, reverse=True)]
        if any(b < a for a, b in zip(ordered, ordered[1:])):
            raise CalibrationError("thresholds must not decrease as the target FAR decreases")

    def to_dict(self) -> dict:
        return {
            "n_impostor_pairs": self.n_pairs,
            "thresholds": [{"target_far": t, "threshold": self.entries[t], "achieved_far": self.achieved_far.get(t)}
                           for t in sorted(self.entries, reverse=True)],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_histogram_csv(self, path) -> None:
        write_histogram_csv(self.score_histogram, path)


def write_histogram_csv(hist: Dict[int, int], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["score", "count"])
        for s in sorted(hist):
            w.writerow([s, hist[s]])


def score_histogram(scores) -> Dict[int, int]:
    vals, counts = np.unique(np.asarray(scores, dtype=np.int64), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def far_at(scores: np.ndarray, threshold: int) -> float:
    scores = np.asarray(scores)
    return float(np.count_nonzero(scores > threshold) / scores.size)


def thresholds_from_scores(scores, targets: Sequence[float] = DEFAULT_TARGETS) -> ThresholdTable:
    s = np.asarray(scores, dtype=np.int64)
    targets = tuple(float(t) for t in targets)
    if not targets or any(not 0.0 < t < 1.0 for t in targets):
        raise ParameterError("target FARs must lie in (0, 1)")
    need = int(math.ceil(1.0 / min(targets) - 1e-9))
    if s.size < need:
        raise CalibrationError(
            f"{s.size} impostor pairs cannot resolve FAR {min(targets):g}; at least {need} are required")
    # exceed[L] = #(s > L) for L = 0..max
    counts = np.bincount(s, minlength=int(s.max()) + 1)
    exceed = s.size - np.cumsum(counts)
    entries, achieved = {}, {}
    for t in targets:
        ok = np.flatnonzero(exceed / s.size <= t + 1e-15)
        lam = int(ok[0])
        entries[t] = lam
        achieved[t] = float(exceed[lam] / s.size)
    return ThresholdTable(entries, score_histogram(s), int(s.size), achieved)


def calibrate_far(d: FingerprintDataset, targets: Sequence[float] = DEFAULT_TARGETS,
                  cfg: Optional[MatcherConfig] = None, workers: Optional[int] = None,
                  scores: Optional[np.ndarray] = None) -> ThresholdTable:
    if len(set(t.finger_id for t in d.templates)) < 2:
        raise CalibrationError("calibration needs at least 2 fingers")
    if scores is None:
        scores = impostor_scores(d, cfg, workers)
    return thresholds_from_scores(scores, targets)


def far_curve_from_scores(scores) -> List[Tuple[int, float]]:
    s = np.asarray(scores, dtype=np.int64)
    if s.size == 0:
        return [(0, 0.0)]
    counts = np.bincount(s, minlength=int(s.max()) + 1)
    exceed = s.size - np.cumsum(counts)
    return [(int(lam), float(exceed[lam] / s.size)) for lam in range(int(s.max()) + 1)]


def far_curve(d: FingerprintDataset, cfg: Optional[MatcherConfig] = None,
              workers: Optional[int] = None, scores: Optional[np.ndarray] = None) -> List[Tuple[int, float]]:
    if len(set(t.finger_id for t in d.templates)) < 2:
        raise CalibrationError("a FAR curve needs at least 2 fingers")
    if scores is None:
        scores = impostor_scores(d, cfg, workers)
    return far_curve_from_scores(scores)


@dataclass(frozen=True)
class Prevalence:
    count: int
    proportion: float
    template_keys: Tuple[Tuple[int, int], ...]  # (finger_id, impression_id) of MasterPrints
    rates: Tuple[float, ...]  # per template, in dataset order

    def to_dict(self) -> dict:
        return {"count": self.count, "proportion": self.proportion,
                "masterprints": [list(k) for k in self.template_keys]}


def finger_cover_matrix(scores: np.ndarray, row_fingers: np.ndarray, col_fingers: np.ndarray,
                        threshold: int) -> Tuple[np.ndarray, np.ndarray]:
    """Boolean (rows, fingers) matrix: does row template match any impression of finger f."""
    fingers = np.unique(col_fingers)
    hit = scores > threshold
    cover = np.zeros((scores.shape[0], fingers.size), dtype=bool)
    for k, f in enumerate(fingers):
        cover[:, k] = hit[:, col_fingers == f].any(axis=1)
    return cover, fingers


def mp_prevalence(d: FingerprintDataset, threshold: int, fraction: float = 0.04,
                  cfg: Optional[MatcherConfig] = None, workers: Optional[int] = None,
                  scores: Optional[np.ndarray] = None) -> Prevalence:
    """Templates whose finger-level impostor match rate reaches ``fraction``.

    The rate of a template is the share of the *other* fingers for which at
    least one impression scores above the threshold against it.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError("fraction must lie in (0, 1]")
    n = len(d)
    if n == 0:
        return Prevalence(0, 0.0, (), ())
    if scores is None:
        scores = score_matrix(d.templates, cfg=cfg, workers=workers)
    fid = np.array([t.finger_id for t in d.templates])
    cover, fingers = finger_cover_matrix(scores, fid, fid, threshold)
    own = fid[:, None] == fingers[None, :]
    cover &= ~own
    others = max(fingers.size - 1, 1)
    rates = cover.sum(axis=1) / others
    mp = np.flatnonzero(rates >= fraction - 1e-12)
    keys = tuple(d.templates[i].key for i in mp)
    return Prevalence(int(mp.size), float(mp.size / n), keys, tuple(float(r) for r in rates))


__all__ = [
    "MatcherConfig", "Gallery", "ThresholdTable", "Prevalence", "match", "score_matrix", "indicator",
    "impostor_pairs", "impostor_scores", "thresholds_from_scores", "calibrate_far", "far_curve",
    "far_curve_from_scores", "far_at", "mp_prevalence", "finger_cover_matrix", "score_histogram",
    "write_histogram_csv", "set_workers", "DEFAULT_TARGETS",
]
