"""Hot split-search kernels for the tree ensembles.

Two implementations of each kernel: a scalar scan compiled with numba, and
a vectorized pure-numpy fallback. Set ``CODESTYLO_NO_NUMBA=1`` to force the
numpy path (it is also used automatically when numba is unavailable). Both
paths accumulate partial sums in the same left-to-right order and share the
tie-breaking rule (first feature, then lowest threshold), so they return
identical splits; ``benchmarks/bench_kernels.py`` compares their speed.

Kernel contract: features are pre-sorted once (``sort_idx[i, f]`` is the row
index of the i-th smallest value of feature f); ``in_node`` masks the rows of
the current tree node. Split candidates sit between consecutive distinct
values; the threshold is their midpoint, nudged down so ``x <= thr`` never
captures the upper value after rounding. Returned gain is -1 when no valid
split exists.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("CODESTYLO_NO_NUMBA", "").lower() not in ("1", "true", "yes")
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

NO_SPLIT = (-1, 0.0, -1.0)


def _split_class_scan(X, sort_idx, in_node, feats, y, min_leaf, use_entropy):
    n_total = 0
    n1_total = 0
    for i in range(in_node.size):
        if in_node[i]:
            n_total += 1
            n1_total += y[i]
    best_feat = -1
    best_thr = 0.0
    best_gain = -1.0
    if n_total < 2 * min_leaf or n1_total == 0 or n1_total == n_total:
        return best_feat, best_thr, best_gain

    n0_total = n_total - n1_total
    if use_entropy:
        p1 = n1_total / n_total
        p0 = n0_total / n_total
        parent = -(p0 * np.log(p0) + p1 * np.log(p1))
    else:
        parent = 1.0 - (n0_total * n0_total + n1_total * n1_total) / (n_total * n_total)

    for fi in range(feats.size):
        f = feats[fi]
        l_count = 0
        l1 = 0
        prev_val = 0.0
        for si in range(sort_idx.shape[0]):
            row = sort_idx[si, f]
            if not in_node[row]:
                continue
            val = X[row, f]
            if l_count > 0 and val > prev_val and l_count >= min_leaf and (n_total - l_count) >= min_leaf:
                l0 = l_count - l1
                r_count = n_total - l_count
                r1 = n1_total - l1
                r0 = r_count - r1
                if use_entropy:
                    left = 0.0
                    if l0 > 0 and l1 > 0:
                        pl1 = l1 / l_count
                        pl0 = l0 / l_count
                        left = -(pl0 * np.log(pl0) + pl1 * np.log(pl1))
                    right = 0.0
                    if r0 > 0 and r1 > 0:
                        pr1 = r1 / r_count
                        pr0 = r0 / r_count
                        right = -(pr0 * np.log(pr0) + pr1 * np.log(pr1))
                else:
                    left = 1.0 - (l0 * l0 + l1 * l1) / (l_count * l_count)
                    right = 1.0 - (r0 * r0 + r1 * r1) / (r_count * r_count)
                gain = parent - (l_count / n_total) * left - (r_count / n_total) * right
                if gain > best_gain:
                    thr = 0.5 * (prev_val + val)
                    if thr >= val:
                        thr = prev_val
                    best_feat = f
                    best_thr = thr
                    best_gain = gain
            l_count += 1
            l1 += y[row]
            prev_val = val
    return best_feat, best_thr, best_gain


def _split_grad_scan(X, sort_idx, in_node, feats, g, h, min_leaf, reg_lambda):
    n_total = 0
    g_total = 0.0
    h_total = 0.0
    for i in range(in_node.size):
        if in_node[i]:
            n_total += 1
            g_total += g[i]
            h_total += h[i]
    best_feat = -1
    best_thr = 0.0
    best_gain = -1.0
    if n_total < 2 * min_leaf:
        return best_feat, best_thr, best_gain
    parent_score = (g_total * g_total) / (h_total + reg_lambda)

    for fi in range(feats.size):
        f = feats[fi]
        l_count = 0
        gl = 0.0
        hl = 0.0
        prev_val = 0.0
        for si in range(sort_idx.shape[0]):
            row = sort_idx[si, f]
            if not in_node[row]:
                continue
            val = X[row, f]
            if l_count > 0 and val > prev_val and l_count >= min_leaf and (n_total - l_count) >= min_leaf:
                gr = g_total - gl
                hr = h_total - hl
                gain = 0.5 * (
                    (gl * gl) / (hl + reg_lambda)
                    + (gr * gr) / (hr + reg_lambda)
                    - parent_score
                )
                if gain > best_gain:
                    thr = 0.5 * (prev_val + val)
                    if thr >= val:
                        thr = prev_val
                    best_feat = f
                    best_thr = thr
                    best_gain = gain
            l_count += 1
            gl += g[row]
            hl += h[row]
            prev_val = val
    return best_feat, best_thr, best_gain


def split_class_numpy(X, sort_idx, in_node, feats, y, min_leaf, use_entropy):
    """Vectorized twin of the classification split scan."""
    rows = np.flatnonzero(in_node)
    n_total = rows.size
    n1_total = int(y[rows].sum())
    if n_total < 2 * min_leaf or n1_total == 0 or n1_total == n_total:
        return NO_SPLIT
    n0_total = n_total - n1_total
    if use_entropy:
        p1 = n1_total / n_total
        p0 = n0_total / n_total
        parent = -(p0 * np.log(p0) + p1 * np.log(p1))
    else:
        parent = 1.0 - (n0_total * n0_total + n1_total * n1_total) / (n_total * n_total)

    best_feat, best_thr, best_gain = NO_SPLIT
    for f in feats:
        order = sort_idx[:, f]
        order = order[in_node[order]]
        vals = X[order, f]
        ys = y[order]
        l_count = np.arange(1, n_total, dtype=np.int64)
        l1 = np.cumsum(ys)[:-1]
        valid = (
            (vals[1:] > vals[:-1])
            & (l_count >= min_leaf)
            & ((n_total - l_count) >= min_leaf)
        )
        if not np.any(valid):
            continue
        l0 = l_count - l1
        r_count = n_total - l_count
        r1 = n1_total - l1
        r0 = r_count - r1
        if use_entropy:
            with np.errstate(divide="ignore", invalid="ignore"):
                pl1 = l1 / l_count
                pl0 = l0 / l_count
                left = -(np.where(pl0 > 0, pl0 * np.log(pl0), 0.0)
                         + np.where(pl1 > 0, pl1 * np.log(pl1), 0.0))
                pr1 = r1 / r_count
                pr0 = r0 / r_count
                right = -(np.where(pr0 > 0, pr0 * np.log(pr0), 0.0)
                          + np.where(pr1 > 0, pr1 * np.log(pr1), 0.0))
        else:
            left = 1.0 - (l0 * l0 + l1 * l1) / (l_count * l_count)
            right = 1.0 - (r0 * r0 + r1 * r1) / (r_count * r_count)
        gains = parent - (l_count / n_total) * left - (r_count / n_total) * right
        gains = np.where(valid, gains, -np.inf)
        pos = int(np.argmax(gains))
        if gains[pos] > best_gain:
            thr = 0.5 * (vals[pos] + vals[pos + 1])
            if thr >= vals[pos + 1]:
                thr = vals[pos]
            best_feat, best_thr, best_gain = int(f), float(thr), float(gains[pos])
    return best_feat, best_thr, best_gain


def split_grad_numpy(X, sort_idx, in_node, feats, g, h, min_leaf, reg_lambda):
    """Vectorized twin of the gradient (boosted-tree) split scan."""
    rows = np.flatnonzero(in_node)
    n_total = rows.size
    if n_total < 2 * min_leaf:
        return NO_SPLIT
    g_total = float(np.sum(g[rows]))
    h_total = float(np.sum(h[rows]))
    parent_score = (g_total * g_total) / (h_total + reg_lambda)

    best_feat, best_thr, best_gain = NO_SPLIT
    for f in feats:
        order = sort_idx[:, f]
        order = order[in_node[order]]
        vals = X[order, f]
        l_count = np.arange(1, n_total, dtype=np.int64)
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        valid = (
            (vals[1:] > vals[:-1])
            & (l_count >= min_leaf)
            & ((n_total - l_count) >= min_leaf)
        )
        if not np.any(valid):
            continue
        gr = g_total - gl
        hr = h_total - hl
        gains = 0.5 * (
            (gl * gl) / (hl + reg_lambda)
            + (gr * gr) / (hr + reg_lambda)
            - parent_score
        )
        gains = np.where(valid, gains, -np.inf)
        pos = int(np.argmax(gains))
        if gains[pos] > best_gain:
            thr = 0.5 * (vals[pos] + vals[pos + 1])
            if thr >= vals[pos + 1]:
                thr = vals[pos]
            best_feat, best_thr, best_gain = int(f), float(thr), float(gains[pos])
    return best_feat, best_thr, best_gain


if NUMBA_ENABLED:
    split_class_numba = njit(cache=True)(_split_class_scan)
    split_grad_numba = njit(cache=True)(_split_grad_scan)
    best_split_classification = split_class_numba
    best_split_gradient = split_grad_numba
else:  # pragma: no cover - exercised via the env flag in tests
    split_class_numba = None
    split_grad_numba = None
    best_split_classification = split_class_numpy
    best_split_gradient = split_grad_numpy


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
