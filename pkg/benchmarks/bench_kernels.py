"""Benchmark the numba split kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 500,2000] [--features 50,400]

The two paths return identical splits (asserted here); the point of the
table is the speed ratio on node-splitting workloads shaped like the
boosted-TF-IDF baseline (many features) and the layout-feature forest
(few features).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from codestylo import kernels
from codestylo.baselines import BoostedTreesModel


def _time(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_split_kernels(n: int, f: int, rng: np.random.Generator) -> list[tuple[str, float, float]]:
    X = rng.normal(size=(n, f))
    sort_idx = np.argsort(X, axis=0, kind="stable").astype(np.int64)
    y = rng.integers(0, 2, size=n).astype(np.int64)
    in_node = rng.random(n) < 0.7
    feats = np.arange(f, dtype=np.int64)
    g = rng.normal(size=n)
    h = rng.uniform(0.01, 0.25, size=n)

    rows = []
    if kernels.split_class_numba is not None:
        got_nb = kernels.split_class_numba(X, sort_idx, in_node, feats, y, 1, True)
        got_np = kernels.split_class_numpy(X, sort_idx, in_node, feats, y, 1, True)
        assert got_nb[0] == got_np[0], "paths disagree on classification split"
        t_nb = _time(lambda: kernels.split_class_numba(X, sort_idx, in_node, feats, y, 1, True))
        t_np = _time(lambda: kernels.split_class_numpy(X, sort_idx, in_node, feats, y, 1, True))
        rows.append((f"class split n={n} f={f}", t_nb, t_np))

        got_nb = kernels.split_grad_numba(X, sort_idx, in_node, feats, g, h, 1, 1.0)
        got_np = kernels.split_grad_numpy(X, sort_idx, in_node, feats, g, h, 1, 1.0)
        assert got_nb[0] == got_np[0], "paths disagree on gradient split"
        t_nb = _time(lambda: kernels.split_grad_numba(X, sort_idx, in_node, feats, g, h, 1, 1.0))
        t_np = _time(lambda: kernels.split_grad_numpy(X, sort_idx, in_node, feats, g, h, 1, 1.0))
        rows.append((f"grad split  n={n} f={f}", t_nb, t_np))
    return rows


def bench_boosted_fit(n: int, f: int, rng: np.random.Generator) -> list[tuple[str, float, float]]:
    X = rng.normal(size=(n, f))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int64)

    def fit_with(backend):
        saved = kernels.best_split_gradient
        kernels.best_split_gradient = backend
        try:
            BoostedTreesModel(n_rounds=40, max_depth=4).fit(X, y)
        finally:
            kernels.best_split_gradient = saved

    rows = []
    if kernels.split_grad_numba is not None:
        t_nb = _time(lambda: fit_with(kernels.split_grad_numba), repeats=2)
        t_np = _time(lambda: fit_with(kernels.split_grad_numpy), repeats=2)
        rows.append((f"boosted fit n={n} f={f} (40 rounds)", t_nb, t_np))
    return rows


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="500,2000")
    parser.add_argument("--features", default="50,400")
    args = parser.parse_args()

    if not kernels.NUMBA_ENABLED:
        print("numba is disabled (CODESTYLO_NO_NUMBA or missing install);"
              " nothing to compare against.")
        return 1

    sizes = [int(s) for s in args.sizes.split(",")]
    features = [int(s) for s in args.features.split(",")]
    rng = np.random.default_rng(0)

    # trigger jit compilation outside the timed region
    bench_split_kernels(64, 4, rng)

    rows: list[tuple[str, float, float]] = []
    for n in sizes:
        for f in features:
            rows.extend(bench_split_kernels(n, f, rng))
    rows.extend(bench_boosted_fit(600, 300, rng))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, t_nb, t_np in rows:
        print(f"{name.ljust(width)}  {t_nb * 1e3:>8.2f}ms  {t_np * 1e3:>8.2f}ms  {t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
