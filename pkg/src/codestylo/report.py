"""Report rendering: text tables, machine-readable grid records, plots.

Display convention for ``mean ± std`` marginals: the mean is rounded to the
printed precision, the spread (population std) is truncated, never rounded
up.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import MULTILINGUAL, ExperimentGrid, LengthStats
from .metrics import Metrics
from .stats import anova_oneway, welch_ttest


def fmt_mean_std(values: Sequence[float], decimals: int = 1) -> str:
    """Render mean ± population-std, e.g. ``84.1 ± 3.8``."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(np.mean(arr))
    std = float(np.std(arr))
    factor = 10.0**decimals
    std_trunc = math.floor(std * factor + 1e-9) / factor
    return f"{mean:.{decimals}f} ± {std_trunc:.{decimals}f}"


def _pct(x: float) -> float:
    return 100.0 * x


def write_grid_records(grid: ExperimentGrid, path: str | Path) -> None:
    """One JSON object per cell: dst, src, metrics, n."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for (dst, src), m in sorted(grid.cells.items()):
            fh.write(json.dumps({
                "dst": dst, "src": src,
                "accuracy": m.accuracy, "f1_ai": m.f1_ai,
                "f1_macro": m.f1_macro, "auc": m.auc, "n": m.n,
            }, ensure_ascii=False))
            fh.write("\n")
        for (dst, src), reason in sorted(grid.missing.items()):
            fh.write(json.dumps({"dst": dst, "src": src, "missing": reason},
                                ensure_ascii=False))
            fh.write("\n")


def read_grid_records(path: str | Path) -> ExperimentGrid:
    grid = ExperimentGrid(mode="stored")
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            key = (row["dst"], row["src"])
            if "missing" in row:
                grid.missing[key] = row["missing"]
                continue
            grid.cells[key] = Metrics(
                accuracy=row["accuracy"], f1_ai=row["f1_ai"],
                f1_macro=row["f1_macro"], auc=row.get("auc"), n=row["n"],
            )
    if all(src == MULTILINGUAL for _, src in grid.cells):
        grid.mode = MULTILINGUAL
    elif grid.cells:
        grid.mode = "monolingual"
    return grid


def render_grid_table(grid: ExperimentGrid) -> str:
    """Text table of accuracies (%): provenance rows x language columns."""
    lines: list[str] = []
    if grid.mode == MULTILINGUAL or all(src == MULTILINGUAL for _, src in grid.cells):
        langs = grid.languages
        header = ["metric"] + langs + ["avg ± std"]
        rows = []
        for metric_name, getter in (
            ("accuracy", lambda m: m.accuracy),
            ("f1", lambda m: m.f1_ai),
            ("auc", lambda m: m.auc),
        ):
            values = []
            for lang in langs:
                m = grid.cells.get((lang, MULTILINGUAL))
                v = getter(m) if m is not None else None
                values.append(v)
            present = [_pct(v) for v in values if v is not None]
            row = [metric_name] + [
                f"{_pct(v):.1f}" if v is not None else "-" for v in values
            ] + [fmt_mean_std(present) if present else "-"]
            rows.append(row)
        lines.extend(_format_rows([header] + rows))
        return "\n".join(lines)

    langs = grid.languages
    provs = grid.provenances
    header = ["prov \\ lang"] + langs + ["prov acc (avg ± std)"]
    rows = []
    for src in provs:
        row = [src]
        for dst in langs:
            m = grid.cells.get((dst, src))
            row.append(f"{_pct(m.accuracy):.1f}" if m is not None else "-")
        row_vals = [_pct(v) for v in grid.accuracies_for_provenance(src)]
        row.append(fmt_mean_std(row_vals) if row_vals else "-")
        rows.append(row)
    marg = ["lang acc (avg ± std)"]
    for dst in langs:
        col_vals = [_pct(v) for v in grid.accuracies_for_language(dst)]
        marg.append(fmt_mean_std(col_vals) if col_vals else "-")
    marg.append("")
    rows.append(marg)
    lines.extend(_format_rows([header] + rows))
    if grid.missing:
        lines.append("")
        for (dst, src), reason in sorted(grid.missing.items()):
            lines.append(f"missing cell ({dst}, {src}): {reason}")
    return "\n".join(lines)


def render_length_table(stats: LengthStats) -> str:
    """Text table of snippet lengths by language with AI-vs-human Welch tests."""
    header = ["language", "all", "ai", "human", "t", "95% CI", "p"]
    rows = [header]
    for lang, entry in sorted(stats.per_language.items()):
        def cell(pair):
            return f"{pair[0]:.0f} ± {pair[1]:.0f}" if pair else "-"

        t = entry["ttest"]
        rows.append([
            lang, cell(entry["all"]), cell(entry["ai"]), cell(entry["human"]),
            f"{t.t_statistic:.2f}" if t else "-",
            f"{t.ci95_low:.0f} to {t.ci95_high:.0f}" if t else "-",
            _fmt_p(t.p_value) if t else (entry["flag"] or "-"),
        ])
    return "\n".join(_format_rows(rows))


def _fmt_p(p: float) -> str:
    return "<0.01" if p < 0.01 else f"{p:.2f}"


def render_hypothesis_table(
    mono_grid: ExperimentGrid,
    multi_grid: ExperimentGrid | None = None,
) -> str:
    """ANOVA across language and provenance accuracy groups, plus the
    multilingual-vs-monolingual Welch comparison when both grids exist."""
    rows = [["values", "t/F statistic", "95% CI", "p-value"]]
    lang_groups = [
        [_pct(v) for v in mono_grid.accuracies_for_language(dst)]
        for dst in mono_grid.languages
    ]
    prov_groups = [
        [_pct(v) for v in mono_grid.accuracies_for_provenance(src)]
        for src in mono_grid.provenances
    ]
    for name, groups in (("language accuracy (ANOVA)", lang_groups),
                         ("provenance accuracy (ANOVA)", prov_groups)):
        try:
            res = anova_oneway(groups)
            rows.append([name, f"{res.f_statistic:.2f}", "-", _fmt_p(res.p_value)])
        except Exception as exc:
            rows.append([name, "-", "-", f"skipped: {exc}"])
    if multi_grid is not None:
        multi = [_pct(m.accuracy) for _, m in sorted(multi_grid.cells.items())]
        mono_marg = [_pct(mean) for mean, _ in mono_grid.language_marginals().values()]
        try:
            res = welch_ttest(multi, mono_marg)
            rows.append([
                "multilingual comp. (t-test)",
                f"{res.t_statistic:.2f}",
                f"{res.ci95_low:.1f} to {res.ci95_high:.1f}",
                _fmt_p(res.p_value),
            ])
        except Exception as exc:
            rows.append(["multilingual comp. (t-test)", "-", "-", f"skipped: {exc}"])
    return "\n".join(_format_rows(rows))


def render_comparison_table(results: dict[str, dict[str, float]]) -> str:
    """Model-vs-baseline accuracy table: rows are models, columns languages."""
    langs = sorted({lang for cells in results.values() for lang in cells})
    rows = [["model"] + langs]
    for model in sorted(results):
        row = [model]
        for lang in langs:
            v = results[model].get(lang)
            row.append(f"{_pct(v):.1f}" if v is not None else "-")
        rows.append(row)
    return "\n".join(_format_rows(rows))


def plot_provenance_shift(report: dict, path: str | Path) -> Path:
    """Line plot of in-distribution vs shifted accuracy per language.

    Needs matplotlib (optional dependency).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    langs = sorted(report["per_language"])
    in_dist = [_pct(report["per_language"][lang]["in_distribution"]) for lang in langs]
    shifted = [_pct(report["per_language"][lang]["shifted_mean"]) for lang in langs]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(langs, in_dist, "--o", label=f"in-distribution ({report['best_provenance']})")
    ax.plot(langs, shifted, "-s", label="other provenances (mean)")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _format_rows(rows: list[list[str]]) -> list[str]:
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    out = []
    for r, row in enumerate(rows):
        out.append("  ".join(str(cell).ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            out.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return out
