"""Hypothesis tests: Welch and pooled t-tests, one-way ANOVA, and diagnostics.

Statistics are computed from first principles; only the distribution
functions (Student t and F tails) come from scipy.special. Documented
numerical tolerance for p-values: 1e-8 absolute.

Orientation convention: two-sample tests report the difference
``mean(b) - mean(a)`` and the matching confidence interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    ci95_low: float
    ci95_high: float
    p_value: float
    df: float
    mean_diff: float
    orientation: str = "mean(b) - mean(a)"


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    p_value: float
    df_between: int
    df_within: int


def _t_sf(t: float, df: float) -> float:
    # Upper tail of Student's t via the regularized incomplete beta function.
    return float(special.stdtr(df, -t))


def _t_ppf(q: float, df: float) -> float:
    return float(special.stdtrit(df, q))


def _f_sf(f: float, dfn: float, dfd: float) -> float:
    return float(special.fdtrc(dfn, dfd, f))


def _check_sample(name: str, x: np.ndarray) -> None:
    if x.size < 2:
        raise StatsError(f"sample {name} needs at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise StatsError(f"sample {name} contains non-finite values")


def welch_ttest(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Welch's unequal-variance t-test with Satterthwaite degrees of freedom.

    t = (mean(b) - mean(a)) / sqrt(va/na + vb/nb), two-sided p-value,
    and the (1 - alpha) CI on mean(b) - mean(a).
    """
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    _check_sample("a", xa)
    _check_sample("b", xb)
    na, nb = xa.size, xb.size
    va = float(np.var(xa, ddof=1))
    vb = float(np.var(xb, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise StatsError("both samples have zero variance; t-test is degenerate")
    sa2, sb2 = va / na, vb / nb
    se = math.sqrt(sa2 + sb2)
    diff = float(np.mean(xb) - np.mean(xa))
    t = diff / se
    df_num = (sa2 + sb2) ** 2
    df_den = 0.0
    if va > 0.0:
        df_den += sa2**2 / (na - 1)
    if vb > 0.0:
        df_den += sb2**2 / (nb - 1)
    df = df_num / df_den
    p = 2.0 * _t_sf(abs(t), df)
    tcrit = _t_ppf(1.0 - alpha / 2.0, df)
    return TTestResult(
        t_statistic=t,
        ci95_low=diff - tcrit * se,
        ci95_high=diff + tcrit * se,
        p_value=min(p, 1.0),
        df=df,
        mean_diff=diff,
    )


def student_ttest(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Pooled-variance two-sample t-test (classical equal-variance form)."""
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    _check_sample("a", xa)
    _check_sample("b", xb)
    na, nb = xa.size, xb.size
    va = float(np.var(xa, ddof=1))
    vb = float(np.var(xb, ddof=1))
    df = na + nb - 2
    sp2 = ((na - 1) * va + (nb - 1) * vb) / df
    if sp2 == 0.0:
        raise StatsError("pooled variance is zero; t-test is degenerate")
    se = math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    diff = float(np.mean(xb) - np.mean(xa))
    t = diff / se
    p = 2.0 * _t_sf(abs(t), df)
    tcrit = _t_ppf(1.0 - alpha / 2.0, df)
    return TTestResult(
        t_statistic=t,
        ci95_low=diff - tcrit * se,
        ci95_high=diff + tcrit * se,
        p_value=min(p, 1.0),
        df=float(df),
        mean_diff=diff,
    )


def anova_oneway(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA: F = between-group mean square / within-group mean square."""
    if len(groups) < 2:
        raise StatsError(f"ANOVA needs at least 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    for i, x in enumerate(arrays):
        _check_sample(f"group {i}", x)
    all_values = np.concatenate(arrays)
    grand_mean = float(np.mean(all_values))
    ss_between = sum(x.size * (float(np.mean(x)) - grand_mean) ** 2 for x in arrays)
    ss_within = sum(float(np.sum((x - np.mean(x)) ** 2)) for x in arrays)
    df_between = len(arrays) - 1
    df_within = all_values.size - len(arrays)
    if ss_within == 0.0:
        raise StatsError("zero within-group variance; F is undefined")
    f = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(
        f_statistic=f,
        p_value=_f_sf(f, df_between, df_within),
        df_between=df_between,
        df_within=df_within,
    )


def normality_variance_checks(samples: Sequence[Sequence[float]]) -> dict:
    """Advisory diagnostics: Shapiro-Wilk normality per sample and
    Brown-Forsythe (median-centered Levene) variance homogeneity across samples.

    Returns a dict naming each procedure with its statistic, p-value, and
    flags; never raises on degenerate inputs, it flags them instead.
    """
    from scipy import stats as sps

    report: dict = {"normality": [], "homogeneity": None}
    arrays = [np.asarray(s, dtype=np.float64) for s in samples]
    for i, x in enumerate(arrays):
        entry: dict = {"sample": i, "procedure": "shapiro-wilk", "n": int(x.size)}
        if x.size < 3:
            entry["flag"] = "too few values for a normality test"
        elif float(np.var(x)) == 0.0:
            entry["flag"] = "constant sample; normality undefined"
        else:
            stat, p = sps.shapiro(x)
            entry.update({"statistic": float(stat), "p_value": float(p)})
        report["normality"].append(entry)

    eligible = [x for x in arrays if x.size >= 2]
    if len(eligible) >= 2:
        centered = [np.abs(x - np.median(x)) for x in eligible]
        try:
            result = anova_oneway(centered)
            report["homogeneity"] = {
                "procedure": "brown-forsythe",
                "statistic": result.f_statistic,
                "p_value": result.p_value,
            }
        except StatsError as exc:
            report["homogeneity"] = {"procedure": "brown-forsythe", "flag": str(exc)}
    else:
        report["homogeneity"] = {
            "procedure": "brown-forsythe",
            "flag": "need at least two samples of size >= 2",
        }
    return report
