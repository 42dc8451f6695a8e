"""One-way ANOVA and Levene/Brown-Forsythe tests with an own F-tail kernel.

P-values come from the regularized incomplete beta function evaluated by a
modified-Lentz continued fraction with the usual symmetry switch, accurate
to well below 1e-10 absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from corrnet.marketdata import ValidationError

_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_CF_TINY = 1e-300


@dataclass(frozen=True)
class TestReport:
    statistic: float
    df1: int
    df2: int
    p_value: float
    center: str | None = None  # Levene only: "mean" or "median"


def _check_groups(groups) -> list[np.ndarray]:
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValidationError("need at least 2 groups")
    for g in arrays:
        if g.ndim != 1 or g.size < 2:
            raise ValidationError("every group needs at least 2 observations")
    return arrays


def _f_statistic(arrays: list[np.ndarray]) -> tuple[float, int, int]:
    n_total = sum(g.size for g in arrays)
    n_groups = len(arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ssw = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df1, df2 = n_groups - 1, n_total - n_groups
    if ssw == 0.0:
        if ssb == 0.0:
            raise ValidationError("all observations identical; F undefined")
        return math.inf, df1, df2
    return float((ssb / df1) / (ssw / df2)), df1, df2


def anova_oneway(groups) -> TestReport:
    """Classic one-way F test for equal group means.

    Zero within-group variance with unequal means yields the degenerate
    statistic inf with p = 0.
    """
    arrays = _check_groups(groups)
    f, df1, df2 = _f_statistic(arrays)
    p = 0.0 if math.isinf(f) else f_upper_tail(f, df1, df2)
    return TestReport(statistic=f, df1=df1, df2=df2, p_value=p)


def levene(groups, center: str = "median") -> TestReport:
    """Equality-of-spread test: ANOVA on absolute deviations from the center.

    center="median" is the Brown-Forsythe variant (the default), "mean" the
    original Levene form.  Identical spreads in every group give the exact
    limit W = 0, p = 1.
    """
    if center not in ("mean", "median"):
        raise ValidationError(f"center must be 'mean' or 'median', got {center!r}")
    arrays = _check_groups(groups)
    centre_fn = np.mean if center == "mean" else np.median
    transformed = [np.abs(g - centre_fn(g)) for g in arrays]
    n_total = sum(g.size for g in transformed)
    df1, df2 = len(arrays) - 1, n_total - len(arrays)
    pooled = np.concatenate(transformed)
    if np.ptp(pooled) == 0.0:
        return TestReport(statistic=0.0, df1=df1, df2=df2, p_value=1.0, center=center)
    w, df1, df2 = _f_statistic(transformed)
    p = 0.0 if math.isinf(w) else f_upper_tail(w, df1, df2)
    return TestReport(statistic=w, df1=df1, df2=df2, p_value=p, center=center)


def f_upper_tail(f: float, df1: int, df2: int) -> float:
    """P(F >= f) for the F distribution with df1, df2 degrees of freedom."""
    if df1 < 1 or df2 < 1:
        raise ValidationError("degrees of freedom must be >= 1")
    if f < 0:
        raise ValidationError("F statistic must be non-negative")
    if f == 0.0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return _reg_inc_beta(df2 / 2.0, df1 / 2.0, x)


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) by continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")
