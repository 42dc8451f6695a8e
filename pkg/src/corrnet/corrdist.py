"""Correlation estimation, the correlation-to-distance transform, and summary stats.

Distances use d = sqrt(2(1 - rho)), so perfectly correlated stocks sit at
distance 0 and perfectly anti-correlated ones at distance 2.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from corrnet.marketdata import ReturnMatrix, ValidationError

_SYMMETRY_TOL = 1e-12


def _validated_square(tickers, values, name):
    m = np.asarray(values, dtype=float)
    n = len(tickers)
    if m.shape != (n, n):
        raise ValidationError(f"{name}: expected {n}x{n} matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name}: non-finite entries")
    if np.abs(m - m.T).max(initial=0.0) > _SYMMETRY_TOL:
        raise ValidationError(f"{name}: not symmetric to {_SYMMETRY_TOL}")
    # Force exact symmetry so downstream tie-breaking is deterministic.
    m = (m + m.T) / 2.0
    m.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    tickers: tuple[str, ...]
    rho: np.ndarray

    def __post_init__(self):
        m = _validated_square(self.tickers, self.rho, "correlation matrix")
        if np.abs(np.diag(m) - 1.0).max(initial=0.0) > _SYMMETRY_TOL:
            raise ValidationError("correlation matrix: diagonal must be 1")
        if np.abs(m).max(initial=0.0) > 1.0 + _SYMMETRY_TOL:
            raise ValidationError("correlation matrix: entries must lie in [-1, 1]")
        object.__setattr__(self, "rho", m)

    @property
    def n(self) -> int:
        return len(self.tickers)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    tickers: tuple[str, ...]
    d: np.ndarray

    def __post_init__(self):
        # Correlation-derived distances live in [0, 2]; generic split metrics
        # may exceed 2, so only non-negativity is enforced here.
        m = _validated_square(self.tickers, self.d, "distance matrix")
        if np.abs(np.diag(m)).max(initial=0.0) > _SYMMETRY_TOL:
            raise ValidationError("distance matrix: diagonal must be 0")
        if m.min(initial=0.0) < -_SYMMETRY_TOL:
            raise ValidationError("distance matrix: entries must be non-negative")
        m = m.copy()
        np.fill_diagonal(m, 0.0)
        m.flags.writeable = False
        object.__setattr__(self, "d", m)

    @property
    def n(self) -> int:
        return len(self.tickers)


@dataclass(frozen=True)
class CorrelationSummary:
    mean: float
    std_dev: float
    min: float
    max: float
    negative_count: int
    total_pairs: int


def correlations(returns: ReturnMatrix) -> CorrelationMatrix:
    """Sample Pearson correlations of the return columns.

    Two-pass: subtract column means first, then normalize by the column
    standard deviations, which keeps the computation stable for returns
    with a large common drift.
    """
    x = np.asarray(returns.values, dtype=float)
    if x.shape[0] < 3:
        raise ValidationError(f"need >= 3 return windows, got {x.shape[0]}")
    centred = x - x.mean(axis=0)
    scale = np.sqrt((centred**2).sum(axis=0))
    flat = np.nonzero(scale == 0.0)[0]
    if flat.size:
        raise ValidationError(
            f"zero-variance returns for {returns.tickers[flat[0]]}"
        )
    rho = (centred.T @ centred) / np.outer(scale, scale)
    np.clip(rho, -1.0, 1.0, out=rho)
    rho = (rho + rho.T) / 2.0
    np.fill_diagonal(rho, 1.0)
    return CorrelationMatrix(tickers=returns.tickers, rho=rho)


def to_distance(rho: CorrelationMatrix) -> DistanceMatrix:
    """Elementwise d = sqrt(2(1 - rho)) with an exactly zero diagonal."""
    d = np.sqrt(np.maximum(2.0 * (1.0 - rho.rho), 0.0))
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(tickers=rho.tickers, d=d)


def summarize(rho: CorrelationMatrix) -> CorrelationSummary:
    """Moments and the negative count over the strict upper triangle."""
    n = rho.n
    if n < 2:
        raise ValidationError("need at least 2 tickers to summarize")
    iu = np.triu_indices(n, k=1)
    vals = rho.rho[iu]
    return CorrelationSummary(
        mean=float(vals.mean()),
        std_dev=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        min=float(vals.min()),
        max=float(vals.max()),
        negative_count=int((vals < 0).sum()),
        total_pairs=int(vals.size),
    )


def matrix_to_csv(tickers: Iterable[str], values: np.ndarray) -> str:
    """Write a labelled square matrix as CSV (first column = row ticker)."""
    names = list(tickers)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["ticker"] + names)
    for name, row in zip(names, np.asarray(values)):
        writer.writerow([name] + [repr(float(v)) for v in row])
    return out.getvalue()


def matrix_from_csv(source: TextIO | Iterable[str]) -> tuple[tuple[str, ...], np.ndarray]:
    reader = csv.reader(source)
    header = next(reader)
    names = tuple(h.strip() for h in header[1:])
    rows = []
    for row in reader:
        if not row:
            continue
        rows.append([float(v) for v in row[1:]])
    values = np.asarray(rows, dtype=float)
    if values.shape != (len(names), len(names)):
        raise ValidationError("matrix CSV shape mismatch")
    return names, values


def distance_to_csv(d: DistanceMatrix) -> str:
    return matrix_to_csv(d.tickers, d.d)


def distance_from_csv(source: TextIO | Iterable[str]) -> DistanceMatrix:
    names, values = matrix_from_csv(source)
    return DistanceMatrix(tickers=names, d=values)
